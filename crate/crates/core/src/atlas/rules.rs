//! Rule-based caption labels.
//!
//! A pattern matches case-insensitively as a substring of the caption. A
//! pattern starting with `=` must match whole words instead, so `=TEM` hits
//! "TEM image" but not "temperature".

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AtlasError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRule {
    pub label: String,
    pub priority: i64,
    pub patterns: Vec<String>,
}

impl LabelRule {
    pub fn new<S: Into<String>>(label: &str, priority: i64, patterns: impl IntoIterator<Item = S>) -> Self {
        LabelRule { label: label.to_string(), priority, patterns: patterns.into_iter().map(Into::into).collect() }
    }

    pub fn matches(&self, text: &str) -> bool {
        let lower = text.to_lowercase();
        self.patterns.iter().any(|p| pattern_matches(p, &lower))
    }
}

fn pattern_matches(pattern: &str, lower_text: &str) -> bool {
    match pattern.strip_prefix('=') {
        Some(word) => contains_word(lower_text, &word.to_lowercase()),
        None => lower_text.contains(&pattern.to_lowercase()),
    }
}

fn contains_word(text: &str, word: &str) -> bool {
    if word.is_empty() {
        return false;
    }
    let is_word = |c: Option<char>| c.is_some_and(char::is_alphanumeric);
    text.match_indices(word).any(|(i, m)| !is_word(text[..i].chars().next_back()) && !is_word(text[i + m.len()..].chars().next()))
}

/// Validated rules, highest priority first; equal priorities keep file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    rules: Vec<LabelRule>,
}

impl RuleSet {
    pub fn new(mut rules: Vec<LabelRule>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &rules {
            if r.patterns.is_empty() || r.patterns.iter().any(|p| p.trim_start_matches('=').is_empty()) {
                return Err(AtlasError::Rules(format!("rule {:?} has an empty pattern list or pattern", r.label)));
            }
            if !seen.insert((r.label.clone(), r.priority)) {
                return Err(AtlasError::Rules(format!("duplicate rule ({:?}, {})", r.label, r.priority)));
            }
        }
        rules.sort_by(|a, b| b.priority.cmp(&a.priority));
        Ok(RuleSet { rules })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rules: Vec<LabelRule> = serde_json::from_str(text).map_err(|e| AtlasError::Rules(e.to_string()))?;
        Self::new(rules)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| AtlasError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn rules(&self) -> &[LabelRule] {
        &self.rules
    }

    /// Distinct labels in priority order.
    pub fn labels(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.rules.iter().map(|r| r.label.as_str()).filter(|l| seen.insert(*l)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rules).expect("rules serialize")
    }
}

/// Label of the highest-priority rule matching `text`.
pub fn label_caption<'r>(text: &str, rules: &'r RuleSet) -> Option<&'r str> {
    let lower = text.to_lowercase();
    rules.rules.iter().find(|r| r.patterns.iter().any(|p| pattern_matches(p, &lower))).map(|r| r.label.as_str())
}

/// Labels every caption of the corpus in [`crate::corpus::Corpus::captions`] order.
pub fn label_captions(corpus: &crate::corpus::Corpus, rules: &RuleSet) -> Vec<Option<String>> {
    corpus.captions().map(|(_, c)| label_caption(&c.text, rules).map(str::to_string)).collect()
}

/// Imaging and characterization labels. A reconstruction, not a canonical table.
pub fn default_rules() -> RuleSet {
    let table: &[(&str, i64, &[&str])] = &[
        ("SEM", 100, &["=sem", "scanning electron", "fesem", "fe-sem"]),
        ("TEM", 99, &["=tem", "=hrtem", "transmission electron"]),
        ("AFM", 98, &["=afm", "atomic force"]),
        ("XRD", 97, &["=xrd", "x-ray diffraction", "diffractogram", "diffraction pattern"]),
        ("EDX", 96, &["=edx", "=eds", "energy dispersive", "energy-dispersive"]),
        ("DSC", 95, &["=dsc", "differential scanning"]),
        ("DTA", 94, &["=dta", "differential thermal"]),
        ("PLE", 93, &["=ple", "excitation spectr"]),
        ("Fluorescence", 92, &["fluorescence"]),
        ("Luminescence", 91, &["luminescence", "photoluminescence", "=pl"]),
        ("Emission", 90, &["emission"]),
        ("Absorption", 89, &["absorption", "absorbance", "transmittance"]),
        ("Fracture", 80, &["fracture", "crack"]),
        ("Interface", 79, &["interface", "interfacial"]),
        ("Crystal", 70, &["crystal"]),
        ("Anneal", 60, &["anneal"]),
        ("Raman", 50, &["raman"]),
        ("FTIR", 49, &["=ftir", "infrared"]),
        ("NMR", 48, &["=nmr", "magic angle"]),
        ("Viscosity", 40, &["viscosity"]),
        ("Hardness", 39, &["hardness", "indentation"]),
    ];
    let rules = table.iter().map(|&(label, priority, patterns)| LabelRule::new(label, priority, patterns.iter().copied())).collect();
    RuleSet::new(rules).expect("default rules are valid")
}
