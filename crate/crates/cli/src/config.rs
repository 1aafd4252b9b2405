//! Pipeline configuration file.
//!
//! Relative paths resolve against the directory holding the config file.
//! Every randomized stage needs an explicit seed; a missing seed is a
//! validation error, never a clock-derived default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// JSON-lines or XML (`.xml`) article files, concatenated in order.
    pub corpus: Vec<PathBuf>,
    /// Stopword list; the bundled English list when absent.
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    /// Chemical lexicon; the bundled English lexicon when absent.
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
    /// Caption label rules; the default table when absent.
    #[serde(default)]
    pub rules: Option<PathBuf>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorizeParams {
    #[serde(default = "one")]
    pub min_df: usize,
}

impl Default for VectorizeParams {
    fn default() -> Self {
        VectorizeParams { min_df: 1 }
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelevanceParams {
    /// JSON-lines training records with `"label": 0|1`.
    pub labeled: PathBuf,
    #[serde(default = "default_lambda")]
    pub l2_lambda: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_train_ratio")]
    pub train_ratio: f64,
    /// Drop documents classified irrelevant; otherwise only tag them.
    #[serde(default = "yes")]
    pub filter: bool,
    pub seed: u64,
}

fn default_lambda() -> f64 {
    1e-4
}

fn default_max_iters() -> usize {
    2000
}

fn default_train_ratio() -> f64 {
    0.8
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdaParams {
    #[serde(default = "default_topics")]
    pub topics: usize,
    #[serde(default = "default_passes")]
    pub passes: usize,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "one")]
    pub min_df: usize,
    pub seed: u64,
}

fn default_topics() -> usize {
    15
}

fn default_passes() -> usize {
    500
}

fn default_beta() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TsneParams {
    #[serde(default = "default_perplexity")]
    pub perplexity: f64,
    #[serde(default = "default_iters")]
    pub iters: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    pub seed: u64,
}

fn default_perplexity() -> f64 {
    30.0
}

fn default_iters() -> usize {
    1000
}

fn default_learning_rate() -> f64 {
    200.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChemParams {
    /// Species whose element set occurs in fewer documents are ignored.
    #[serde(default = "one")]
    pub min_doc_freq: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    #[serde(default)]
    pub vectorize: VectorizeParams,
    #[serde(default)]
    pub relevance: Option<RelevanceParams>,
    pub lda: LdaParams,
    pub tsne: TsneParams,
    #[serde(default)]
    pub chem: ChemParams,
    /// Topic display names. A key is a topic id (`"3"`) or `@term`, naming
    /// the topic in which `term` has the highest probability.
    #[serde(default)]
    pub topic_names: BTreeMap<String, String>,
}

impl PipelineConfig {
    /// Reads, resolves and validates a config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let mut config: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        config.resolve_relative_to(path.parent().unwrap_or(Path::new(".")));
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_relative_to(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.paths.corpus.iter_mut().for_each(fix);
        for p in [&mut self.paths.stopwords, &mut self.paths.lexicon, &mut self.paths.rules].into_iter().flatten() {
            fix(p);
        }
        fix(&mut self.paths.output_dir);
        if let Some(r) = &mut self.relevance {
            fix(&mut r.labeled);
        }
    }

    /// Checks referenced files and parameter ranges.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Validation(m));
        if self.paths.corpus.is_empty() {
            return bad("paths.corpus lists no files".into());
        }
        let mut files: Vec<(&str, &PathBuf)> = self.paths.corpus.iter().map(|p| ("corpus", p)).collect();
        if let Some(p) = &self.paths.stopwords {
            files.push(("stopwords", p));
        }
        if let Some(p) = &self.paths.lexicon {
            files.push(("lexicon", p));
        }
        if let Some(p) = &self.paths.rules {
            files.push(("rules", p));
        }
        if let Some(r) = &self.relevance {
            files.push(("relevance.labeled", &r.labeled));
        }
        let missing: Vec<String> = files.iter().filter(|(_, p)| !p.is_file()).map(|(k, p)| format!("{k} file {} does not exist", p.display())).collect();
        if !missing.is_empty() {
            return bad(missing.join("; "));
        }
        if self.vectorize.min_df == 0 || self.lda.min_df == 0 || self.chem.min_doc_freq == 0 {
            return bad("min_df and min_doc_freq must be at least 1".into());
        }
        if self.lda.topics < 2 {
            return bad(format!("lda.topics must be at least 2, got {}", self.lda.topics));
        }
        if self.lda.passes == 0 {
            return bad("lda.passes must be positive".into());
        }
        if self.lda.alpha.is_some_and(|a| !(a > 0.0 && a.is_finite())) || !(self.lda.beta > 0.0 && self.lda.beta.is_finite()) {
            return bad("lda.alpha and lda.beta must be positive".into());
        }
        if !(self.tsne.perplexity > 0.0 && self.tsne.perplexity.is_finite()) || self.tsne.iters == 0 || !(self.tsne.learning_rate > 0.0) {
            return bad("tsne.perplexity, tsne.iters and tsne.learning_rate must be positive".into());
        }
        if let Some(r) = &self.relevance {
            if !(r.train_ratio > 0.0 && r.train_ratio < 1.0) || r.max_iters == 0 || !(r.l2_lambda >= 0.0) {
                return bad("relevance.train_ratio must lie in (0, 1), max_iters be positive, l2_lambda nonnegative".into());
            }
        }
        for key in self.topic_names.keys() {
            let ok = match key.strip_prefix('@') {
                Some(term) => !term.is_empty(),
                None => key.parse::<usize>().is_ok_and(|t| t < self.lda.topics),
            };
            if !ok {
                return bad(format!("topic_names key {key:?} is neither a topic id below {} nor @term", self.lda.topics));
            }
        }
        Ok(())
    }
}
