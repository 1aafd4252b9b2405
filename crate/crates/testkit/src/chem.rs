//! Golden chemical-species fixture.

use std::collections::BTreeSet;

use atlas_core::chemparse::{extract_species, normalize_species, Lexicon};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
pub struct GoldenEntry {
    pub input: String,
    /// `species`: one name or formula. `text`: free text to scan.
    pub mode: String,
    pub elements: BTreeSet<String>,
}

pub fn golden() -> Vec<GoldenEntry> {
    serde_json::from_str(include_str!("../data/chem_golden.json")).expect("golden fixture parses")
}

/// Element symbols the library finds for an entry; parse failures give `None`.
pub fn found_elements(entry: &GoldenEntry, lexicon: &Lexicon) -> Option<BTreeSet<String>> {
    match entry.mode.as_str() {
        "species" => normalize_species(&entry.input, lexicon).ok().map(|b| b.elements().into_iter().map(|e| e.symbol().to_string()).collect()),
        "text" => Some(
            extract_species(&entry.input, lexicon)
                .into_iter()
                .flat_map(|s| s.elements.elements().into_iter().map(|e| e.symbol().to_string()).collect::<Vec<_>>())
                .collect(),
        ),
        other => panic!("unknown golden mode {other:?}"),
    }
}

/// Entries whose element set differs, with what was found.
pub fn mismatches(lexicon: &Lexicon) -> Vec<(GoldenEntry, Option<BTreeSet<String>>)> {
    golden()
        .into_iter()
        .filter_map(|e| {
            let found = found_elements(&e, lexicon);
            (found.as_ref() != Some(&e.elements)).then_some((e, found))
        })
        .collect()
}
