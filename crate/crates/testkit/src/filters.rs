//! Random filter expressions and a per-document brute-force evaluator.

use std::collections::BTreeSet;

use atlas_core::atlas::FilterExpr;
use rand::Rng;

/// What a generated expression may reference.
#[derive(Debug, Clone, Default)]
pub struct Inventory {
    pub topics: Vec<String>,
    pub elements: Vec<String>,
    pub phrases: Vec<String>,
    pub labels: Vec<String>,
}

pub fn random_term(r: &mut impl Rng, inv: &Inventory) -> FilterExpr {
    loop {
        let pick = |r: &mut _, v: &[String]| v[Rng::gen_range(r, 0..v.len())].clone();
        match r.gen_range(0..9) {
            0 | 1 if !inv.topics.is_empty() => return FilterExpr::Topic(pick(r, &inv.topics)),
            2..=4 if !inv.elements.is_empty() => return FilterExpr::Element(pick(r, &inv.elements)),
            5 | 6 if !inv.phrases.is_empty() => return FilterExpr::Phrase(pick(r, &inv.phrases)),
            7 if !inv.labels.is_empty() => return FilterExpr::Caption(pick(r, &inv.labels)),
            8 => return FilterExpr::All,
            _ => {}
        }
    }
}

/// Random tree of depth at most `depth`.
pub fn random_expr(r: &mut impl Rng, inv: &Inventory, depth: usize) -> FilterExpr {
    if depth == 0 || r.gen_bool(0.3) {
        return random_term(r, inv);
    }
    match r.gen_range(0..3) {
        0 => FilterExpr::not(random_expr(r, inv, depth - 1)),
        k => {
            let items = (0..r.gen_range(2..=3)).map(|_| random_expr(r, inv, depth - 1)).collect();
            if k == 1 {
                FilterExpr::And(items)
            } else {
                FilterExpr::Or(items)
            }
        }
    }
}

/// Everything the brute-force evaluator knows about one document.
#[derive(Debug, Clone)]
pub struct DocFacts {
    pub doc_id: String,
    pub topic: String,
    /// `topic:<n>` also matches by id.
    pub topic_id: usize,
    pub elements: BTreeSet<String>,
    pub abstract_text: String,
    pub captions: Vec<(String, Option<String>)>,
}

pub fn eval(e: &FilterExpr, d: &DocFacts) -> bool {
    match e {
        FilterExpr::All => true,
        FilterExpr::Topic(t) => d.topic.eq_ignore_ascii_case(t) || t.parse::<usize>() == Ok(d.topic_id),
        FilterExpr::Element(s) => d.elements.contains(s),
        FilterExpr::Phrase(p) => d.abstract_text.to_lowercase().contains(&p.to_lowercase()),
        FilterExpr::Caption(l) => d.captions.iter().any(|(_, cl)| cl.as_deref() == Some(l.as_str())),
        FilterExpr::Not(inner) => !eval(inner, d),
        FilterExpr::And(items) => items.iter().all(|i| eval(i, d)),
        FilterExpr::Or(items) => items.iter().any(|i| eval(i, d)),
    }
}

fn collect_positive(e: &FilterExpr, positive: bool, out: &mut BTreeSet<String>) {
    match e {
        FilterExpr::Caption(l) if positive => {
            out.insert(l.clone());
        }
        FilterExpr::Not(inner) => collect_positive(inner, !positive, out),
        FilterExpr::And(items) | FilterExpr::Or(items) => items.iter().for_each(|i| collect_positive(i, positive, out)),
        _ => {}
    }
}

/// `(doc_ids, caption_ids)` by scanning every document.
pub fn brute_force(e: &FilterExpr, docs: &[DocFacts]) -> (Vec<String>, Vec<String>) {
    let mut labels = BTreeSet::new();
    collect_positive(e, true, &mut labels);
    let mut ids = Vec::new();
    let mut caps = Vec::new();
    for d in docs.iter().filter(|d| eval(e, d)) {
        ids.push(d.doc_id.clone());
        for (cid, l) in &d.captions {
            if labels.is_empty() || l.as_ref().is_some_and(|l| labels.contains(l)) {
                caps.push(cid.clone());
            }
        }
    }
    (ids, caps)
}
