use atlas_core::atlas::{parse_filter, AtlasError, FilterExpr, QueryIndex};
use atlas_testkit::filters::{brute_force, random_expr};
use atlas_testkit::fixtures::{query_fixture, rng, QueryFixture};
use proptest::prelude::*;

fn index(f: &QueryFixture) -> QueryIndex {
    QueryIndex::from_parts(&f.corpus, &f.assignments, 4, &f.topic_names, f.markers.clone(), &f.caption_labels, Vec::new()).unwrap()
}

#[test]
fn random_expressions_match_brute_force() {
    let f = query_fixture(50, 1);
    let idx = index(&f);
    let facts = f.facts();
    let mut r = rng(2);
    let mut nonempty = 0;
    for _ in 0..500 {
        let e = random_expr(&mut r, &f.inventory, 4);
        // Go through the text form too, so the parser is exercised.
        let parsed = parse_filter(&e.to_string()).unwrap();
        assert_eq!(parsed, e);
        let got = idx.query(&parsed).unwrap();
        let (docs, caps) = brute_force(&e, &facts);
        assert_eq!(got.doc_ids, docs, "{e}");
        assert_eq!(got.caption_ids, caps, "{e}");
        nonempty += usize::from(!docs.is_empty() && docs.len() < facts.len());
    }
    // Guard against a degenerate generator.
    assert!(nonempty > 100, "{nonempty}");
}

#[test]
fn de_morgan() {
    let f = query_fixture(50, 3);
    let idx = index(&f);
    let mut r = rng(4);
    for _ in 0..200 {
        let a = random_expr(&mut r, &f.inventory, 3);
        let b = random_expr(&mut r, &f.inventory, 3);
        let lhs = FilterExpr::not(FilterExpr::And(vec![a.clone(), b.clone()]));
        let rhs = FilterExpr::Or(vec![FilterExpr::not(a.clone()), FilterExpr::not(b.clone())]);
        assert_eq!(idx.query(&lhs).unwrap().doc_ids, idx.query(&rhs).unwrap().doc_ids, "{a} / {b}");
        let lhs = FilterExpr::not(FilterExpr::Or(vec![a.clone(), b.clone()]));
        let rhs = FilterExpr::And(vec![FilterExpr::not(a), FilterExpr::not(b)]);
        assert_eq!(idx.query(&lhs).unwrap().doc_ids, idx.query(&rhs).unwrap().doc_ids);
    }
}

#[test]
fn fixed_examples() {
    let f = query_fixture(50, 5);
    let idx = index(&f);
    let all = idx.query_str("*").unwrap();
    assert_eq!(all.doc_ids.len(), 50);
    assert_eq!(all.caption_ids.len(), f.corpus.caption_count());
    assert!(idx.query_str("element:Si AND NOT element:Si").unwrap().doc_ids.is_empty());

    let q = idx.query_str("topic:bioactive AND element:F AND element:Cl").unwrap();
    let facts = f.facts();
    let expected: Vec<String> = facts
        .iter()
        .filter(|d| d.topic == "bioactive" && d.elements.contains("F") && d.elements.contains("Cl"))
        .map(|d| d.doc_id.clone())
        .collect();
    assert_eq!(q.doc_ids, expected);

    let q = idx.query_str("phrase:\"Solid State Synthesis\"").unwrap();
    assert!(q.doc_ids.iter().all(|id| f.corpus.get(id).unwrap().abstract_text.contains("solid state synthesis")));
    assert!(!q.doc_ids.is_empty());
}

#[test]
fn caption_terms_filter_caption_ids() {
    let f = query_fixture(50, 6);
    let idx = index(&f);
    let q = idx.query_str("caption:SEM").unwrap();
    let labels: std::collections::HashMap<String, Option<String>> =
        f.corpus.captions().map(|(_, c)| c.caption_id.clone()).zip(f.caption_labels.iter().cloned()).collect();
    assert!(!q.caption_ids.is_empty());
    assert!(q.caption_ids.iter().all(|c| labels[c].as_deref() == Some("SEM")));
    let neg = idx.query_str("NOT caption:SEM").unwrap();
    assert!(neg.caption_ids.iter().all(|c| labels[c].as_deref() != Some("SEM")));
}

#[test]
fn unknown_names_are_rejected() {
    let f = query_fixture(10, 7);
    let idx = index(&f);
    assert!(matches!(idx.query_str("element:Xx"), Err(AtlasError::UnknownElement(_))));
    assert!(matches!(idx.query_str("element:si"), Err(AtlasError::UnknownElement(_))));
    assert!(matches!(idx.query_str("topic:nonsense"), Err(AtlasError::UnknownTopic(_))));
    assert!(matches!(idx.query_str("topic:4"), Err(AtlasError::UnknownTopic(_))));
    assert!(matches!(idx.query_str("caption:Holography"), Err(AtlasError::UnknownLabel(_))));
    assert_eq!(idx.query_str("element:F AND (").unwrap_err().position(), Some(15));
}

proptest! {
    #[test]
    fn parser_never_panics(s in "[a-z:\"()* ANDORT\\\\]{0,40}") {
        let _ = parse_filter(&s);
    }

    #[test]
    fn display_round_trips(seed in any::<u64>()) {
        let f = query_fixture(1, 0);
        let mut r = rng(seed);
        let e = random_expr(&mut r, &f.inventory, 5);
        prop_assert_eq!(parse_filter(&e.to_string()).unwrap(), e);
    }
}
