use atlas_core::textproc::{pairwise_cosine_distance, vectorize_tfidf, TokenList, Vocabulary};
use atlas_testkit::naive;
use proptest::prelude::*;

fn corpus() -> impl Strategy<Value = Vec<TokenList>> {
    prop::collection::vec(prop::collection::vec(0u8..200, 0..40), 1..=50)
        .prop_map(|docs| docs.into_iter().map(|d| TokenList::new(d.into_iter().map(|t| format!("term{t}")))).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn matches_naive_reference(docs in corpus()) {
        let vocab = Vocabulary::build(&docs, 1).unwrap();
        let (terms, rows) = naive::tfidf(&docs);
        prop_assert_eq!(vocab.terms().iter().cloned().collect::<std::collections::BTreeSet<_>>(), terms.clone());
        for (doc, row) in docs.iter().zip(&rows) {
            let v = vectorize_tfidf::<f64>(doc, &vocab);
            for t in &terms {
                let expected = row.get(t).copied().unwrap_or(0.0);
                let got = v.get(vocab.id(t).unwrap());
                prop_assert_eq!(got.to_bits(), expected.to_bits(), "term {}", t);
            }
        }
    }

    #[test]
    fn cosine_distances_are_symmetric_and_bounded(docs in corpus()) {
        prop_assume!(docs.len() >= 2);
        let vocab = Vocabulary::build(&docs, 1).unwrap();
        let vs: Vec<_> = docs.iter().map(|d| vectorize_tfidf::<f64>(d, &vocab)).collect();
        let d = pairwise_cosine_distance(&vs).unwrap();
        for i in 0..d.len() {
            prop_assert_eq!(d.get(i, i), 0.0);
            for j in 0..d.len() {
                prop_assert!((0.0..=1.0).contains(&d.get(i, j)));
                prop_assert_eq!(d.get(i, j), d.get(j, i));
            }
        }
    }
}

#[test]
fn term_in_every_document_has_zero_weight() {
    let docs = vec![TokenList::new(["glass", "laser"]), TokenList::new(["glass"])];
    let vocab = Vocabulary::build(&docs, 1).unwrap();
    let v = vectorize_tfidf::<f64>(&docs[0], &vocab);
    assert_eq!(v.get(vocab.id("glass").unwrap()), 0.0);
    assert_eq!(v.get(vocab.id("laser").unwrap()), 2f64.ln());
}
