use atlas_core::chemparse::{extract_species, parse_formula, Lexicon};
use atlas_testkit::chem;
use proptest::prelude::*;

#[test]
fn golden_corpus_matches_exactly() {
    let lex = Lexicon::english();
    assert_eq!(chem::golden().len(), 50);
    let bad = chem::mismatches(&lex);
    assert!(bad.is_empty(), "{bad:#?}");
}

fn formula_like() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop_oneof![
            Just("Si".to_string()),
            Just("O".to_string()),
            Just("Ca".to_string()),
            Just("Na".to_string()),
            Just("(".to_string()),
            Just(")".to_string()),
            Just("[".to_string()),
            Just("]".to_string()),
            Just("-".to_string()),
            Just("·".to_string()),
            Just("+".to_string()),
            Just("³⁺".to_string()),
            Just("₂".to_string()),
            Just(".".to_string()),
            (0u32..2_000_000_000).prop_map(|n| n.to_string()),
            "[A-Za-z]{1,3}",
        ],
        0..12,
    )
    .prop_map(|parts| parts.concat())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn arbitrary_strings_never_panic(s in any::<String>()) {
        let _ = parse_formula(&s);
        let _ = extract_species(&s, &Lexicon::english());
    }

    #[test]
    fn formula_fragments_never_panic(s in formula_like()) {
        let _ = parse_formula(&s);
        let _ = extract_species(&s, &Lexicon::english());
    }

    #[test]
    fn canonical_formula_round_trips(s in formula_like()) {
        if let Ok(bag) = parse_formula(&s) {
            if let Some(canon) = bag.canonical_formula() {
                let again = parse_formula(&canon).unwrap();
                prop_assert_eq!(&again, &bag);
                prop_assert_eq!(again.canonical_formula().unwrap(), canon);
            }
        }
    }
}

#[test]
fn huge_counts_overflow_cleanly() {
    assert!(parse_formula("((((H999999999)999999999)999999999)999999999)999999999").is_err());
    let deep = format!("{}H{}", "(".repeat(40), ")".repeat(40));
    assert!(parse_formula(&deep).is_err());
}
