use proptest::prelude::*;
use qsim_core::similarity::{bert_score, cosine_similarity, jaccard_similarity};
use qsim_core::text::{
    flesch_kincaid_from_counts, flesch_kincaid_grade, query_length_terms, tokenize,
    type_token_ratio, unique_term_count,
};

fn query() -> impl Strategy<Value = String> {
    proptest::collection::vec("[A-Za-z]{1,10}[.,!?]?", 1..12).prop_map(|w| w.join(" "))
}

fn rows(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, dim), 1..6)
}

#[test]
fn flesch_kincaid_hand_values() {
    let fk: f64 = flesch_kincaid_grade(&tokenize("information retrieval evaluation").unwrap());
    // 3 words, 1 sentence; vowel groups in-fo-ma-tio-n, re-trie-va-l, e-va-lua-tio-n = 4 + 3 + 4
    let want = 0.39 * 3.0 + 11.8 * 11.0 / 3.0 - 15.59;
    assert!((fk - want).abs() < 1e-12);
}

proptest! {
    #[test]
    fn tokenization_is_idempotent(q in query()) {
        let t = tokenize(&q).unwrap();
        let again = tokenize(&t.tokens.join(" ")).unwrap();
        prop_assert_eq!(&again.tokens, &t.tokens);
    }

    #[test]
    fn ttr_is_bounded(q in query()) {
        let t = tokenize(&q).unwrap();
        let ttr: f64 = type_token_ratio(&t);
        prop_assert!(ttr > 0.0 && ttr <= 1.0);
        prop_assert!(unique_term_count(&t) <= query_length_terms(&t));
    }

    #[test]
    fn flesch_kincaid_depends_on_ratios_only(w in 1u32..50, s in 1u32..10, syl in 1u32..150, k in 1u32..20) {
        let a: f64 = flesch_kincaid_from_counts(w.into(), s.into(), syl.into());
        let b: f64 = flesch_kincaid_from_counts((w * k).into(), (s * k).into(), (syl * k).into());
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn jaccard_is_symmetric_and_reflexive(a in query(), b in query()) {
        let (ta, tb) = (tokenize(&a).unwrap(), tokenize(&b).unwrap());
        prop_assert_eq!(jaccard_similarity::<f64>(&ta, &tb), jaccard_similarity(&tb, &ta));
        prop_assert_eq!(jaccard_similarity::<f64>(&ta, &ta), Some(1.0));
    }

    #[test]
    fn cosine_is_scale_invariant(v in proptest::collection::vec(-10.0f64..10.0, 1..16), w in proptest::collection::vec(-10.0f64..10.0, 16), c in 0.01f64..100.0) {
        let w = &w[..v.len()];
        let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
        match (cosine_similarity(&v, w).unwrap(), cosine_similarity(&scaled, w).unwrap()) {
            (Some(a), Some(b)) => {
                prop_assert!((a - b).abs() < 1e-9);
                prop_assert!((-1.0..=1.0).contains(&a));
            }
            (a, b) => prop_assert_eq!(a.is_some(), b.is_some()),
        }
    }

    #[test]
    fn bert_score_swaps_precision_and_recall(a in rows(4), b in rows(4)) {
        let ab = bert_score(&a, &b).unwrap();
        let ba = bert_score(&b, &a).unwrap();
        if let (Some(ab), Some(ba)) = (ab, ba) {
            prop_assert_eq!(ab.precision, ba.recall);
            prop_assert_eq!(ab.recall, ba.precision);
            prop_assert!((ab.f1 - ba.f1).abs() < 1e-15);
        }
    }
}
