mod support;

use proptest::prelude::*;
use qsim_core::retrieval::{
    average_precision, ndcg_at_k, parse_qrels, precision_at_k, recall_at_k, reciprocal_rank, Qrels,
    RankedList,
};
use support::*;

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() <= 1e-12,
        (None, None) => true,
        _ => false,
    }
}

fn setup(c: &MetricCase) -> (RankedList, Qrels) {
    let mut q = Qrels::new();
    for (d, &g) in &c.grades {
        q.insert("t", d.clone(), g);
    }
    // a topic with no judgments at all must still be known to the qrels
    q.insert("t", "__unjudged_sentinel__", 0);
    (RankedList::new("t", c.ranking.clone()).unwrap(), q)
}

#[test]
fn metrics_match_brute_force_definitions() {
    let mut rng = rng(20240601);
    for case_no in 0..500 {
        let c = metric_case(&mut rng, 50, 3);
        let (r, q) = setup(&c);
        assert!(
            close(precision_at_k(&r, &q, c.k), Some(oracle_precision(&c))),
            "P case {case_no}"
        );
        assert!(
            close(recall_at_k(&r, &q, c.k), oracle_recall(&c)),
            "R case {case_no}"
        );
        assert!(
            close(reciprocal_rank(&r, &q), Some(oracle_rr(&c))),
            "RR case {case_no}"
        );
        assert!(
            close(average_precision(&r, &q), oracle_ap(&c)),
            "AP case {case_no}"
        );
        assert!(
            close(ndcg_at_k(&r, &q, c.k), oracle_ndcg(&c)),
            "nDCG case {case_no}"
        );
    }
}

#[test]
fn unknown_topic_is_undefined() {
    let q = parse_qrels("t1 0 d1 1\n").unwrap();
    let r = RankedList::new("t2", vec!["d1".to_string()]).unwrap();
    assert_eq!(precision_at_k::<f64>(&r, &q, 5), None);
    assert_eq!(ndcg_at_k::<f64>(&r, &q, 5), None);
}

proptest! {
    #[test]
    fn metrics_are_bounded(seed in any::<u64>()) {
        let c = metric_case(&mut rng(seed), 30, 3);
        let (r, q) = setup(&c);
        for v in [
            precision_at_k(&r, &q, c.k),
            recall_at_k(&r, &q, c.k),
            reciprocal_rank(&r, &q),
            average_precision(&r, &q),
            ndcg_at_k::<f64>(&r, &q, c.k),
        ].into_iter().flatten() {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn recall_is_monotone_in_k(seed in any::<u64>()) {
        let c = metric_case(&mut rng(seed), 30, 3);
        let (r, q) = setup(&c);
        let mut last = 0.0;
        for k in 1..=35 {
            if let Some(v) = recall_at_k::<f64>(&r, &q, k) {
                prop_assert!(v >= last);
                last = v;
            }
        }
    }

    #[test]
    fn perfect_ranking_scores_one(grades in proptest::collection::vec(1u32..=3, 1..20)) {
        let mut q = Qrels::new();
        let mut docs: Vec<(String, u32)> = grades.iter().enumerate().map(|(i, &g)| (format!("d{i}"), g)).collect();
        for (d, g) in &docs {
            q.insert("t", d.clone(), *g);
        }
        docs.sort_by_key(|d| std::cmp::Reverse(d.1));
        let r = RankedList::new("t", docs.into_iter().map(|(d, _)| d).collect()).unwrap();
        prop_assert_eq!(ndcg_at_k::<f64>(&r, &q, grades.len()), Some(1.0));
        prop_assert_eq!(average_precision::<f64>(&r, &q), Some(1.0));
        prop_assert_eq!(reciprocal_rank::<f64>(&r, &q), Some(1.0));
    }
}
