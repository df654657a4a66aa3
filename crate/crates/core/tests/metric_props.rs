mod support;

use hrli::eval::{
    evaluate, hit_at_k, mask_last, ndcg_at_k, outranks, rank_case, rank_of, top_k, EvalCase,
    RankingConfig, ScoreVector, TableScorer,
};
use proptest::prelude::*;
use support::oracle;

/// Scores drawn from a small grid so ties are frequent.
fn scores(n: usize) -> impl Strategy<Value = Vec<f32>> {
    prop::collection::vec(
        prop_oneof![(0i32..4).prop_map(|x| x as f32), -10.0f32..10.0],
        n,
    )
}

fn eval_set() -> impl Strategy<Value = (usize, Vec<(Vec<f32>, usize, usize)>)> {
    (2usize..=12).prop_flat_map(|n| {
        let case = (scores(n), 0..n, 0..n);
        (Just(n), prop::collection::vec(case, 1..=8))
    })
}

fn table(n: usize, cases: &[(Vec<f32>, usize, usize)]) -> (TableScorer, Vec<EvalCase>) {
    let mut t = TableScorer::new(n);
    let mut out = Vec::new();
    for (c, (s, gt, last)) in cases.iter().enumerate() {
        // prefix lengths differ per case, so table keys never collide
        let prefix = [vec![c % n; c + 1], vec![*last]].concat();
        t.insert(prefix.clone(), ScoreVector(s.clone()));
        out.push(EvalCase::new(c as u64, prefix, *gt).unwrap());
    }
    (t, out)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn evaluate_matches_brute_force((n, cases) in eval_set()) {
        let (scorer, eval_cases) = table(n, &cases);
        let report = evaluate(&scorer, &eval_cases, &RankingConfig::new(&[1, 3, 5], true).unwrap()).unwrap();
        for m in &report.metrics {
            let o = oracle::metrics(&cases, m.k);
            prop_assert_eq!(m.hit.to_bits(), o.hit.to_bits());
            prop_assert_eq!(m.hrli.to_bits(), o.hrli.to_bits());
            prop_assert_eq!(m.hit_star.unwrap().to_bits(), o.hit_star.to_bits());
            prop_assert_eq!(m.hrli_star.unwrap().to_bits(), o.hrli_star.to_bits());
            prop_assert!((m.ndcg - o.ndcg).abs() <= 1e-12);
            prop_assert!((m.ndcg_star.unwrap() - o.ndcg_star).abs() <= 1e-12);
            prop_assert_eq!(m.hrli_star, Some(0.0));
        }
    }

    #[test]
    fn rank_of_matches_full_sort(s in scores(12)) {
        let order = oracle::ranked(&s, None);
        for item in 0..12 {
            prop_assert_eq!(Some(rank_of(&s, item)), oracle::position(&order, item));
        }
        for k in 0..=13 {
            prop_assert_eq!(top_k(&s, k), order[..k.min(12)].to_vec());
        }
    }

    #[test]
    fn rank_shift_identity(s in scores(12), gt in 0usize..12, last in 0usize..12) {
        prop_assume!(gt != last);
        let r = rank_of(&s, gt);
        let r_star = rank_of(&mask_last(&s, last), gt);
        prop_assert_eq!(r_star, r - usize::from(outranks(&s, last, gt)));
        prop_assert_eq!(rank_of(&mask_last(&s, last), last), 12);
        prop_assert_eq!(mask_last(&mask_last(&s, last), last), mask_last(&s, last));
    }

    #[test]
    fn masking_never_hurts_without_coincident_cases((n, cases) in eval_set()) {
        let cases: Vec<_> = cases.into_iter().filter(|(_, g, l)| g != l).collect();
        prop_assume!(!cases.is_empty());
        let (scorer, eval_cases) = table(n, &cases);
        let report = evaluate(&scorer, &eval_cases, &RankingConfig::new(&[1, 3, 5], true).unwrap()).unwrap();
        prop_assert_eq!(report.n_gt_equals_last, 0);
        for m in &report.metrics {
            prop_assert!(m.hit_star.unwrap() >= m.hit);
            prop_assert!(m.ndcg_star.unwrap() >= m.ndcg);
        }
    }

    #[test]
    fn evaluation_is_order_invariant((n, cases) in eval_set(), seed in any::<u64>()) {
        let (scorer, eval_cases) = table(n, &cases);
        let cfg = RankingConfig::new(&[1, 3, 5], true).unwrap();
        let a = evaluate(&scorer, &eval_cases, &cfg).unwrap();
        let mut shuffled = eval_cases.clone();
        hrli::numerics::Rng::seeded(seed).shuffle(&mut shuffled);
        prop_assert_eq!(a, evaluate(&scorer, &shuffled, &cfg).unwrap());
    }

    #[test]
    fn hit_and_ndcg_shapes(rank in 1usize..40, k in 1usize..40) {
        prop_assert!(hit_at_k(rank, k) <= hit_at_k(rank, k + 1));
        prop_assert!(ndcg_at_k(rank, k) <= f64::from(hit_at_k(rank, k)));
    }

    #[test]
    fn ranked_result_ranks_agree((s, gt, last) in (scores(9), 0usize..9, 0usize..9)) {
        let case = EvalCase::new(0, vec![last], gt).unwrap();
        let r = rank_case(&s, &case, true);
        prop_assert_eq!(r.plain.gt == r.plain.last, gt == last);
        prop_assert_eq!(r.masked.unwrap().last, None);
    }
}

#[test]
fn figure_one_case() {
    // last item first, gt eleventh; masking lifts gt into the top ten
    let mut s = vec![0.0f32; 20];
    s[0] = 10.0;
    for (j, x) in s.iter_mut().enumerate().skip(1).take(10) {
        *x = 9.0 - j as f32 * 0.1;
    }
    let (last, gt) = (0, 10);
    assert_eq!(rank_of(&s, gt), 11);
    let mut t = TableScorer::new(20);
    t.insert(vec![last], ScoreVector(s));
    let case = EvalCase::new(0, vec![last], gt).unwrap();
    let m = &evaluate(&t, &[case], &RankingConfig::new(&[10], true).unwrap()).unwrap().metrics[0];
    assert_eq!((m.hit, m.hit_star, m.hrli), (0.0, Some(1.0), 1.0));
}
