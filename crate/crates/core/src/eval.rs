//! Full-catalog ranking and the metric suite.
//!
//! Every case is ranked against the whole catalog. Besides Hit@K and NDCG@K
//! for the ground-truth item, the suite reports HRLI@K, the fraction of cases
//! whose *last input item* lands in the Top-K:
//!
//! ```text
//! HRLI@K = |{cases : rank(last) <= K}| / |cases|
//! ```
//!
//! With masking on, the last item's score is replaced by a sentinel below
//! every finite score and the item is no longer a Top-K candidate; metrics
//! recomputed on that vector are the starred variants (Hit\*, NDCG\*, HRLI\*).
//!
//! Ranks use one total order everywhere: higher score first, ties broken by
//! ascending item index.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Score written over the last item by [`mask_last`]. Compares strictly
/// below every finite score.
pub const MASKED: f32 = f32::NEG_INFINITY;

pub const REPORT_FORMAT: &str = "hrli-metrics/1";

/// Relevance scores over the entire catalog for one case.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreVector(pub Vec<f32>);

impl ScoreVector {
    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }
}

impl From<Vec<f32>> for ScoreVector {
    fn from(v: Vec<f32>) -> Self {
        ScoreVector(v)
    }
}

impl std::ops::Deref for ScoreVector {
    type Target = [f32];
    fn deref(&self) -> &[f32] {
        &self.0
    }
}

/// Anything that scores a prefix against the full catalog.
pub trait Scorer {
    fn catalog_size(&self) -> usize;
    fn score(&self, prefix: &[usize]) -> Result<ScoreVector>;
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn catalog_size(&self) -> usize {
        (**self).catalog_size()
    }
    fn score(&self, prefix: &[usize]) -> Result<ScoreVector> {
        (**self).score(prefix)
    }
}

/// One evaluation instance: an input prefix, the held-out item and the final
/// prefix item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCase {
    pub case_id: u64,
    pub prefix: Vec<usize>,
    pub gt: usize,
    pub last: usize,
}

impl EvalCase {
    /// Builds a case whose `last` is taken from the prefix.
    pub fn new(case_id: u64, prefix: Vec<usize>, gt: usize) -> Result<Self> {
        let last = *prefix.last().ok_or(Error::Empty("prefix"))?;
        Ok(EvalCase {
            case_id,
            prefix,
            gt,
            last,
        })
    }

    pub fn validate(&self, catalog_size: usize) -> Result<()> {
        let Some(&final_item) = self.prefix.last() else {
            return Err(Error::Empty("prefix"));
        };
        if final_item != self.last {
            return Err(Error::Data(format!(
                "case {}: last {} differs from final prefix item {final_item}",
                self.case_id, self.last
            )));
        }
        let bad = self
            .prefix
            .iter()
            .copied()
            .chain([self.gt])
            .find(|&i| i >= catalog_size);
        match bad {
            Some(index) => Err(Error::ItemOutOfRange {
                index,
                catalog_size,
            }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingConfig {
    /// Cutoffs, ascending and distinct.
    pub ks: Vec<usize>,
    pub mask_last: bool,
    pub exclude_gt_equals_last: bool,
}

impl Default for RankingConfig {
    fn default() -> Self {
        RankingConfig {
            ks: vec![5, 10],
            mask_last: false,
            exclude_gt_equals_last: false,
        }
    }
}

impl RankingConfig {
    pub fn new(ks: &[usize], mask_last: bool) -> Result<Self> {
        let cfg = RankingConfig {
            ks: ks.to_vec(),
            mask_last,
            exclude_gt_equals_last: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ks.is_empty() {
            return Err(Error::Config("at least one cutoff K is required".into()));
        }
        if self.ks.contains(&0) {
            return Err(Error::Config("cutoffs must be at least 1".into()));
        }
        if self.ks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("cutoffs must be ascending and distinct".into()));
        }
        Ok(())
    }

    pub fn max_k(&self) -> usize {
        self.ks.last().copied().unwrap_or(0)
    }
}

/// True when item `a` is placed ahead of item `b`.
#[inline]
pub fn outranks(scores: &[f32], a: usize, b: usize) -> bool {
    let (sa, sb) = (scores[a], scores[b]);
    sa > sb || (sa == sb && a < b)
}

/// 1-based rank of `item` under the crate's total order.
pub fn rank_of(scores: &[f32], item: usize) -> usize {
    let s = scores[item];
    let mut rank = 1;
    for (j, &x) in scores.iter().enumerate() {
        if x > s || (x == s && j < item) {
            rank += 1;
        }
    }
    rank
}

/// Copy of `scores` with the last item pushed below every finite score.
pub fn mask_last(scores: &[f32], last: usize) -> ScoreVector {
    let mut masked = scores.to_vec();
    masked[last] = MASKED;
    ScoreVector(masked)
}

/// The `k` best items in rank order.
pub fn top_k(scores: &[f32], k: usize) -> Vec<usize> {
    let order = |a: &usize, b: &usize| {
        if outranks(scores, *a, *b) {
            Ordering::Less
        } else if outranks(scores, *b, *a) {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    };
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    let k = k.min(idx.len());
    if k == 0 {
        return Vec::new();
    }
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, order);
        idx.truncate(k);
    }
    idx.sort_unstable_by(order);
    idx
}

pub fn hit_at_k(rank: usize, k: usize) -> u8 {
    u8::from(rank <= k)
}

/// Single-relevant-item NDCG (ideal DCG is 1).
pub fn ndcg_at_k(rank: usize, k: usize) -> f64 {
    if rank <= k {
        1.0 / (1.0 + rank as f64).log2()
    } else {
        0.0
    }
}

/// Ranks of the ground truth and last item in one ordering. `None` means the
/// item cannot occupy any Top-K slot: it was masked, or it lies outside a
/// truncated ranked list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseRanks {
    pub gt: Option<usize>,
    pub last: Option<usize>,
}

impl CaseRanks {
    pub fn gt_in_top(&self, k: usize) -> bool {
        self.gt.is_some_and(|r| r <= k)
    }

    pub fn last_in_top(&self, k: usize) -> bool {
        self.last.is_some_and(|r| r <= k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedResult {
    pub case_id: u64,
    pub gt_equals_last: bool,
    pub plain: CaseRanks,
    /// Ranks after masking, when masking is enabled.
    pub masked: Option<CaseRanks>,
}

/// Ranks one case against a full score vector.
pub fn rank_case(scores: &[f32], case: &EvalCase, mask: bool) -> RankedResult {
    let plain = CaseRanks {
        gt: Some(rank_of(scores, case.gt)),
        last: Some(rank_of(scores, case.last)),
    };
    let gt_equals_last = case.gt == case.last;
    let masked = mask.then(|| {
        let masked = mask_last(scores, case.last);
        CaseRanks {
            gt: (!gt_equals_last).then(|| rank_of(&masked, case.gt)),
            last: None,
        }
    });
    RankedResult {
        case_id: case.case_id,
        gt_equals_last,
        plain,
        masked,
    }
}

/// Ranks one case against a ranked list of the top `list.len()` items.
/// Masking deletes the last item from the list.
pub fn rank_case_in_list(list: &[usize], case: &EvalCase, mask: bool) -> RankedResult {
    let position = |item: usize| list.iter().position(|&x| x == item);
    let gt_pos = position(case.gt);
    let last_pos = position(case.last);
    let gt_equals_last = case.gt == case.last;
    let plain = CaseRanks {
        gt: gt_pos.map(|p| p + 1),
        last: last_pos.map(|p| p + 1),
    };
    let masked = mask.then(|| {
        let gt = if gt_equals_last {
            None
        } else {
            gt_pos.map(|p| match last_pos {
                Some(lp) if lp < p => p,
                _ => p + 1,
            })
        };
        CaseRanks { gt, last: None }
    });
    RankedResult {
        case_id: case.case_id,
        gt_equals_last,
        plain,
        masked,
    }
}

/// `100 * (starred - base) / base`.
///
/// Zero over zero is defined as no change; a positive value over a zero base
/// has no finite percentage and yields `None`.
pub fn improvement_pct(base: f64, starred: f64) -> Result<Option<f64>> {
    if !(base >= 0.0) || !starred.is_finite() {
        return Err(Error::Data(format!(
            "improvement needs a non-negative base, got {base} -> {starred}"
        )));
    }
    if base == 0.0 {
        return Ok((starred == 0.0).then_some(0.0));
    }
    let pct = 100.0 * (starred - base) / base;
    // normalise -0.0 so that "no change" always renders as +0.00%
    Ok(Some(if pct == 0.0 { 0.0 } else { pct }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsAtK {
    pub k: usize,
    pub hit: f64,
    pub ndcg: f64,
    pub hrli: f64,
    pub hit_star: Option<f64>,
    pub ndcg_star: Option<f64>,
    pub hrli_star: Option<f64>,
    pub improvement_hit_pct: Option<f64>,
    pub improvement_ndcg_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub format: String,
    pub label: String,
    /// Number of evaluated cases, the denominator of every rate.
    pub n_eval: usize,
    /// Cases whose ground truth equals their last item (counted even when
    /// such cases are excluded).
    pub n_gt_equals_last: usize,
    pub mask_last: bool,
    pub exclude_gt_equals_last: bool,
    pub metrics: Vec<MetricsAtK>,
}

impl MetricReport {
    pub fn at(&self, k: usize) -> Option<&MetricsAtK> {
        self.metrics.iter().find(|m| m.k == k)
    }

    pub fn ks(&self) -> Vec<usize> {
        self.metrics.iter().map(|m| m.k).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        let report: MetricReport = serde_json::from_str(raw)?;
        if report.format != REPORT_FORMAT {
            return Err(Error::Data(format!(
                "unsupported report format {:?}",
                report.format
            )));
        }
        Ok(report)
    }
}

/// Rank histograms truncated at the largest cutoff. Aggregating through
/// histograms makes the result independent of case order.
#[derive(Debug, Clone)]
pub struct MetricAccumulator {
    config: RankingConfig,
    n_eval: usize,
    n_gt_equals_last: usize,
    gt: Vec<u64>,
    last: Vec<u64>,
    gt_star: Vec<u64>,
    last_star: Vec<u64>,
}

impl MetricAccumulator {
    pub fn new(config: &RankingConfig) -> Result<Self> {
        config.validate()?;
        let len = config.max_k() + 1;
        Ok(MetricAccumulator {
            config: config.clone(),
            n_eval: 0,
            n_gt_equals_last: 0,
            gt: vec![0; len],
            last: vec![0; len],
            gt_star: vec![0; len],
            last_star: vec![0; len],
        })
    }

    pub fn add(&mut self, result: &RankedResult) {
        if result.gt_equals_last {
            self.n_gt_equals_last += 1;
            if self.config.exclude_gt_equals_last {
                return;
            }
        }
        self.n_eval += 1;
        let max_k = self.config.max_k();
        let bump = |hist: &mut Vec<u64>, rank: Option<usize>| {
            if let Some(r) = rank.filter(|&r| r <= max_k) {
                hist[r] += 1;
            }
        };
        bump(&mut self.gt, result.plain.gt);
        bump(&mut self.last, result.plain.last);
        if let Some(m) = result.masked {
            bump(&mut self.gt_star, m.gt);
            bump(&mut self.last_star, m.last);
        }
    }

    pub fn finish(self, label: &str) -> Result<MetricReport> {
        if self.n_eval == 0 {
            return Err(Error::Empty("evaluation set"));
        }
        let n = self.n_eval as f64;
        let hit = |hist: &[u64], k: usize| hist[1..=k].iter().sum::<u64>() as f64 / n;
        let ndcg = |hist: &[u64], k: usize| {
            hist[1..=k]
                .iter()
                .enumerate()
                .map(|(i, &c)| c as f64 * ndcg_at_k(i + 1, k))
                .sum::<f64>()
                / n
        };
        let masked = self.config.mask_last;
        let mut metrics = Vec::with_capacity(self.config.ks.len());
        for &k in &self.config.ks {
            let (h, g) = (hit(&self.gt, k), ndcg(&self.gt, k));
            let mut m = MetricsAtK {
                k,
                hit: h,
                ndcg: g,
                hrli: hit(&self.last, k),
                hit_star: None,
                ndcg_star: None,
                hrli_star: None,
                improvement_hit_pct: None,
                improvement_ndcg_pct: None,
            };
            if masked {
                let (hs, gs) = (hit(&self.gt_star, k), ndcg(&self.gt_star, k));
                m.hit_star = Some(hs);
                m.ndcg_star = Some(gs);
                m.hrli_star = Some(hit(&self.last_star, k));
                m.improvement_hit_pct = improvement_pct(h, hs)?;
                m.improvement_ndcg_pct = improvement_pct(g, gs)?;
            }
            metrics.push(m);
        }
        Ok(MetricReport {
            format: REPORT_FORMAT.to_string(),
            label: label.to_string(),
            n_eval: self.n_eval,
            n_gt_equals_last: self.n_gt_equals_last,
            mask_last: masked,
            exclude_gt_equals_last: self.config.exclude_gt_equals_last,
            metrics,
        })
    }
}

/// Scores and ranks every case. Runs in parallel; results keep case order.
pub fn rank_cases<S: Scorer + Sync + ?Sized>(
    scorer: &S,
    cases: &[EvalCase],
    mask: bool,
) -> Result<Vec<RankedResult>> {
    let n = scorer.catalog_size();
    let results: Vec<Result<RankedResult>> = cases
        .par_iter()
        .map(|case| {
            let wrap = |e: Error| Error::Case {
                case_id: case.case_id,
                source: Box::new(e),
            };
            case.validate(n).map_err(wrap)?;
            let scores = scorer.score(&case.prefix).map_err(wrap)?;
            if scores.len() != n {
                return Err(wrap(Error::Data(format!(
                    "scorer returned {} scores for a catalog of {n}",
                    scores.len()
                ))));
            }
            if let Some(j) = scores.iter().position(|s| !s.is_finite()) {
                return Err(wrap(Error::NonFinite(format!("score of item {j}"))));
            }
            Ok(rank_case(&scores, case, mask))
        })
        .collect();
    results.into_iter().collect()
}

/// Evaluates `scorer` on `cases` with the full metric suite.
pub fn evaluate<S: Scorer + Sync + ?Sized>(
    scorer: &S,
    cases: &[EvalCase],
    config: &RankingConfig,
) -> Result<MetricReport> {
    if cases.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let mut acc = MetricAccumulator::new(config)?;
    for r in rank_cases(scorer, cases, config.mask_last)? {
        acc.add(&r);
    }
    acc.finish("")
}

/// Wraps a scorer and pushes every prefix item except the last to the lowest
/// finite score, so earlier history cannot be recommended again. The last
/// item stays a candidate, otherwise the last-item hit rate would be zero by
/// construction.
#[derive(Debug, Clone)]
pub struct HistoryMasked<S>(pub S);

impl<S: Scorer> Scorer for HistoryMasked<S> {
    fn catalog_size(&self) -> usize {
        self.0.catalog_size()
    }

    fn score(&self, prefix: &[usize]) -> Result<ScoreVector> {
        let mut scores = self.0.score(prefix)?;
        if let Some((&last, history)) = prefix.split_last() {
            for &i in history.iter().filter(|&&i| i != last) {
                if let Some(s) = scores.0.get_mut(i) {
                    *s = f32::MIN;
                }
            }
        }
        Ok(scores)
    }
}

/// Scorer backed by a table of precomputed score vectors keyed by prefix.
#[derive(Debug, Clone)]
pub struct TableScorer {
    catalog_size: usize,
    rows: std::collections::HashMap<Vec<usize>, ScoreVector>,
}

impl TableScorer {
    pub fn new(catalog_size: usize) -> Self {
        TableScorer {
            catalog_size,
            rows: Default::default(),
        }
    }

    pub fn insert(&mut self, prefix: Vec<usize>, scores: ScoreVector) {
        self.rows.insert(prefix, scores);
    }
}

impl Scorer for TableScorer {
    fn catalog_size(&self) -> usize {
        self.catalog_size
    }

    fn score(&self, prefix: &[usize]) -> Result<ScoreVector> {
        self.rows
            .get(prefix)
            .cloned()
            .ok_or_else(|| Error::Data(format!("no scores stored for prefix {prefix:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_examples() {
        assert_eq!(rank_of(&[0.1, 0.9, 0.5], 1), 1);
        assert_eq!(rank_of(&[0.1, 0.9, 0.5], 0), 3);
        let flat = [0.3; 3];
        assert_eq!(rank_of(&flat, 0), 1);
        assert_eq!(rank_of(&flat, 2), 3);
    }

    #[test]
    fn masking_sends_last_to_bottom() {
        let scores = [0.2, 5.0, -1.0, 3.0];
        let masked = mask_last(&scores, 1);
        assert_eq!(rank_of(&masked, 1), 4);
        assert_eq!(mask_last(&masked, 1), masked);
        // other items keep their order
        assert_eq!(rank_of(&masked, 3), 1);
        assert_eq!(rank_of(&masked, 0), 2);
    }

    #[test]
    fn hit_and_ndcg_boundaries() {
        assert_eq!(hit_at_k(1, 10), 1);
        assert_eq!(hit_at_k(10, 10), 1);
        assert_eq!(hit_at_k(11, 10), 0);
        assert_eq!(ndcg_at_k(1, 5), 1.0);
        assert!((ndcg_at_k(2, 5) - 0.6309).abs() < 1e-4);
        assert_eq!(ndcg_at_k(6, 5), 0.0);
    }

    #[test]
    fn improvement_examples() {
        let fmt = |b, s| format!("{:+.2}", improvement_pct(b, s).unwrap().unwrap());
        assert_eq!(fmt(0.0172, 0.0246), "+43.02");
        assert_eq!(fmt(0.0245, 0.0255), "+4.08");
        assert_eq!(fmt(0.0053, 0.0053), "+0.00");
        assert_eq!(improvement_pct(0.0, 0.0).unwrap(), Some(0.0));
        assert_eq!(improvement_pct(0.0, 0.1).unwrap(), None);
        assert!(improvement_pct(-0.1, 0.1).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(RankingConfig::new(&[], false).is_err());
        assert!(RankingConfig::new(&[0, 5], false).is_err());
        assert!(RankingConfig::new(&[10, 5], false).is_err());
        assert!(RankingConfig::new(&[1, 5, 10], true).is_ok());
    }

    fn table(rows: Vec<(Vec<usize>, Vec<f32>)>, n: usize) -> TableScorer {
        let mut t = TableScorer::new(n);
        for (p, s) in rows {
            t.insert(p, s.into());
        }
        t
    }

    #[test]
    fn hit_is_mean_over_cases() {
        // 12 items; case 0 ranks gt first, case 1 ranks gt 11th
        let mut s0 = vec![0.0f32; 12];
        s0[3] = 1.0;
        let s1: Vec<f32> = (0..12).map(|i| -(i as f32)).collect();
        let scorer = table(vec![(vec![0], s0), (vec![1], s1)], 12);
        let cases = vec![
            EvalCase::new(0, vec![0], 3).unwrap(),
            EvalCase::new(1, vec![1], 10).unwrap(),
        ];
        let report = evaluate(&scorer, &cases, &RankingConfig::new(&[10], false).unwrap()).unwrap();
        assert_eq!(report.at(10).unwrap().hit, 0.5);
        assert_eq!(report.n_eval, 2);
    }

    #[test]
    fn displaced_ground_truth_is_promoted_by_masking() {
        // last item ranked 1st, gt ranked 11th
        let scores: Vec<f32> = (0..20).map(|i| 100.0 - i as f32).collect();
        let case = EvalCase::new(0, vec![5, 0], 10).unwrap();
        let scorer = table(vec![(vec![5, 0], scores)], 20);
        let report =
            evaluate(&scorer, &[case], &RankingConfig::new(&[10], true).unwrap()).unwrap();
        let m = report.at(10).unwrap();
        assert_eq!((m.hit, m.hrli), (0.0, 1.0));
        assert_eq!(m.hit_star, Some(1.0));
        assert_eq!(m.hrli_star, Some(0.0));
        assert!((m.ndcg_star.unwrap() - 1.0 / 11f64.log2()).abs() < 1e-15);
        // base 0, starred > 0: no finite percentage
        assert_eq!(m.improvement_hit_pct, None);
    }

    #[test]
    fn gt_equal_to_last_is_counted_and_optionally_excluded() {
        let scores = vec![3.0f32, 2.0, 1.0];
        let scorer = table(vec![(vec![1], scores.clone()), (vec![2], scores)], 3);
        let cases = vec![
            EvalCase::new(0, vec![1], 1).unwrap(),
            EvalCase::new(1, vec![2], 0).unwrap(),
        ];
        let mut cfg = RankingConfig::new(&[1, 2], true).unwrap();
        let r = evaluate(&scorer, &cases, &cfg).unwrap();
        assert_eq!((r.n_eval, r.n_gt_equals_last), (2, 1));
        // masking removes a gt that equals last from every Top-K
        assert_eq!(r.at(2).unwrap().hit, 1.0);
        assert_eq!(r.at(2).unwrap().hit_star, Some(0.5));
        cfg.exclude_gt_equals_last = true;
        let r = evaluate(&scorer, &cases, &cfg).unwrap();
        assert_eq!((r.n_eval, r.n_gt_equals_last), (1, 1));
    }

    #[test]
    fn scorer_failure_names_case() {
        let scorer = TableScorer::new(4);
        let cases = vec![EvalCase::new(17, vec![1], 2).unwrap()];
        let err = evaluate(&scorer, &cases, &RankingConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Case { case_id: 17, .. }), "{err}");
    }

    #[test]
    fn empty_case_list_is_rejected() {
        let scorer = TableScorer::new(4);
        assert!(evaluate(&scorer, &[], &RankingConfig::default()).is_err());
    }

    #[test]
    fn list_ranking_deletes_masked_item() {
        let case = EvalCase::new(0, vec![7], 4).unwrap();
        let r = rank_case_in_list(&[7, 1, 4, 2], &case, true);
        assert_eq!(r.plain, CaseRanks { gt: Some(3), last: Some(1) });
        assert_eq!(r.masked.unwrap(), CaseRanks { gt: Some(2), last: None });
        let r = rank_case_in_list(&[1, 2, 3], &case, true);
        assert_eq!(r.plain.gt, None);
        assert_eq!(r.masked.unwrap().gt, None);
    }

    #[test]
    fn top_k_breaks_ties_by_index() {
        assert_eq!(top_k(&[1.0, 2.0, 2.0, 0.5], 3), vec![1, 2, 0]);
        assert_eq!(top_k(&[1.0], 5), vec![0]);
        assert!(top_k(&[1.0, 2.0], 0).is_empty());
    }

    #[test]
    fn history_masking_keeps_the_last_item() {
        let mut t = TableScorer::new(4);
        t.insert(vec![2, 1, 2], ScoreVector(vec![4.0, 3.0, 2.0, 1.0]));
        let masked = HistoryMasked(&t).score(&[2, 1, 2]).unwrap();
        assert_eq!(masked.0, vec![4.0, f32::MIN, 2.0, 1.0]);
    }

}
