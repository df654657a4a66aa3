//! Brute-force reference implementations, written from the metric
//! definitions without reusing any library code.

#![allow(dead_code)]

/// Every item index sorted best first: higher score, then lower index.
/// `exclude` removes one item from the candidate set altogether.
pub fn ranked(scores: &[f32], exclude: Option<usize>) -> Vec<usize> {
    let mut items: Vec<usize> = (0..scores.len()).filter(|&i| Some(i) != exclude).collect();
    items.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("finite scores")
            .then(a.cmp(&b))
    });
    items
}

/// 1-based position of `item` in a full sort, or `None` when absent.
pub fn position(list: &[usize], item: usize) -> Option<usize> {
    list.iter().position(|&x| x == item).map(|p| p + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OracleMetrics {
    pub hit: f64,
    pub ndcg: f64,
    pub hrli: f64,
    pub hit_star: f64,
    pub ndcg_star: f64,
    pub hrli_star: f64,
}

/// Means over cases of the six metrics at cutoff `k`. Each case is
/// `(scores, gt, last)`; the masked pass removes `last` from the candidates.
pub fn metrics(cases: &[(Vec<f32>, usize, usize)], k: usize) -> OracleMetrics {
    let mut m = OracleMetrics::default();
    for (scores, gt, last) in cases {
        let top = |list: &[usize]| list.iter().take(k).copied().collect::<Vec<_>>();
        let plain = ranked(scores, None);
        let starred = ranked(scores, Some(*last));
        let (tp, ts) = (top(&plain), top(&starred));
        let gain = |list: &[usize]| match list.iter().position(|x| x == gt) {
            Some(p) => 1.0 / ((p + 2) as f64).log2(),
            None => 0.0,
        };
        m.hit += f64::from(u8::from(tp.contains(gt)));
        m.ndcg += gain(&tp);
        m.hrli += f64::from(u8::from(tp.contains(last)));
        m.hit_star += f64::from(u8::from(ts.contains(gt)));
        m.ndcg_star += gain(&ts);
        m.hrli_star += f64::from(u8::from(ts.contains(last)));
    }
    let n = cases.len() as f64;
    OracleMetrics {
        hit: m.hit / n,
        ndcg: m.ndcg / n,
        hrli: m.hrli / n,
        hit_star: m.hit_star / n,
        ndcg_star: m.ndcg_star / n,
        hrli_star: m.hrli_star / n,
    }
}

/// k-core by literal repeated removal: drop every row whose user or item is
/// below `k`, recount, repeat until nothing changes. Returns the kept rows.
pub fn k_core(rows: &[(String, String)], k: usize) -> Vec<bool> {
    let mut keep = vec![true; rows.len()];
    loop {
        let mut users = std::collections::HashMap::<&str, usize>::new();
        let mut items = std::collections::HashMap::<&str, usize>::new();
        for (r, _) in rows.iter().zip(&keep).filter(|(_, &k)| k) {
            *users.entry(&r.0).or_default() += 1;
            *items.entry(&r.1).or_default() += 1;
        }
        let mut changed = false;
        for (r, kept) in rows.iter().zip(keep.iter_mut()) {
            if *kept && (users[r.0.as_str()] < k || items[r.1.as_str()] < k) {
                *kept = false;
                changed = true;
            }
        }
        if !changed {
            return keep;
        }
    }
}
