mod support;

use std::collections::HashMap;

use hrli::corpus::{
    build_sessions, ingest, k_core_filter, split_leave_one_out, stats, Catalog, CoreMode,
    IngestOptions, Interaction, InteractionLog, SplitDataset,
};
use hrli::synth::{generate, SynthConfig};
use proptest::prelude::*;
use support::oracle;

fn log_from(rows: &[(u8, u8, i64)]) -> InteractionLog {
    InteractionLog {
        records: rows
            .iter()
            .map(|&(u, i, t)| Interaction {
                user: format!("u{u}"),
                item: format!("i{i}"),
                timestamp: t,
            })
            .collect(),
    }
}

fn small_log() -> impl Strategy<Value = InteractionLog> {
    prop::collection::vec((0u8..12, 0u8..10, 0i64..50), 0..200).prop_map(|rows| log_from(&rows))
}

fn pairs(log: &InteractionLog) -> Vec<(String, String)> {
    log.records.iter().map(|r| (r.user.clone(), r.item.clone())).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn fixpoint_filter_equals_repeated_removal(log in small_log(), k in 1usize..6) {
        let out = k_core_filter(&log, k, CoreMode::Fixpoint).unwrap();
        let keep = oracle::k_core(&pairs(&log), k);
        let expected: Vec<Interaction> = log
            .records
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(r, _)| r.clone())
            .collect();
        prop_assert_eq!(&out.log.records, &expected);
        prop_assert_eq!(out.warning.is_some(), expected.is_empty() && !log.is_empty());
    }

    #[test]
    fn fixpoint_filter_is_idempotent(log in small_log(), k in 1usize..6) {
        let once = k_core_filter(&log, k, CoreMode::Fixpoint).unwrap().log;
        let twice = k_core_filter(&once, k, CoreMode::Fixpoint).unwrap().log;
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn filtered_log_meets_thresholds(log in small_log(), k in 1usize..6) {
        let out = k_core_filter(&log, k, CoreMode::Fixpoint).unwrap().log;
        let mut users: HashMap<&str, usize> = HashMap::new();
        let mut items: HashMap<&str, usize> = HashMap::new();
        for r in &out.records {
            *users.entry(&r.user).or_default() += 1;
            *items.entry(&r.item).or_default() += 1;
        }
        prop_assert!(users.values().chain(items.values()).all(|&c| c >= k));
    }

    #[test]
    fn single_pass_keeps_a_superset(log in small_log(), k in 1usize..6) {
        let fix = k_core_filter(&log, k, CoreMode::Fixpoint).unwrap().log;
        let single = k_core_filter(&log, k, CoreMode::SinglePass).unwrap().log;
        prop_assert!(fix.records.iter().all(|r| single.records.contains(r)));
    }

    #[test]
    fn sessions_and_splits_are_consistent(log in small_log(), max_len in 1usize..6) {
        let log = k_core_filter(&log, 2, CoreMode::Fixpoint).unwrap().log;
        let (store, catalog) = build_sessions(&log);
        // sessions account for every interaction of a retained user
        let retained = log
            .records
            .iter()
            .filter(|r| catalog.user_index(&r.user).is_some())
            .count();
        prop_assert_eq!(store.n_interactions(), retained);
        for (u, s) in store.sessions.iter().enumerate() {
            prop_assert!(s.len() >= 3);
            let id = catalog.user_id(u).unwrap();
            let mut own: Vec<&Interaction> = log.records.iter().filter(|r| r.user == id).collect();
            own.sort_by_key(|r| r.timestamp);
            let names: Vec<&str> = s.iter().map(|&i| catalog.item_id(i).unwrap()).collect();
            let expected: Vec<&str> = own.iter().map(|r| r.item.as_str()).collect();
            prop_assert_eq!(names, expected);
        }
        if store.sessions.is_empty() {
            return Ok(());
        }
        let split = split_leave_one_out(&store, catalog.n_items(), max_len).unwrap();
        check_split(&split, &store.sessions);
        let s = stats(&log, &catalog).unwrap();
        prop_assert!((0.0..=100.0).contains(&s.sparsity));
        prop_assert!(s.avg_length > 0.0);
    }

    #[test]
    fn catalog_round_trips(log in small_log()) {
        let (_, catalog) = build_sessions(&log);
        let mut buf = Vec::new();
        catalog.write_tsv(&mut buf).unwrap();
        let back = Catalog::read_tsv(buf.as_slice()).unwrap();
        for i in 0..catalog.n_items() {
            let id = catalog.item_id(i).unwrap();
            prop_assert_eq!(back.item_index(id), Some(i));
        }
        for u in 0..catalog.n_users() {
            let id = catalog.user_id(u).unwrap();
            prop_assert_eq!(back.user_index(id), Some(u));
        }
    }
}

fn check_split(split: &SplitDataset, sessions: &[Vec<usize>]) {
    assert_eq!(split.test.len(), sessions.len());
    assert_eq!(split.valid.len(), sessions.len());
    for (s, (test, valid)) in sessions.iter().zip(split.test.iter().zip(&split.valid)) {
        let n = s.len();
        assert_eq!(test.gt, s[n - 1]);
        assert_eq!(valid.gt, s[n - 2]);
        assert!(s[..n - 1].ends_with(&test.prefix));
        assert!(s[..n - 2].ends_with(&valid.prefix));
    }
    for c in split.train.iter().chain(&split.valid).chain(&split.test) {
        assert!(!c.prefix.is_empty() && c.prefix.len() <= split.max_len);
        assert_eq!(Some(&c.last), c.prefix.last());
    }
}

/// Users u0..u4 each rate i0..i4; u5 rates i0..i3 plus i5, which nobody else
/// rates. Removing i5 leaves u5 with four ratings, which in turn leaves i0..i3
/// at five and the 5x5 block intact.
#[test]
fn cascading_removal_fixture() {
    let mut rows = Vec::new();
    for u in 0..5u8 {
        for i in 0..5u8 {
            rows.push((u, i, i64::from(i)));
        }
    }
    for i in [0u8, 1, 2, 3, 5] {
        rows.push((5, i, 10));
    }
    let log = log_from(&rows);
    let out = k_core_filter(&log, 5, CoreMode::Fixpoint).unwrap().log;
    assert_eq!(out.len(), 25);
    assert!(out.records.iter().all(|r| r.user != "u5"));
    let single = k_core_filter(&log, 5, CoreMode::SinglePass).unwrap().log;
    assert_eq!(single.len(), 29);
}

#[test]
fn threshold_one_and_dense_logs_are_unchanged() {
    let rows: Vec<(u8, u8, i64)> = (0..6).flat_map(|u| (0..6).map(move |i| (u, i, 0))).collect();
    let log = log_from(&rows);
    assert_eq!(k_core_filter(&log, 1, CoreMode::Fixpoint).unwrap().log, log);
    assert_eq!(k_core_filter(&log, 5, CoreMode::Fixpoint).unwrap().log, log);
}

#[test]
fn synthetic_logs_survive_the_pipeline() {
    let cfg = SynthConfig {
        n_users: 300,
        n_items: 50,
        ..SynthConfig::default()
    };
    let log = generate(&cfg).unwrap();
    let mut tsv = Vec::new();
    log.write_tsv(&mut tsv).unwrap();
    let reread = ingest(tsv.as_slice(), &IngestOptions::tsv()).unwrap();
    assert_eq!(reread, log);
    let out = k_core_filter(&reread, 5, CoreMode::Fixpoint).unwrap();
    assert!(out.warning.is_none());
    let (store, catalog) = build_sessions(&out.log);
    let split = split_leave_one_out(&store, catalog.n_items(), 50).unwrap();
    check_split(&split, &store.sessions);
}

#[test]
fn split_directory_round_trip() {
    let log = generate(&SynthConfig {
        n_users: 40,
        ..SynthConfig::default()
    })
    .unwrap();
    let (store, catalog) = build_sessions(&log);
    let split = split_leave_one_out(&store, catalog.n_items(), 7).unwrap();
    let dir = tempfile::tempdir().unwrap();
    split.write_dir(dir.path()).unwrap();
    assert_eq!(SplitDataset::read_dir(dir.path()).unwrap(), split);
}
