//! Interaction logs, k-core filtering, chronological sessions and
//! leave-one-out splits.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eval::EvalCase;
use crate::format::{self, magic_line, parse_magic};
use crate::{Error, Result};

pub const DEFAULT_MAX_LEN: usize = 50;
pub const DEFAULT_MIN_COUNT: usize = 5;
/// Shortest session that still yields a train, a valid and a test case.
pub const MIN_SESSION_LEN: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interaction {
    pub user: String,
    pub item: String,
    pub timestamp: i64,
}

/// Interactions in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InteractionLog {
    pub records: Vec<Interaction>,
}

impl InteractionLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Writes the log in the TSV layout [`ingest`] reads by default.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", magic_line("interactions", &[]))?;
        for r in &self.records {
            writeln!(out, "{}\t{}\t{}", r.user, r.item, r.timestamp)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    /// Field separator; may be more than one character (MovieLens uses `::`).
    pub delimiter: String,
    pub has_header: bool,
    /// Zero-based column positions of user, item and timestamp.
    pub columns: [usize; 3],
}

impl IngestOptions {
    pub fn tsv() -> Self {
        IngestOptions {
            delimiter: "\t".into(),
            has_header: false,
            columns: [0, 1, 2],
        }
    }

    pub fn csv() -> Self {
        IngestOptions {
            delimiter: ",".into(),
            ..Self::tsv()
        }
    }
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self::tsv()
    }
}

/// Parses `user, item, timestamp` records.
///
/// Blank lines and lines starting with `#` are skipped. Exact duplicate
/// triples are dropped; everything else keeps file order.
pub fn ingest<R: BufRead>(reader: R, opts: &IngestOptions) -> Result<InteractionLog> {
    if opts.delimiter.is_empty() {
        return Err(Error::Config("empty delimiter".into()));
    }
    let [uc, ic, tc] = opts.columns;
    let needed = uc.max(ic).max(tc) + 1;
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    let mut header_pending = opts.has_header;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        let fields: Vec<&str> = line.split(opts.delimiter.as_str()).collect();
        if fields.len() < needed {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected at least {needed} fields, found {}", fields.len()),
            });
        }
        let user = fields[uc].trim();
        let item = fields[ic].trim();
        if user.is_empty() || item.is_empty() {
            return Err(Error::Parse {
                line: lineno,
                msg: "empty user or item id".into(),
            });
        }
        let raw_ts = fields[tc].trim();
        let timestamp = raw_ts.parse::<i64>().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("timestamp {raw_ts:?} is not an integer"),
        })?;
        let rec = Interaction {
            user: user.to_string(),
            item: item.to_string(),
            timestamp,
        };
        if seen.insert(rec.clone()) {
            records.push(rec);
        }
    }
    Ok(InteractionLog { records })
}

pub fn ingest_path(path: &Path, opts: &IngestOptions) -> Result<InteractionLog> {
    let file = fs::File::open(path)?;
    ingest(BufReader::new(file), opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoreMode {
    /// Remove offenders until every survivor meets the threshold.
    Fixpoint,
    /// One removal pass based on the initial counts.
    SinglePass,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterOutcome {
    pub log: InteractionLog,
    pub warning: Option<String>,
}

/// Dense re-labelling of the string ids in a log.
struct Interned {
    user_of: Vec<usize>,
    item_of: Vec<usize>,
    n_users: usize,
    n_items: usize,
}

fn intern(log: &InteractionLog) -> Interned {
    let mut users: HashMap<&str, usize> = HashMap::new();
    let mut items: HashMap<&str, usize> = HashMap::new();
    let mut user_of = Vec::with_capacity(log.len());
    let mut item_of = Vec::with_capacity(log.len());
    for r in &log.records {
        let n = users.len();
        user_of.push(*users.entry(&r.user).or_insert(n));
        let n = items.len();
        item_of.push(*items.entry(&r.item).or_insert(n));
    }
    Interned {
        user_of,
        item_of,
        n_users: users.len(),
        n_items: items.len(),
    }
}

/// Drops users and items with fewer than `min_count` interactions.
///
/// In [`CoreMode::Fixpoint`] the result is the k-core: the largest sub-log in
/// which every remaining user and item still has `min_count` interactions.
/// An empty result is reported through [`FilterOutcome::warning`].
pub fn k_core_filter(
    log: &InteractionLog,
    min_count: usize,
    mode: CoreMode,
) -> Result<FilterOutcome> {
    if min_count < 1 {
        return Err(Error::Config("min_count must be at least 1".into()));
    }
    let ids = intern(log);
    let mut user_count = vec![0usize; ids.n_users];
    let mut item_count = vec![0usize; ids.n_items];
    for (&u, &i) in ids.user_of.iter().zip(&ids.item_of) {
        user_count[u] += 1;
        item_count[i] += 1;
    }

    let alive: Vec<bool> = match mode {
        CoreMode::SinglePass => ids
            .user_of
            .iter()
            .zip(&ids.item_of)
            .map(|(&u, &i)| user_count[u] >= min_count && item_count[i] >= min_count)
            .collect(),
        CoreMode::Fixpoint => peel(&ids, user_count, item_count, min_count),
    };

    let records: Vec<Interaction> = log
        .records
        .iter()
        .zip(&alive)
        .filter(|(_, &keep)| keep)
        .map(|(r, _)| r.clone())
        .collect();
    let warning = if records.is_empty() && !log.is_empty() {
        let msg = format!("{min_count}-core filtering removed every interaction");
        log::warn!("{msg}");
        Some(msg)
    } else {
        None
    };
    Ok(FilterOutcome {
        log: InteractionLog { records },
        warning,
    })
}

#[derive(Clone, Copy)]
enum Node {
    User(usize),
    Item(usize),
}

fn peel(
    ids: &Interned,
    mut user_count: Vec<usize>,
    mut item_count: Vec<usize>,
    min_count: usize,
) -> Vec<bool> {
    let mut user_recs = vec![Vec::new(); ids.n_users];
    let mut item_recs = vec![Vec::new(); ids.n_items];
    for (r, (&u, &i)) in ids.user_of.iter().zip(&ids.item_of).enumerate() {
        user_recs[u].push(r);
        item_recs[i].push(r);
    }
    let mut alive = vec![true; ids.user_of.len()];
    let mut user_gone = vec![false; ids.n_users];
    let mut item_gone = vec![false; ids.n_items];
    let mut queue = VecDeque::new();
    for u in 0..ids.n_users {
        if user_count[u] < min_count {
            user_gone[u] = true;
            queue.push_back(Node::User(u));
        }
    }
    for i in 0..ids.n_items {
        if item_count[i] < min_count {
            item_gone[i] = true;
            queue.push_back(Node::Item(i));
        }
    }
    while let Some(node) = queue.pop_front() {
        let recs = match node {
            Node::User(u) => &user_recs[u],
            Node::Item(i) => &item_recs[i],
        };
        for &r in recs {
            if !alive[r] {
                continue;
            }
            alive[r] = false;
            match node {
                Node::User(_) => {
                    let i = ids.item_of[r];
                    item_count[i] -= 1;
                    if !item_gone[i] && item_count[i] < min_count {
                        item_gone[i] = true;
                        queue.push_back(Node::Item(i));
                    }
                }
                Node::Item(_) => {
                    let u = ids.user_of[r];
                    user_count[u] -= 1;
                    if !user_gone[u] && user_count[u] < min_count {
                        user_gone[u] = true;
                        queue.push_back(Node::User(u));
                    }
                }
            }
        }
    }
    alive
}

/// Bijections between external ids and dense indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    items: Vec<String>,
    users: Vec<String>,
    item_index: HashMap<String, usize>,
    user_index: HashMap<String, usize>,
}

impl Catalog {
    pub fn from_ids(users: Vec<String>, items: Vec<String>) -> Result<Self> {
        let index = |ids: &[String], what: &str| -> Result<HashMap<String, usize>> {
            let mut map = HashMap::with_capacity(ids.len());
            for (i, id) in ids.iter().enumerate() {
                if map.insert(id.clone(), i).is_some() {
                    return Err(Error::Data(format!("duplicate {what} id {id:?} in catalog")));
                }
            }
            Ok(map)
        };
        Ok(Catalog {
            item_index: index(&items, "item")?,
            user_index: index(&users, "user")?,
            items,
            users,
        })
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn item_id(&self, index: usize) -> Option<&str> {
        self.items.get(index).map(String::as_str)
    }

    pub fn user_id(&self, index: usize) -> Option<&str> {
        self.users.get(index).map(String::as_str)
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.item_index.get(id).copied()
    }

    pub fn user_index(&self, id: &str) -> Option<usize> {
        self.user_index.get(id).copied()
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "{}",
            magic_line(
                "catalog",
                &[
                    ("n_users", self.n_users().to_string()),
                    ("n_items", self.n_items().to_string()),
                ],
            )
        )?;
        writeln!(out, "kind\tindex\tid")?;
        for (i, id) in self.users.iter().enumerate() {
            writeln!(out, "user\t{i}\t{id}")?;
        }
        for (i, id) in self.items.iter().enumerate() {
            writeln!(out, "item\t{i}\t{id}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let first = lines.next().ok_or(Error::Empty("catalog file"))??;
        let fields = parse_magic(&first, "catalog")?;
        let n_users: usize = format::field(&fields, "n_users")?;
        let n_items: usize = format::field(&fields, "n_items")?;
        let mut users = Vec::with_capacity(n_users);
        let mut items = Vec::with_capacity(n_items);
        for (lineno, line) in lines.enumerate().skip(1) {
            let lineno = lineno + 2;
            let line = line?;
            let mut parts = line.splitn(3, '\t');
            let (kind, index, id) = match (parts.next(), parts.next(), parts.next()) {
                (Some(k), Some(i), Some(id)) => (k, i, id),
                _ => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "expected kind, index, id".into(),
                    })
                }
            };
            let index: usize = index.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("invalid index {index:?}"),
            })?;
            let target = match kind {
                "user" => &mut users,
                "item" => &mut items,
                other => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("unknown kind {other:?}"),
                    })
                }
            };
            if index != target.len() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("{kind} indices must be contiguous; expected {}", target.len()),
                });
            }
            target.push(id.to_string());
        }
        if users.len() != n_users || items.len() != n_items {
            return Err(Error::Data(format!(
                "catalog header promises {n_users} users / {n_items} items, found {} / {}",
                users.len(),
                items.len()
            )));
        }
        Catalog::from_ids(users, items)
    }
}

/// Chronological item sequences, indexed by dense user index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SessionStore {
    pub sessions: Vec<Vec<usize>>,
}

impl SessionStore {
    pub fn n_interactions(&self) -> usize {
        self.sessions.iter().map(Vec::len).sum()
    }
}

/// Groups the log per user and orders each user's items by timestamp.
///
/// Ties keep file order. Users with fewer than [`MIN_SESSION_LEN`] items are
/// dropped. Dense indices follow first appearance in the log among the
/// retained users.
pub fn build_sessions(log: &InteractionLog) -> (SessionStore, Catalog) {
    let mut user_slot: HashMap<&str, usize> = HashMap::new();
    let mut per_user: Vec<Vec<usize>> = Vec::new();
    for (r, rec) in log.records.iter().enumerate() {
        let slot = *user_slot.entry(&rec.user).or_insert_with(|| {
            per_user.push(Vec::new());
            per_user.len() - 1
        });
        per_user[slot].push(r);
    }
    let retained_user: Vec<bool> = per_user
        .iter()
        .map(|recs| recs.len() >= MIN_SESSION_LEN)
        .collect();

    let mut users = Vec::new();
    let mut user_dense: HashMap<&str, usize> = HashMap::new();
    let mut items = Vec::new();
    let mut item_dense: HashMap<&str, usize> = HashMap::new();
    for rec in &log.records {
        if !retained_user[user_slot[rec.user.as_str()]] {
            continue;
        }
        if !user_dense.contains_key(rec.user.as_str()) {
            user_dense.insert(&rec.user, users.len());
            users.push(rec.user.clone());
        }
        if !item_dense.contains_key(rec.item.as_str()) {
            item_dense.insert(&rec.item, items.len());
            items.push(rec.item.clone());
        }
    }

    let mut sessions = vec![Vec::new(); users.len()];
    for (slot, recs) in per_user.iter_mut().enumerate() {
        if !retained_user[slot] {
            continue;
        }
        // stable: equal timestamps keep file order
        recs.sort_by_key(|&r| log.records[r].timestamp);
        let dense = user_dense[log.records[recs[0]].user.as_str()];
        sessions[dense] = recs
            .iter()
            .map(|&r| item_dense[log.records[r].item.as_str()])
            .collect();
    }
    let catalog = Catalog::from_ids(users, items).expect("ids are unique by construction");
    (SessionStore { sessions }, catalog)
}

/// Train, validation and test cases from a leave-one-out split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitDataset {
    pub train: Vec<EvalCase>,
    pub valid: Vec<EvalCase>,
    pub test: Vec<EvalCase>,
    pub max_len: usize,
    pub catalog_size: usize,
}

fn truncated(items: &[usize], max_len: usize) -> Vec<usize> {
    items[items.len().saturating_sub(max_len)..].to_vec()
}

/// Leave-one-out split: per session the final item is the test target, the
/// penultimate the validation target, and every earlier position a training
/// target. Prefixes keep their most recent `max_len` items.
///
/// A three-item session `[a, b, c]` contributes the training case
/// `([a], b)`, which coincides with its validation case.
pub fn split_leave_one_out(
    store: &SessionStore,
    catalog_size: usize,
    max_len: usize,
) -> Result<SplitDataset> {
    if max_len < 1 {
        return Err(Error::Config("max_len must be at least 1".into()));
    }
    let mut split = SplitDataset {
        train: Vec::new(),
        valid: Vec::new(),
        test: Vec::new(),
        max_len,
        catalog_size,
    };
    let make = |case_id: usize, history: &[usize], gt: usize| -> EvalCase {
        let prefix = truncated(history, max_len);
        let last = *prefix.last().expect("history is nonempty");
        EvalCase {
            case_id: case_id as u64,
            prefix,
            gt,
            last,
        }
    };
    for session in &store.sessions {
        let n = session.len();
        if n < MIN_SESSION_LEN {
            return Err(Error::Data(format!(
                "session of length {n} cannot be split (need {MIN_SESSION_LEN})"
            )));
        }
        if let Some(&bad) = session.iter().find(|&&i| i >= catalog_size) {
            return Err(Error::ItemOutOfRange {
                index: bad,
                catalog_size,
            });
        }
        // gt positions 1..=n-3 (zero-based), at least position 1
        let last_train = (n - 3).max(1);
        for g in 1..=last_train {
            let id = split.train.len();
            split.train.push(make(id, &session[..g], session[g]));
        }
        let id = split.valid.len();
        split.valid.push(make(id, &session[..n - 2], session[n - 2]));
        let id = split.test.len();
        split.test.push(make(id, &session[..n - 1], session[n - 1]));
    }
    Ok(split)
}

/// Dataset statistics in the layout of the usual preprocessing tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_users: usize,
    pub n_items: usize,
    pub n_interactions: usize,
    /// Interactions per user.
    pub avg_length: f64,
    /// `100 * (1 - interactions / (users * items))`, clamped to `[0, 100]`.
    pub sparsity: f64,
}

impl DatasetStats {
    pub fn from_counts(n_users: usize, n_items: usize, n_interactions: usize) -> Result<Self> {
        if n_users == 0 || n_items == 0 || n_interactions == 0 {
            return Err(Error::Empty("interactions"));
        }
        let cells = n_users as f64 * n_items as f64;
        Ok(DatasetStats {
            n_users,
            n_items,
            n_interactions,
            avg_length: n_interactions as f64 / n_users as f64,
            sparsity: (100.0 * (1.0 - n_interactions as f64 / cells)).clamp(0.0, 100.0),
        })
    }
}

impl std::fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "users {} | items {} | interactions {} | avg. length {:.2} | sparsity {:.2}%",
            self.n_users, self.n_items, self.n_interactions, self.avg_length, self.sparsity
        )
    }
}

/// Statistics of `log` restricted to the users present in `catalog`.
pub fn stats(log: &InteractionLog, catalog: &Catalog) -> Result<DatasetStats> {
    let n_interactions = log
        .records
        .iter()
        .filter(|r| catalog.user_index(&r.user).is_some())
        .count();
    DatasetStats::from_counts(catalog.n_users(), catalog.n_items(), n_interactions)
}

const SPLITS: [&str; 3] = ["train", "valid", "test"];

fn write_cases(path: &Path, name: &str, split: &SplitDataset, cases: &[EvalCase]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(
        out,
        "{}",
        magic_line(
            "cases",
            &[
                ("split", name.to_string()),
                ("max_len", split.max_len.to_string()),
                ("catalog_size", split.catalog_size.to_string()),
            ],
        )
    )?;
    writeln!(out, "case_id\tprefix\tgt\tlast")?;
    for c in cases {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            c.case_id,
            format::join_indices(&c.prefix),
            c.gt,
            c.last
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Reads one `<split>.tsv` file. Returns the cases together with the
/// `max_len` and `catalog_size` recorded in its header.
pub fn read_cases(path: &Path) -> Result<(Vec<EvalCase>, usize, usize)> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut lines = reader.lines();
    let first = lines.next().ok_or(Error::Empty("case file"))??;
    let fields = parse_magic(&first, "cases")?;
    let max_len: usize = format::field(&fields, "max_len")?;
    let catalog_size: usize = format::field(&fields, "catalog_size")?;
    let mut cases = Vec::new();
    for (n, line) in lines.enumerate().skip(1) {
        let lineno = n + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 4 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 4 columns, found {}", parts.len()),
            });
        }
        let num = |s: &str, what: &str| -> Result<u64> {
            s.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("invalid {what} {s:?}"),
            })
        };
        let case = EvalCase {
            case_id: num(parts[0], "case id")?,
            prefix: format::parse_index_list(parts[1], lineno)?,
            gt: num(parts[2], "gt")? as usize,
            last: num(parts[3], "last")? as usize,
        };
        case.validate(catalog_size).map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        cases.push(case);
    }
    Ok((cases, max_len, catalog_size))
}

impl SplitDataset {
    pub fn cases(&self, name: &str) -> Option<&[EvalCase]> {
        match name {
            "train" => Some(&self.train),
            "valid" => Some(&self.valid),
            "test" => Some(&self.test),
            _ => None,
        }
    }

    /// Writes `train.tsv`, `valid.tsv` and `test.tsv` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for name in SPLITS {
            let cases = self.cases(name).expect("known split");
            write_cases(&dir.join(format!("{name}.tsv")), name, self, cases)?;
        }
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let (train, max_len, catalog_size) = read_cases(&dir.join("train.tsv"))?;
        let (valid, ml_v, cs_v) = read_cases(&dir.join("valid.tsv"))?;
        let (test, ml_t, cs_t) = read_cases(&dir.join("test.tsv"))?;
        if (ml_v, cs_v) != (max_len, catalog_size) || (ml_t, cs_t) != (max_len, catalog_size) {
            return Err(Error::Data(format!(
                "split files in {} disagree on max_len / catalog_size",
                dir.display()
            )));
        }
        Ok(SplitDataset {
            train,
            valid,
            test,
            max_len,
            catalog_size,
        })
    }
}
