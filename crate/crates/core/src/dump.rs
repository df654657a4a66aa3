//! Score dumps: the interchange format for auditing external models.
//!
//! A dump holds, per evaluation case, either the full score vector or the
//! indices of the top `M` items in ranked order. Either form is enough to
//! compute every metric of [`crate::eval`] without access to the model.
//!
//! Fields are tab-separated; shown here with spaces:
//!
//! ```text
//! #hrli-score-dump v1  catalog_size=4  mode=topm  m=3  rows=1
//! case_id  gt  last  payload
//! 0        2   1     1,2,0
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::eval::{
    rank_case, rank_case_in_list, top_k, EvalCase, MetricAccumulator, MetricReport,
    RankingConfig, Scorer,
};
use crate::format::{field, join_indices, magic_line, parse_index_list, parse_magic};
use crate::{Error, Result};

const KIND: &str = "score-dump";
const COLUMNS: &str = "case_id\tgt\tlast\tpayload";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumpMode {
    /// Full score vectors.
    Scores,
    /// The `M` best items, best first.
    TopM(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Scores(Vec<f32>),
    Ranked(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DumpRow {
    pub case_id: u64,
    pub gt: usize,
    pub last: usize,
    pub payload: Payload,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreDump {
    pub catalog_size: usize,
    pub mode: DumpMode,
    pub rows: Vec<DumpRow>,
}

impl ScoreDump {
    /// Scores every case with `scorer` and records the requested payload.
    pub fn from_scorer<S: Scorer + Sync + ?Sized>(
        scorer: &S,
        cases: &[EvalCase],
        mode: DumpMode,
    ) -> Result<Self> {
        let n = scorer.catalog_size();
        if let DumpMode::TopM(m) = mode {
            if m < 1 || m > n {
                return Err(Error::Config(format!(
                    "top-M dump needs 1 <= M <= {n}, got {m}"
                )));
            }
        }
        let rows = cases
            .par_iter()
            .map(|case| {
                let wrap = |e: Error| Error::Case {
                    case_id: case.case_id,
                    source: Box::new(e),
                };
                case.validate(n).map_err(wrap)?;
                let scores = scorer.score(&case.prefix).map_err(wrap)?;
                check_scores(&scores, n).map_err(wrap)?;
                let payload = match mode {
                    DumpMode::Scores => Payload::Scores(scores.into_inner()),
                    DumpMode::TopM(m) => Payload::Ranked(top_k(&scores, m)),
                };
                Ok(DumpRow {
                    case_id: case.case_id,
                    gt: case.gt,
                    last: case.last,
                    payload,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScoreDump {
            catalog_size: n,
            mode,
            rows,
        })
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        let (mode, m) = match self.mode {
            DumpMode::Scores => ("scores", None),
            DumpMode::TopM(m) => ("topm", Some(m)),
        };
        let mut fields = vec![
            ("catalog_size", self.catalog_size.to_string()),
            ("mode", mode.to_string()),
        ];
        if let Some(m) = m {
            fields.push(("m", m.to_string()));
        }
        fields.push(("rows", self.rows.len().to_string()));
        writeln!(out, "{}", magic_line(KIND, &fields))?;
        writeln!(out, "{COLUMNS}")?;
        let mut buf = String::new();
        for row in &self.rows {
            buf.clear();
            match &row.payload {
                Payload::Scores(s) => {
                    for (i, x) in s.iter().enumerate() {
                        if i > 0 {
                            buf.push(',');
                        }
                        // shortest representation that parses back to the same f32
                        buf.push_str(&x.to_string());
                    }
                }
                Payload::Ranked(list) => buf.push_str(&join_indices(list)),
            }
            writeln!(out, "{}\t{}\t{}\t{buf}", row.case_id, row.gt, row.last)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_path(&self, path: &Path) -> Result<()> {
        self.write(File::create(path)?)
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or(Error::Empty("score dump"))??;
        let fields = parse_magic(&header, KIND)?;
        let catalog_size: usize = field(&fields, "catalog_size")?;
        let n_rows: usize = field(&fields, "rows")?;
        let mode = match fields.get("mode").map(String::as_str) {
            Some("scores") => DumpMode::Scores,
            Some("topm") => DumpMode::TopM(field(&fields, "m")?),
            other => {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("unknown dump mode {other:?}"),
                })
            }
        };
        match lines.next().transpose()? {
            Some(cols) if cols.trim_end() == COLUMNS => {}
            other => {
                return Err(Error::Parse {
                    line: 2,
                    msg: format!("expected column header {COLUMNS:?}, found {other:?}"),
                })
            }
        }
        let mut rows = Vec::with_capacity(n_rows);
        for (i, line) in lines.enumerate() {
            let line_no = i + 3;
            let line = line?;
            if line.is_empty() {
                continue;
            }
            rows.push(parse_row(&line, line_no, catalog_size, mode)?);
        }
        if rows.len() != n_rows {
            return Err(Error::Data(format!(
                "dump header announces {n_rows} rows, found {}",
                rows.len()
            )));
        }
        Ok(ScoreDump {
            catalog_size,
            mode,
            rows,
        })
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }

    /// Checks that the dump covers exactly `cases`, row for row.
    pub fn check_cases(&self, cases: &[EvalCase], catalog_size: usize) -> Result<()> {
        if self.catalog_size != catalog_size {
            return Err(Error::Data(format!(
                "dump catalog size {} does not match dataset catalog size {catalog_size}",
                self.catalog_size
            )));
        }
        if self.rows.len() != cases.len() {
            return Err(Error::Data(format!(
                "dump has {} rows but the split has {} cases",
                self.rows.len(),
                cases.len()
            )));
        }
        for (row, case) in self.rows.iter().zip(cases) {
            if (row.case_id, row.gt, row.last) != (case.case_id, case.gt, case.last) {
                return Err(Error::Data(format!(
                    "dump row for case {} does not match the split (gt {}, last {})",
                    row.case_id, case.gt, case.last
                )));
            }
        }
        Ok(())
    }

    /// Computes the metric report from the dump alone.
    ///
    /// In top-M mode an item outside the list counts as a miss at every
    /// cutoff, and masking deletes the last item from the list; this needs
    /// `M >= max(K) + 1` so an item at position `max(K) + 1` can move up.
    pub fn evaluate(&self, config: &RankingConfig) -> Result<MetricReport> {
        if self.rows.is_empty() {
            return Err(Error::Empty("score dump"));
        }
        if let DumpMode::TopM(m) = self.mode {
            if m < config.max_k() + 1 {
                return Err(Error::Config(format!(
                    "top-M dump with M = {m} cannot support K = {} (needs M >= K + 1)",
                    config.max_k()
                )));
            }
        }
        let mut acc = MetricAccumulator::new(config)?;
        for row in &self.rows {
            let case = EvalCase {
                case_id: row.case_id,
                prefix: vec![row.last],
                gt: row.gt,
                last: row.last,
            };
            let result = match &row.payload {
                Payload::Scores(s) => rank_case(s, &case, config.mask_last),
                Payload::Ranked(list) => rank_case_in_list(list, &case, config.mask_last),
            };
            acc.add(&result);
        }
        acc.finish("")
    }
}

fn check_scores(scores: &[f32], n: usize) -> Result<()> {
    if scores.len() != n {
        return Err(Error::Data(format!(
            "{} scores for a catalog of {n}",
            scores.len()
        )));
    }
    if let Some(j) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("score of item {j}")));
    }
    Ok(())
}

fn parse_row(line: &str, line_no: usize, n: usize, mode: DumpMode) -> Result<DumpRow> {
    let bad = |msg: String| Error::Parse { line: line_no, msg };
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 4 {
        return Err(bad(format!("expected 4 columns, found {}", cols.len())));
    }
    let int = |s: &str, what: &str| -> Result<usize> {
        s.parse().map_err(|_| bad(format!("invalid {what} {s:?}")))
    };
    let case_id = int(cols[0], "case id")? as u64;
    let gt = int(cols[1], "gt")?;
    let last = int(cols[2], "last")?;
    for item in [gt, last] {
        if item >= n {
            return Err(bad(format!("item {item} outside catalog of {n}")));
        }
    }
    let payload = match mode {
        DumpMode::Scores => {
            let scores = cols[3]
                .split(',')
                .map(|t| t.parse::<f32>().map_err(|_| bad(format!("invalid score {t:?}"))))
                .collect::<Result<Vec<_>>>()?;
            check_scores(&scores, n).map_err(|e| bad(e.to_string()))?;
            Payload::Scores(scores)
        }
        DumpMode::TopM(m) => {
            let list = parse_index_list(cols[3], line_no)?;
            if list.len() != m {
                return Err(bad(format!("expected {m} ranked items, found {}", list.len())));
            }
            let mut seen = vec![false; n];
            for &i in &list {
                if i >= n || std::mem::replace(&mut seen[i], true) {
                    return Err(bad(format!("ranked list has invalid or repeated item {i}")));
                }
            }
            Payload::Ranked(list)
        }
    };
    Ok(DumpRow {
        case_id,
        gt,
        last,
        payload,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{ScoreVector, TableScorer};

    /// Every case puts the last item first and the ground truth eleventh.
    fn displaced(n_cases: usize) -> (TableScorer, Vec<EvalCase>) {
        let n = 20;
        let mut table = TableScorer::new(n);
        let mut cases = Vec::new();
        for c in 0..n_cases {
            let last = c % n;
            let gt = (c + 1) % n;
            let mut scores = vec![0.0f32; n];
            scores[last] = 100.0;
            let mut next = 99.0;
            for (j, s) in scores.iter_mut().enumerate() {
                if j != last && j != gt {
                    *s = next;
                    next -= 1.0;
                    if next < 91.0 {
                        break;
                    }
                }
            }
            scores[gt] = 89.5;
            let prefix = vec![c % 7, last];
            table.insert(prefix.clone(), ScoreVector(scores));
            cases.push(EvalCase::new(c as u64, prefix, gt).unwrap());
        }
        (table, cases)
    }

    #[test]
    fn displaced_ground_truth_is_recovered_by_masking() {
        let (table, cases) = displaced(5);
        let cfg = RankingConfig::new(&[10], true).unwrap();
        for mode in [DumpMode::Scores, DumpMode::TopM(11)] {
            let dump = ScoreDump::from_scorer(&table, &cases, mode).unwrap();
            let m = &dump.evaluate(&cfg).unwrap().metrics[0];
            assert_eq!((m.hit, m.hrli, m.hit_star), (0.0, 1.0, Some(1.0)));
            assert_eq!(m.hrli_star, Some(0.0));
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let (table, cases) = displaced(4);
        for mode in [DumpMode::Scores, DumpMode::TopM(12)] {
            let dump = ScoreDump::from_scorer(&table, &cases, mode).unwrap();
            let mut buf = Vec::new();
            dump.write(&mut buf).unwrap();
            let back = ScoreDump::read(buf.as_slice()).unwrap();
            assert_eq!(back, dump);
        }
    }

    #[test]
    fn awkward_floats_survive_the_text_form() {
        let scores = vec![0.1f32, f32::MIN_POSITIVE, -3.4e38, 1.0 / 3.0];
        let dump = ScoreDump {
            catalog_size: 4,
            mode: DumpMode::Scores,
            rows: vec![DumpRow {
                case_id: 0,
                gt: 1,
                last: 2,
                payload: Payload::Scores(scores),
            }],
        };
        let mut buf = Vec::new();
        dump.write(&mut buf).unwrap();
        assert_eq!(ScoreDump::read(buf.as_slice()).unwrap(), dump);
    }

    #[test]
    fn short_top_lists_are_rejected_for_large_k() {
        let (table, cases) = displaced(2);
        let dump = ScoreDump::from_scorer(&table, &cases, DumpMode::TopM(10)).unwrap();
        let cfg = RankingConfig::new(&[10], true).unwrap();
        assert!(matches!(dump.evaluate(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn catalog_and_case_mismatches_are_reported() {
        let (table, cases) = displaced(3);
        let dump = ScoreDump::from_scorer(&table, &cases, DumpMode::Scores).unwrap();
        assert!(dump.check_cases(&cases, 20).is_ok());
        assert!(dump.check_cases(&cases, 21).is_err());
        assert!(dump.check_cases(&cases[..2], 20).is_err());
    }

    #[test]
    fn malformed_rows_carry_line_numbers() {
        let text = "#hrli-score-dump v1\tcatalog_size=3\tmode=topm\tm=2\trows=2\n\
                    case_id\tgt\tlast\tpayload\n\
                    0\t1\t2\t2,1\n\
                    1\t1\t2\t2,2\n";
        match ScoreDump::read(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }
}
