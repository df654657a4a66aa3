//! Comparison tables built from metric reports.
//!
//! One column per report. Rows start with the last-item hit rates, followed
//! by NDCG and Hit blocks per cutoff, each block holding the plain metric,
//! the masked metric and the relative improvement. Rendering never touches a
//! model or a dataset: the table is a pure function of its reports.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eval::{improvement_pct, MetricReport, MetricsAtK};
use crate::{Error, Result};

pub const TABLE_FORMAT: &str = "hrli-table/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Tsv,
    Markdown,
    Json,
}

impl FromStr for TableFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(TableFormat::Tsv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "json" => Ok(TableFormat::Json),
            other => Err(Error::Config(format!("unknown table format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub metric: String,
    pub cells: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub format: String,
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

/// Renders an improvement percentage with sign and two decimals.
pub fn format_improvement(pct: Option<f64>) -> String {
    match pct {
        Some(p) => format!("{p:+.2}%"),
        None => "n/a".to_string(),
    }
}

fn value(x: f64) -> String {
    format!("{x:.4}")
}

fn starred(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), value)
}

fn improvement(base: f64, star: Option<f64>) -> Result<String> {
    Ok(match star {
        Some(s) => format_improvement(improvement_pct(base, s)?),
        None => "n/a".to_string(),
    })
}

type Cell = fn(&MetricsAtK) -> Result<String>;

/// Builds the comparison table. All reports must share the same cutoffs.
pub fn build_table(reports: &[MetricReport]) -> Result<Table> {
    let first = reports.first().ok_or(Error::Empty("report list"))?;
    let ks = first.ks();
    for r in reports {
        if r.ks() != ks {
            return Err(Error::Data(format!(
                "reports disagree on cutoffs: {:?} vs {:?}",
                ks,
                r.ks()
            )));
        }
    }
    let any_masked = reports.iter().any(|r| r.mask_last);
    let columns = reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if r.label.is_empty() {
                format!("model{}", i + 1)
            } else {
                r.label.clone()
            }
        })
        .collect();

    let mut rows = Vec::new();
    let mut push = |metric: String, cell: Cell, k: usize| -> Result<()> {
        let cells = reports
            .iter()
            .map(|r| cell(r.at(k).expect("cutoffs checked above")))
            .collect::<Result<Vec<_>>>()?;
        rows.push(TableRow { metric, cells });
        Ok(())
    };

    for &k in &ks {
        push(format!("HRLI@{k}"), |m| Ok(value(m.hrli)), k)?;
        if any_masked {
            push(format!("HRLI*@{k}"), |m| Ok(starred(m.hrli_star)), k)?;
        }
    }
    for &k in &ks {
        push(format!("NDCG@{k}"), |m| Ok(value(m.ndcg)), k)?;
        if any_masked {
            push(format!("NDCG*@{k}"), |m| Ok(starred(m.ndcg_star)), k)?;
            push("Improv.".into(), |m| improvement(m.ndcg, m.ndcg_star), k)?;
        }
    }
    for &k in &ks {
        push(format!("Hit@{k}"), |m| Ok(value(m.hit)), k)?;
        if any_masked {
            push(format!("Hit*@{k}"), |m| Ok(starred(m.hit_star)), k)?;
            push("Improv.".into(), |m| improvement(m.hit, m.hit_star), k)?;
        }
    }
    rows.push(TableRow {
        metric: "n_eval".into(),
        cells: reports.iter().map(|r| r.n_eval.to_string()).collect(),
    });
    rows.push(TableRow {
        metric: "n_gt_equals_last".into(),
        cells: reports.iter().map(|r| r.n_gt_equals_last.to_string()).collect(),
    });
    Ok(Table {
        format: TABLE_FORMAT.to_string(),
        columns,
        rows,
    })
}

impl Table {
    pub fn render(&self, format: TableFormat) -> Result<String> {
        let mut out = String::new();
        match format {
            TableFormat::Tsv => {
                let _ = writeln!(out, "metric\t{}", self.columns.join("\t"));
                for row in &self.rows {
                    let _ = writeln!(out, "{}\t{}", row.metric, row.cells.join("\t"));
                }
            }
            TableFormat::Markdown => {
                let _ = writeln!(out, "| Metric | {} |", self.columns.join(" | "));
                let _ = writeln!(out, "|---|{}", "---:|".repeat(self.columns.len()));
                for row in &self.rows {
                    let _ = writeln!(out, "| {} | {} |", row.metric, row.cells.join(" | "));
                }
            }
            TableFormat::Json => {
                out = serde_json::to_string_pretty(self)?;
                out.push('\n');
            }
        }
        Ok(out)
    }
}

/// Builds and renders in one step.
pub fn render(reports: &[MetricReport], format: TableFormat) -> Result<String> {
    build_table(reports)?.render(format)
}
