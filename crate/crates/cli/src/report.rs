//! Parsing and aggregation of experiment CSVs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::rq1::{Rq1Row, RQ1_HEADER};

/// Errors from [`parse_rq1_csv`].
#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("line {line}: expected header `{RQ1_HEADER}`, found `{found}`")]
    BadHeader { line: usize, found: String },
    #[error("line {line}: expected 9 comma-separated fields, found {found}")]
    BadFieldCount { line: usize, found: usize },
    #[error("line {line}: could not parse `{value}` as a number")]
    BadNumber { line: usize, value: String },
}

/// Parses the CSV form produced by [`crate::rq1::render_rq1_csv`].
pub fn parse_rq1_csv(text: &str) -> Result<Vec<Rq1Row>, ReportError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == RQ1_HEADER => {}
        Some((i, header)) => {
            return Err(ReportError::BadHeader {
                line: i + 1,
                found: header.to_string(),
            })
        }
        None => {
            return Err(ReportError::BadHeader {
                line: 1,
                found: String::new(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, raw) in lines {
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(ReportError::BadFieldCount {
                line: i + 1,
                found: fields.len(),
            });
        }
        fn num<T: std::str::FromStr>(line: usize, value: &str) -> Result<T, ReportError> {
            value.parse().map_err(|_| ReportError::BadNumber {
                line,
                value: value.to_string(),
            })
        }
        rows.push(Rq1Row {
            seed: num(i + 1, fields[0])?,
            arm: fields[1].to_string(),
            round: num(i + 1, fields[2])?,
            t_days: num(i + 1, fields[3])?,
            objective: num(i + 1, fields[4])?,
            strategy_infra: fields[5].to_string(),
            pct_delayed: num(i + 1, fields[6])?,
            pct_late: num(i + 1, fields[7])?,
            avg_workers: num(i + 1, fields[8])?,
        });
    }
    Ok(rows)
}

/// Per-arm aggregate over an experiment's rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub arm: String,
    pub seeds: usize,
    pub rounds: usize,
    /// Mean objective over every round of every seed.
    pub mean_objective: f64,
    /// Means of the run-level metrics over seeds.
    pub mean_pct_delayed: f64,
    pub mean_pct_late: f64,
    pub mean_avg_workers: f64,
}

/// Aggregates rows by arm. Run-level metrics are repeated on each round row,
/// so they are averaged once per seed, not once per row.
pub fn summarize(rows: &[Rq1Row]) -> Vec<ArmSummary> {
    let mut by_arm: BTreeMap<&str, Vec<&Rq1Row>> = BTreeMap::new();
    for row in rows {
        by_arm.entry(&row.arm).or_default().push(row);
    }
    by_arm
        .into_iter()
        .map(|(arm, rows)| {
            let seeds: BTreeSet<u64> = rows.iter().map(|r| r.seed).collect();
            let rounds: BTreeSet<u32> = rows.iter().map(|r| r.round).collect();
            let mean_objective =
                rows.iter().map(|r| r.objective).sum::<f64>() / rows.len() as f64;
            let mut pct_delayed = 0.0;
            let mut pct_late = 0.0;
            let mut avg_workers = 0.0;
            for &seed in &seeds {
                let run = rows
                    .iter()
                    .find(|r| r.seed == seed)
                    .expect("seed came from these rows");
                pct_delayed += run.pct_delayed;
                pct_late += run.pct_late;
                avg_workers += run.avg_workers;
            }
            let n = seeds.len() as f64;
            ArmSummary {
                arm: arm.to_string(),
                seeds: seeds.len(),
                rounds: rounds.len(),
                mean_objective,
                mean_pct_delayed: pct_delayed / n,
                mean_pct_late: pct_late / n,
                mean_avg_workers: avg_workers / n,
            }
        })
        .collect()
}

/// Renders the aggregates as an aligned text table.
pub fn render_summary(summaries: &[ArmSummary]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<14}{:>6}{:>8}{:>16}{:>13}{:>10}{:>13}",
        "arm", "seeds", "rounds", "mean_objective", "pct_delayed", "pct_late", "avg_workers"
    )
    .expect("writing to a String cannot fail");
    for s in summaries {
        writeln!(
            out,
            "{:<14}{:>6}{:>8}{:>16.3}{:>13.2}{:>10.2}{:>13.3}",
            s.arm,
            s.seeds,
            s.rounds,
            s.mean_objective,
            s.mean_pct_delayed,
            s.mean_pct_late,
            s.mean_avg_workers
        )
        .expect("writing to a String cannot fail");
    }
    out
}
