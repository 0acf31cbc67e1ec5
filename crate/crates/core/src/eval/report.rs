use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Bucket;
use crate::error::{Error, Result};

use super::{AggregateRow, RangeReport, RangeRow};

pub const CSV_HEADER: &str = "range,auc,f1,n_human,n_machine";
const AGGREGATE_LABEL: &str = "ALL";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ReportFormat {
    /// One row per bucket then an `ALL` row, metrics at six decimals.
    #[default]
    Csv,
    /// Full-precision structured form, including the range-mean AUC.
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonReport {
    rows: Vec<RangeRow>,
    aggregate: AggregateRow,
    range_mean_auc: Option<f64>,
}

pub fn emit_report(report: &RangeReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Json => report.to_json(),
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn parse_cell(s: &str, line: usize) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .map(Some)
        .ok_or_else(|| Error::Data(format!("report line {line}: bad metric {s:?}")))
}

fn parse_count(s: &str, line: usize) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::Data(format!("report line {line}: bad count {s:?}")))
}

impl RangeReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{CSV_HEADER}").unwrap();
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.bucket,
                cell(r.auc),
                cell(r.f1),
                r.n_human,
                r.n_machine
            )
            .unwrap();
        }
        let a = &self.aggregate;
        writeln!(
            out,
            "{AGGREGATE_LABEL},{},{},{},{}",
            cell(a.auc),
            cell(a.f1),
            a.n_human,
            a.n_machine
        )
        .unwrap();
        out
    }

    /// Reads the CSV form back. Metrics come back at the six-decimal precision
    /// they were written with, so emitting the result reproduces the input.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, h)) if h == CSV_HEADER => {}
            _ => return Err(Error::Data(format!("report must start with {CSV_HEADER}"))),
        }
        let mut rows = Vec::new();
        let mut aggregate = None;
        for (line, l) in lines {
            if aggregate.is_some() {
                return Err(Error::Data(format!("report line {line}: content after {AGGREGATE_LABEL} row")));
            }
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 5 {
                return Err(Error::Data(format!("report line {line}: expected 5 fields")));
            }
            let (auc, f1) = (parse_cell(f[1], line)?, parse_cell(f[2], line)?);
            let (n_human, n_machine) = (parse_count(f[3], line)?, parse_count(f[4], line)?);
            if f[0] == AGGREGATE_LABEL {
                aggregate = Some(AggregateRow {
                    auc,
                    f1,
                    n_human,
                    n_machine,
                });
            } else {
                let bucket: Bucket = f[0]
                    .parse()
                    .map_err(|e| Error::Data(format!("report line {line}: {e}")))?;
                rows.push(RangeRow {
                    bucket,
                    auc,
                    f1,
                    n_human,
                    n_machine,
                });
            }
        }
        let aggregate = aggregate.ok_or_else(|| Error::Data(format!("report has no {AGGREGATE_LABEL} row")))?;
        Ok(RangeReport { rows, aggregate })
    }

    pub fn to_json(&self) -> String {
        let j = JsonReport {
            rows: self.rows.clone(),
            aggregate: self.aggregate.clone(),
            range_mean_auc: self.range_mean_auc(),
        };
        let mut s = serde_json::to_string_pretty(&j).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let j: JsonReport = serde_json::from_str(text).map_err(|e| Error::Data(format!("report json: {e}")))?;
        Ok(RangeReport {
            rows: j.rows,
            aggregate: j.aggregate,
        })
    }
}
