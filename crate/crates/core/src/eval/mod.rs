//! AUC-ROC and F1, pooled and per length bucket, plus the report formats.

mod external;
mod metrics;
mod report;

use serde::{Deserialize, Serialize};

use crate::corpus::{Bucket, BucketSpec, Label};
use crate::error::{Error, Result};

pub use external::{ingest_external_scores, ExternalScores, PROBABILITY_THRESHOLD};
pub use metrics::{auc_from_scores, auc_roc, f1_score};
pub use report::{emit_report, ReportFormat};

/// One detector output joined to its ground truth. Higher scores mean more
/// machine-like.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredRecord {
    pub record_id: String,
    pub label: Label,
    pub score: f64,
    pub bucket: Bucket,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeRow {
    #[serde(rename = "range")]
    pub bucket: Bucket,
    pub auc: Option<f64>,
    pub f1: Option<f64>,
    pub n_human: usize,
    pub n_machine: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub auc: Option<f64>,
    pub f1: Option<f64>,
    pub n_human: usize,
    pub n_machine: usize,
}

impl AggregateRow {
    pub fn n(&self) -> usize {
        self.n_human + self.n_machine
    }
}

/// Per-bucket metrics in spec order plus the pooled aggregate. Metrics are
/// absent wherever one class is missing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeReport {
    pub rows: Vec<RangeRow>,
    pub aggregate: AggregateRow,
}

impl RangeReport {
    /// Unweighted mean of the per-bucket AUCs that are present. Distinct from
    /// the pooled `aggregate.auc`.
    pub fn range_mean_auc(&self) -> Option<f64> {
        let present: Vec<f64> = self.rows.iter().filter_map(|r| r.auc).collect();
        if present.is_empty() {
            None
        } else {
            Some(present.iter().sum::<f64>() / present.len() as f64)
        }
    }
}

fn metrics_for(scored: &[ScoredRecord], threshold: f64) -> Result<(Option<f64>, Option<f64>, usize, usize)> {
    let n_machine = scored.iter().filter(|s| s.label == Label::Machine).count();
    let n_human = scored.len() - n_machine;
    let auc = metrics::auc_roc(scored)?;
    let f1 = auc.map(|_| metrics::f1_score(scored, threshold));
    Ok((auc, f1, n_human, n_machine))
}

/// Groups by bucket and computes AUC and F1 per group and over everything.
pub fn evaluate_by_range(scored: &[ScoredRecord], spec: &BucketSpec, threshold: f64) -> Result<RangeReport> {
    metrics::check_finite(scored)?;
    let mut groups: Vec<Vec<ScoredRecord>> = vec![Vec::new(); spec.len()];
    for s in scored {
        let pos = spec.position(s.bucket).ok_or_else(|| {
            Error::Data(format!(
                "record {:?} has bucket {} which is not in the bucket spec",
                s.record_id, s.bucket
            ))
        })?;
        groups[pos].push(s.clone());
    }
    let rows = spec
        .ranges()
        .iter()
        .zip(&groups)
        .map(|(&bucket, group)| {
            let (auc, f1, n_human, n_machine) = metrics_for(group, threshold)?;
            Ok(RangeRow {
                bucket,
                auc,
                f1,
                n_human,
                n_machine,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (auc, f1, n_human, n_machine) = metrics_for(scored, threshold)?;
    Ok(RangeReport {
        rows,
        aggregate: AggregateRow {
            auc,
            f1,
            n_human,
            n_machine,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, label: Label, score: f64, bucket: Bucket) -> ScoredRecord {
        ScoredRecord {
            record_id: id.into(),
            label,
            score,
            bucket,
        }
    }

    #[test]
    fn single_bucket_row_equals_aggregate() {
        let b = Bucket::new(20, 24);
        let s = vec![
            rec("a", Label::Machine, 0.8, b),
            rec("b", Label::Machine, -0.4, b),
            rec("c", Label::Human, 0.6, b),
            rec("d", Label::Human, -0.2, b),
        ];
        let report = evaluate_by_range(&s, &BucketSpec::default(), 0.0).unwrap();
        assert_eq!(report.rows.len(), 19);
        let row = &report.rows[2];
        assert_eq!(row.bucket, b);
        assert_eq!(row.auc, report.aggregate.auc);
        assert_eq!(row.f1, report.aggregate.f1);
        assert_eq!((row.n_human, row.n_machine), (2, 2));
        assert_eq!(report.aggregate.n(), 4);
        assert!(report.rows.iter().filter(|r| r.bucket != b).all(|r| r.auc.is_none() && r.f1.is_none()));
    }

    #[test]
    fn missing_class_rows_are_absent() {
        let (b1, b2) = (Bucket::new(10, 14), Bucket::new(15, 19));
        let s = vec![
            rec("a", Label::Machine, 0.8, b1),
            rec("b", Label::Human, 0.1, b1),
            rec("c", Label::Machine, 0.7, b2),
        ];
        let report = evaluate_by_range(&s, &BucketSpec::default(), 0.5).unwrap();
        assert_eq!(report.rows[0].auc, Some(1.0));
        assert_eq!(report.rows[1].auc, None);
        assert_eq!(report.rows[1].f1, None);
        assert_eq!(report.rows[1].n_machine, 1);
        assert_eq!(report.aggregate.auc, Some(1.0));
        assert_eq!(report.aggregate.n(), 3);
        assert_eq!(report.range_mean_auc(), Some(1.0));
    }

    #[test]
    fn unknown_bucket_is_a_data_error() {
        let s = vec![rec("a", Label::Machine, 0.8, Bucket::new(10, 15))];
        assert!(matches!(
            evaluate_by_range(&s, &BucketSpec::default(), 0.0),
            Err(Error::Data(_))
        ));
    }
}
