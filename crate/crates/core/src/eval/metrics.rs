use crate::corpus::Label;
use crate::error::{Error, Result};

use super::ScoredRecord;

/// Rejects non-finite scores, naming the offending record.
pub(crate) fn check_finite(scored: &[ScoredRecord]) -> Result<()> {
    match scored.iter().find(|s| !s.score.is_finite()) {
        Some(s) => Err(Error::Data(format!(
            "record {:?} has non-finite score {}",
            s.record_id, s.score
        ))),
        None => Ok(()),
    }
}

/// Area under the ROC curve, machine as the positive class. Absent when
/// either class is empty.
pub fn auc_roc(scored: &[ScoredRecord]) -> Result<Option<f64>> {
    check_finite(scored)?;
    Ok(auc_unchecked(scored.iter().map(|s| (s.score, s.label == Label::Machine))))
}

/// AUC from separate score lists. Scores must be finite.
pub fn auc_from_scores(positive: &[f64], negative: &[f64]) -> Option<f64> {
    auc_unchecked(
        positive
            .iter()
            .map(|&s| (s, true))
            .chain(negative.iter().map(|&s| (s, false))),
    )
}

/// Mann-Whitney U from rank sums. Ranks are kept doubled so that tie
/// averages stay integral and the only rounding is the final division.
fn auc_unchecked(items: impl Iterator<Item = (f64, bool)>) -> Option<f64> {
    // +0.0 folds -0.0 into 0.0 so both land in one tie group
    let mut items: Vec<(f64, bool)> = items.map(|(s, p)| (s + 0.0, p)).collect();
    let n_pos = items.iter().filter(|(_, p)| *p).count() as u64;
    let n_neg = items.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    items.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    let mut twice_rank_sum: u64 = 0;
    let mut start = 0;
    while start < items.len() {
        let mut end = start + 1;
        while end < items.len() && items[end].0 == items[start].0 {
            end += 1;
        }
        // ranks start+1..=end average to (start + 1 + end) / 2
        let twice_rank = (start + 1 + end) as u64;
        let positives = items[start..end].iter().filter(|(_, p)| *p).count() as u64;
        twice_rank_sum += twice_rank * positives;
        start = end;
    }
    let twice_u = twice_rank_sum - n_pos * (n_pos + 1);
    Some(twice_u as f64 / (2 * n_pos * n_neg) as f64)
}

/// F1 with machine as the positive class; `score > threshold` predicts
/// machine. Zero when precision and recall are both zero.
pub fn f1_score(scored: &[ScoredRecord], threshold: f64) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for s in scored {
        match (s.score > threshold, s.label) {
            (true, Label::Machine) => tp += 1,
            (true, Label::Human) => fp += 1,
            (false, Label::Machine) => fn_ += 1,
            (false, Label::Human) => {}
        }
    }
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}
