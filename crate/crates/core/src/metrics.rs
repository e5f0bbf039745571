//! ROC analysis of membership scores and classification accuracy.

use serde::{Deserialize, Serialize};

use crate::attacks::AttackScoreSet;
use crate::error::{Error, Result};

/// Receiver operating characteristic of a score set.
///
/// Point `i` is the (FPR, TPR) obtained by calling every sample with score
/// `>= thresholds[i]` a member. The first threshold is `+inf`, giving (0, 0);
/// the last is the minimum score, giving (1, 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub thresholds: Vec<f64>,
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    false_positives: Vec<u64>,
    true_positives: Vec<u64>,
    positives: u64,
    negatives: u64,
}

impl RocCurve {
    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.fpr.iter().copied().zip(self.tpr.iter().copied())
    }

    /// Trapezoidal area, accumulated in integer units of `1 / (2 P N)` so the
    /// result is exactly the Mann-Whitney statistic.
    pub fn area(&self) -> f64 {
        let doubled: u128 = (1..self.len())
            .map(|i| {
                let dx = (self.false_positives[i] - self.false_positives[i - 1]) as u128;
                dx * (self.true_positives[i] + self.true_positives[i - 1]) as u128
            })
            .sum();
        doubled as f64 / (2 * self.positives as u128 * self.negatives as u128) as f64
    }
}

/// Builds the ROC from raw scores and membership flags.
pub fn roc_from_scores(scores: &[f64], is_member: &[bool]) -> Result<RocCurve> {
    if scores.len() != is_member.len() {
        return Err(Error::DimensionMismatch { expected: scores.len(), actual: is_member.len() });
    }
    let positives = is_member.iter().filter(|&&m| m).count() as u64;
    let negatives = is_member.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut curve = RocCurve {
        thresholds: vec![f64::INFINITY],
        fpr: vec![0.0],
        tpr: vec![0.0],
        false_positives: vec![0],
        true_positives: vec![0],
        positives,
        negatives,
    };
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        // all samples tied at this score cross together
        while i < order.len() && scores[order[i]] == threshold {
            if is_member[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        curve.thresholds.push(threshold);
        curve.false_positives.push(fp);
        curve.true_positives.push(tp);
        curve.fpr.push(fp as f64 / negatives as f64);
        curve.tpr.push(tp as f64 / positives as f64);
    }
    Ok(curve)
}

pub fn roc_curve(scores: &AttackScoreSet) -> Result<RocCurve> {
    roc_from_scores(&scores.scores, &scores.is_member)
}

/// Area under the ROC curve; ties between a member and a nonmember count one half.
pub fn auc(scores: &AttackScoreSet) -> Result<f64> {
    Ok(roc_curve(scores)?.area())
}

/// TPR at the largest achieved FPR not exceeding `target_fpr` (step function, no interpolation).
pub fn tpr_at_fpr(curve: &RocCurve, target_fpr: f64) -> f64 {
    curve.points().filter(|&(fpr, _)| fpr <= target_fpr).map(|(_, tpr)| tpr).fold(0.0, f64::max)
}

/// Fraction of positions where the labels agree.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.is_empty() {
        return Err(Error::Empty("label list"));
    }
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), actual: predicted.len() });
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / predicted.len() as f64)
}
