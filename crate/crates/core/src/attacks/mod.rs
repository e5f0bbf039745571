//! Black-box membership inference.
//!
//! Attacks only ever see class-probability outputs obtained through the
//! [`BlackBox`] trait; model weights are not reachable from here. Every attack
//! emits scores where higher means "more likely a member", so a single ROC
//! routine evaluates all of them.

mod lira;
mod scores;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

pub use lira::{
    fit_gaussian, lira_from_shadows, lira_score, run_lira, GaussianStats, NO_IN_SHADOW_SCORE, NO_OUT_SHADOW_SCORE,
    VARIANCE_FLOOR,
};
pub use scores::{entropy_score, logit_confidence, mentr_score, PROB_CLAMP};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::harness::SplitPlan;

/// Query access to a trained model: samples in, class probabilities out.
pub trait BlackBox: Sync {
    fn predict_proba(&self, samples: ArrayView2<'_, f64>) -> Result<Array2<f64>>;
}

impl<F> BlackBox for F
where
    F: Fn(ArrayView2<'_, f64>) -> Result<Array2<f64>> + Sync,
{
    fn predict_proba(&self, samples: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self(samples)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackTag {
    Entropy,
    Mentr,
    Lira,
}

impl AttackTag {
    pub const ALL: [AttackTag; 3] = [AttackTag::Entropy, AttackTag::Mentr, AttackTag::Lira];

    pub fn name(self) -> &'static str {
        match self {
            AttackTag::Entropy => "entropy",
            AttackTag::Mentr => "mentr",
            AttackTag::Lira => "lira",
        }
    }
}

impl fmt::Display for AttackTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_lowercase();
        AttackTag::ALL
            .into_iter()
            .find(|a| a.name() == wanted)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown attack '{s}'; valid: entropy, mentr, lira")))
    }
}

/// Membership scores of one attack against one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackScoreSet {
    pub sample_ids: Vec<usize>,
    pub scores: Vec<f64>,
    pub is_member: Vec<bool>,
    pub attack_tag: AttackTag,
}

impl AttackScoreSet {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Shadow models for LiRA: all models of the experiment, including the target at `target_index`.
pub struct ShadowContext<'a> {
    pub target_index: usize,
    pub models: Vec<&'a dyn BlackBox>,
    pub plans: &'a [SplitPlan],
}

/// Confidences of the shadow models on the scored samples, aligned with them.
#[derive(Clone, Debug, Default)]
pub struct ShadowConfidences {
    /// `phi[j][s]`: logit confidence of shadow `j` on sample `s`.
    pub phi: Vec<Vec<f64>>,
    /// `is_in[j][s]`: whether sample `s` was in shadow `j`'s member set.
    pub is_in: Vec<Vec<bool>>,
}

impl ShadowConfidences {
    /// Computes confidences from shadow probability outputs on the scored samples.
    pub fn from_probabilities(shadow_probs: &[Array2<f64>], labels: &[usize], is_in: Vec<Vec<bool>>) -> Result<Self> {
        let phi = shadow_probs
            .iter()
            .map(|probs| {
                probs
                    .rows()
                    .into_iter()
                    .zip(labels)
                    .map(|(row, &y)| logit_confidence(&row.to_vec(), y))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        Ok(Self { phi, is_in })
    }
}

/// Scores samples from the target's probability outputs.
///
/// `probs` rows align with `sample_ids`, `labels` and `is_member`. LiRA also
/// needs the shadow confidences for the same samples.
pub fn score_probabilities(
    tag: AttackTag,
    probs: ArrayView2<f64>,
    labels: &[usize],
    sample_ids: &[usize],
    is_member: &[bool],
    shadows: Option<&ShadowConfidences>,
) -> Result<AttackScoreSet> {
    let n = sample_ids.len();
    if probs.nrows() != n || labels.len() != n || is_member.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: probs.nrows() });
    }
    let rows: Vec<Vec<f64>> = probs.rows().into_iter().map(|r| r.to_vec()).collect();
    let scores = match tag {
        AttackTag::Entropy => rows.iter().map(|p| entropy_score(p)).collect::<Result<Vec<_>>>()?,
        AttackTag::Mentr => rows.iter().zip(labels).map(|(p, &y)| mentr_score(p, y)).collect::<Result<Vec<_>>>()?,
        AttackTag::Lira => {
            let shadows = shadows.ok_or(Error::MissingShadowContext)?;
            let mut scores = Vec::with_capacity(n);
            let mut phi_col = Vec::with_capacity(shadows.phi.len());
            let mut in_col = Vec::with_capacity(shadows.phi.len());
            for (s, (p, &y)) in rows.iter().zip(labels).enumerate() {
                phi_col.clear();
                in_col.clear();
                phi_col.extend(shadows.phi.iter().map(|row| row[s]));
                in_col.extend(shadows.is_in.iter().map(|row| row[s]));
                let phi = logit_confidence(p, y)?;
                scores.push(lira_from_shadows(phi, &phi_col, &in_col)?);
            }
            scores
        }
    };
    Ok(AttackScoreSet { sample_ids: sample_ids.to_vec(), scores, is_member: is_member.to_vec(), attack_tag: tag })
}

/// Queries `target` on members then nonmembers and scores them with `tag`.
pub fn run_attack(
    tag: AttackTag,
    target: &dyn BlackBox,
    data: &Dataset,
    members: &[usize],
    nonmembers: &[usize],
    shadow: Option<&ShadowContext<'_>>,
) -> Result<AttackScoreSet> {
    if members.is_empty() || nonmembers.is_empty() {
        return Err(Error::Empty("member or nonmember samples"));
    }
    if tag == AttackTag::Lira && shadow.is_none() {
        return Err(Error::MissingShadowContext);
    }
    let ids: Vec<usize> = members.iter().chain(nonmembers).copied().collect();
    let is_member: Vec<bool> = members.iter().map(|_| true).chain(nonmembers.iter().map(|_| false)).collect();
    let samples = data.select_features(&ids);
    let labels = data.select_labels(&ids);
    let probs = target.predict_proba(samples.view())?;

    let confidences = match (tag, shadow) {
        (AttackTag::Lira, Some(ctx)) => {
            if ctx.models.len() < 3 {
                return Err(Error::InvalidConfig("lira needs at least 3 models".into()));
            }
            if ctx.models.len() != ctx.plans.len() || ctx.target_index >= ctx.models.len() {
                return Err(Error::InvalidConfig("lira models and split plans disagree".into()));
            }
            let mut shadow_probs = Vec::with_capacity(ctx.models.len() - 1);
            let mut is_in = Vec::with_capacity(ctx.models.len() - 1);
            for (j, (model, plan)) in ctx.models.iter().zip(ctx.plans).enumerate() {
                if j == ctx.target_index {
                    continue;
                }
                shadow_probs.push(model.predict_proba(samples.view())?);
                is_in.push(ids.iter().map(|&id| plan.is_member(id)).collect());
            }
            Some(ShadowConfidences::from_probabilities(&shadow_probs, &labels, is_in)?)
        }
        _ => None,
    };
    score_probabilities(tag, probs.view(), &labels, &ids, &is_member, confidences.as_ref())
}
