use std::f64::consts::PI;

use ndarray::{ArrayView1, Axis};

use super::scores::logit_confidence;
use super::BlackBox;
use crate::error::{Error, Result};
use crate::harness::SplitPlan;

pub const VARIANCE_FLOOR: f64 = 1e-12;
/// Score assigned when no shadow model trained on the sample.
pub const NO_IN_SHADOW_SCORE: f64 = -1e30;
/// Score assigned when every shadow model trained on the sample.
pub const NO_OUT_SHADOW_SCORE: f64 = 0.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianStats {
    pub mean: f64,
    /// Always at least [`VARIANCE_FLOOR`].
    pub var: f64,
}

impl GaussianStats {
    pub fn new(mean: f64, var: f64) -> Self {
        Self { mean, var: var.max(VARIANCE_FLOOR) }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        let d = x - self.mean;
        -0.5 * (2.0 * PI * self.var).ln() - d * d / (2.0 * self.var)
    }
}

/// Sample mean and unbiased variance, floored.
pub fn fit_gaussian(values: &[f64]) -> Result<GaussianStats> {
    if values.is_empty() {
        return Err(Error::Empty("values to fit"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() < 2 {
        VARIANCE_FLOOR
    } else {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    };
    Ok(GaussianStats::new(mean, var))
}

/// Log-likelihood ratio of `phi` under the IN versus the OUT Gaussian.
pub fn lira_score(phi: f64, in_stats: &GaussianStats, out_stats: &GaussianStats) -> f64 {
    in_stats.log_density(phi) - out_stats.log_density(phi)
}

/// LiRA score of one sample given the shadow confidences and whether each shadow trained on it.
///
/// With fewer than two IN or two OUT values both Gaussians share the pooled
/// variance of all shadow confidences. No IN shadows at all yields
/// [`NO_IN_SHADOW_SCORE`], no OUT shadows [`NO_OUT_SHADOW_SCORE`]; an empty
/// shadow set is an error.
pub fn lira_from_shadows(phi_target: f64, shadow_phi: &[f64], shadow_in: &[bool]) -> Result<f64> {
    if shadow_phi.len() != shadow_in.len() {
        return Err(Error::DimensionMismatch { expected: shadow_phi.len(), actual: shadow_in.len() });
    }
    let mut ins = Vec::with_capacity(shadow_phi.len());
    let mut outs = Vec::with_capacity(shadow_phi.len());
    for (&phi, &is_in) in shadow_phi.iter().zip(shadow_in) {
        if is_in {
            ins.push(phi);
        } else {
            outs.push(phi);
        }
    }
    if shadow_phi.is_empty() {
        return Err(Error::Empty("shadow confidences"));
    }
    if outs.is_empty() {
        return Ok(NO_OUT_SHADOW_SCORE);
    }
    if ins.is_empty() {
        return Ok(NO_IN_SHADOW_SCORE);
    }
    let (in_stats, out_stats) = if ins.len() < 2 || outs.len() < 2 {
        let pooled = fit_gaussian(shadow_phi)?.var;
        (GaussianStats::new(fit_gaussian(&ins)?.mean, pooled), GaussianStats::new(fit_gaussian(&outs)?.mean, pooled))
    } else {
        (fit_gaussian(&ins)?, fit_gaussian(&outs)?)
    };
    Ok(lira_score(phi_target, &in_stats, &out_stats))
}

/// Online LiRA for one sample: every model except `target_index` acts as a shadow,
/// IN when the sample belongs to that shadow's member set.
pub fn run_lira(
    target_index: usize,
    sample: ArrayView1<f64>,
    sample_id: usize,
    label: usize,
    models: &[&dyn BlackBox],
    plans: &[SplitPlan],
) -> Result<f64> {
    if models.len() < 3 {
        return Err(Error::InvalidConfig("lira needs at least 3 models".into()));
    }
    if models.len() != plans.len() || target_index >= models.len() {
        return Err(Error::InvalidConfig("lira models and split plans disagree".into()));
    }
    let row = sample.insert_axis(Axis(0));
    let mut phi_target = 0.0;
    let mut shadow_phi = Vec::with_capacity(models.len() - 1);
    let mut shadow_in = Vec::with_capacity(models.len() - 1);
    for (j, (model, plan)) in models.iter().zip(plans).enumerate() {
        let probs = model.predict_proba(row)?;
        let phi = logit_confidence(probs.row(0).as_slice().expect("row of an owned matrix"), label)?;
        if j == target_index {
            phi_target = phi;
        } else {
            shadow_phi.push(phi);
            shadow_in.push(plan.is_member(sample_id));
        }
    }
    lira_from_shadows(phi_target, &shadow_phi, &shadow_in)
}
