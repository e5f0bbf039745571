use crate::error::{Error, Result};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before any logarithm.
pub const PROB_CLAMP: f64 = 1e-12;
const NORMALIZATION_TOLERANCE: f64 = 1e-6;

fn clamp(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

fn check_normalized(probs: &[f64]) -> Result<()> {
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE || probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::NotNormalized(sum));
    }
    Ok(())
}

fn check_label(probs: &[f64], label: usize) -> Result<()> {
    if label >= probs.len() {
        return Err(Error::LabelOutOfRange { label, num_classes: probs.len() });
    }
    Ok(())
}

/// Negative Shannon entropy (nats). Confident outputs score higher.
pub fn entropy_score(probs: &[f64]) -> Result<f64> {
    check_normalized(probs)?;
    let score: f64 = probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum();
    Ok(score + 0.0)
}

/// Negative modified entropy:
/// `(1 - p_y) ln p_y + sum_{i != y} p_i ln(1 - p_i)`.
///
/// Only the logarithm arguments are clamped, so a confident correct one-hot
/// output scores exactly 0.
pub fn mentr_score(probs: &[f64], label: usize) -> Result<f64> {
    check_label(probs, label)?;
    check_normalized(probs)?;
    let score: f64 = probs
        .iter()
        .enumerate()
        .map(|(i, &p)| if i == label { (1.0 - p) * clamp(p).ln() } else { p * (1.0 - clamp(p)).ln() })
        .sum();
    Ok(score + 0.0)
}

/// Logit of the true-class probability, `ln(p_y / (1 - p_y))`, after clamping.
pub fn logit_confidence(probs: &[f64], label: usize) -> Result<f64> {
    check_label(probs, label)?;
    let p = clamp(probs[label]);
    Ok(p.ln() - (-p).ln_1p())
}
