//! Quality metric, quality loss, and a desk-scale trainable estimator.
//!
//! The quality of a prediction is measured as `exp(-|pred - gt| / gamma)`,
//! a normalized Gaussian-style score in (0, 1] that is 1 exactly when the
//! prediction equals ground truth and decays with the error norm. Location
//! and velocity use separate decay constants (defaults 1.0 and 3.0).
//!
//! Learning quality is demonstrated with a logistic model over explicit
//! per-detection features, trained by full-batch gradient descent on a
//! binary cross-entropy objective whose targets are the (soft) quality
//! values themselves. The analytic gradient is exact, which the tests pin
//! against central finite differences.

use crate::types::Vec2;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Numerical guard for the logs inside the BCE objective.
pub const BCE_CLAMP_EPS: f64 = 1e-7;

/// Decay constants for the quality metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NgqParams {
    pub gamma_loc: f64,
    pub gamma_vel: f64,
}

impl Default for NgqParams {
    fn default() -> Self {
        NgqParams { gamma_loc: 1.0, gamma_vel: 3.0 }
    }
}

impl NgqParams {
    pub fn validate(&self) -> Result<()> {
        if self.gamma_loc > 0.0 && self.gamma_vel > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig("ngq gammas must be positive".into()))
        }
    }
}

/// Normalized Gaussian quality: `exp(-|pred - gt| / gamma)`.
///
/// Returns a value in (0, 1]; equals 1 iff `pred == gt`, and is strictly
/// decreasing in the error norm.
pub fn ngq(pred: Vec2, gt: Vec2, gamma: f64) -> Result<f64> {
    if !pred.is_finite() || !gt.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidConfig(format!("gamma must be positive, got {gamma}")));
    }
    Ok((-pred.distance(gt) / gamma).exp())
}

/// Mean binary cross-entropy between predictions and (possibly soft)
/// targets. Predictions are clamped to `[eps, 1 - eps]` before the logs.
pub fn bce_quality_loss(predicted: &[f64], target: &[f64]) -> Result<f64> {
    if predicted.is_empty() {
        return Err(Error::EmptyInput("bce_quality_loss"));
    }
    if predicted.len() != target.len() {
        return Err(Error::LengthMismatch { left: predicted.len(), right: target.len() });
    }
    let n = predicted.len() as f64;
    let mut sum = 0.0;
    for (&p, &t) in predicted.iter().zip(target) {
        let p = p.clamp(BCE_CLAMP_EPS, 1.0 - BCE_CLAMP_EPS);
        sum -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
    }
    Ok(sum / n)
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Logistic model mapping a feature vector to a quality score in (0, 1).
/// A stand-in for a learned quality head: big enough to demonstrate the
/// objective end to end, small enough to gradient-check exhaustively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityEstimator {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl QualityEstimator {
    pub fn zeros(dim: usize) -> Self {
        QualityEstimator { weights: vec![0.0; dim], bias: 0.0 }
    }

    /// `sigmoid(weights . features + bias)`.
    pub fn forward(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: features.len(),
            });
        }
        let z: f64 = self.weights.iter().zip(features).map(|(w, x)| w * x).sum::<f64>() + self.bias;
        Ok(sigmoid(z))
    }

    /// Exact gradient of the single-sample BCE objective with respect to
    /// the parameters: `d_weights = (p - t) * features`, `d_bias = p - t`.
    pub fn gradient(&self, features: &[f64], target: f64) -> Result<(Vec<f64>, f64)> {
        let p = self.forward(features)?;
        let delta = p - target;
        Ok((features.iter().map(|x| delta * x).collect(), delta))
    }
}

/// Output of [`fit_quality_estimator`]: the fitted model plus the mean
/// training loss recorded before each descent step (so `epoch_losses[0]`
/// is the loss of the initial all-zero model).
#[derive(Debug, Clone)]
pub struct FitResult {
    pub estimator: QualityEstimator,
    pub epoch_losses: Vec<f64>,
}

/// Full-batch gradient descent on the BCE objective, starting from the
/// all-zero model. Deterministic: no shuffling, no momentum.
pub fn fit_quality_estimator(
    samples: &[(Vec<f64>, f64)],
    epochs: usize,
    learning_rate: f64,
) -> Result<FitResult> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("fit_quality_estimator"));
    }
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "learning rate must be positive, got {learning_rate}"
        )));
    }
    let dim = samples[0].0.len();
    for (features, _) in samples {
        if features.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: features.len() });
        }
    }
    let n = samples.len() as f64;
    let mut est = QualityEstimator::zeros(dim);
    let mut epoch_losses = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        let mut grad_w = vec![0.0; dim];
        let mut grad_b = 0.0;
        let mut preds = Vec::with_capacity(samples.len());
        for (features, target) in samples {
            let p = est.forward(features)?;
            preds.push(p);
            let delta = p - target;
            for (g, x) in grad_w.iter_mut().zip(features) {
                *g += delta * x / n;
            }
            grad_b += delta / n;
        }
        let targets: Vec<f64> = samples.iter().map(|(_, t)| *t).collect();
        epoch_losses.push(bce_quality_loss(&preds, &targets)?);
        for (w, g) in est.weights.iter_mut().zip(&grad_w) {
            *w -= learning_rate * g;
        }
        est.bias -= learning_rate * grad_b;
    }
    Ok(FitResult { estimator: est, epoch_losses })
}

/// Per-feature affine normalization, foldable back into a logistic model.
#[derive(Debug, Clone)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Standardizes features to zero mean / unit variance, fits, then folds
/// the normalization back into the returned parameters so the estimator
/// operates on raw features. Constant features keep std 1 (no scaling).
pub fn fit_standardized(
    samples: &[(Vec<f64>, f64)],
    epochs: usize,
    learning_rate: f64,
) -> Result<FitResult> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("fit_standardized"));
    }
    let dim = samples[0].0.len();
    let n = samples.len() as f64;
    let mut means = vec![0.0; dim];
    for (features, _) in samples {
        if features.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: features.len() });
        }
        for (m, x) in means.iter_mut().zip(features) {
            *m += x / n;
        }
    }
    let mut stds = vec![0.0; dim];
    for (features, _) in samples {
        for ((s, x), m) in stds.iter_mut().zip(features).zip(&means) {
            *s += (x - m).powi(2) / n;
        }
    }
    for s in &mut stds {
        *s = s.sqrt();
        if *s < 1e-12 {
            *s = 1.0;
        }
    }
    let standardized: Vec<(Vec<f64>, f64)> = samples
        .iter()
        .map(|(features, t)| {
            let z = features
                .iter()
                .zip(&means)
                .zip(&stds)
                .map(|((x, m), s)| (x - m) / s)
                .collect();
            (z, *t)
        })
        .collect();
    let fit = fit_quality_estimator(&standardized, epochs, learning_rate)?;
    let mut est = fit.estimator;
    let mut bias = est.bias;
    for ((w, m), s) in est.weights.iter_mut().zip(&means).zip(&stds) {
        *w /= s;
        bias -= *w * m;
    }
    est.bias = bias;
    Ok(FitResult { estimator: est, epoch_losses: fit.epoch_losses })
}
