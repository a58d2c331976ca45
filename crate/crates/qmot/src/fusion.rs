//! Score fusion and birds-eye-view non-maximum suppression.
//!
//! Fusion blends a detection's velocity quality `V` with its confidence `C`
//! into `M = V^(1-alpha) * C^alpha`. The endpoints are computed exactly:
//! `alpha = 0` returns `V`, `alpha = 1` returns `C`, and `0^0` counts as 1
//! so a zero on the switched-off side never poisons the product.
//!
//! NMS works per class on fused scores: the highest-scoring detection is
//! kept, every detection of the same class within the suppression radius
//! is dropped, and the process repeats until the group is empty or the
//! per-class cap is reached. Survivors keep their input order and carry
//! the fused score.

use crate::types::{Detection, FrameDetections};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionConfig {
    /// Blend exponent: 0 trusts velocity quality alone, 1 the raw score.
    pub alpha: f64,
    /// Suppression radius; a same-class neighbor at or inside it is dropped.
    pub nms_radius_m: f64,
    /// Cap on survivors per class, unlimited when absent.
    pub max_per_class: Option<usize>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig { alpha: 0.5, nms_radius_m: 0.5, max_per_class: None }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig("alpha must lie in [0, 1]".into()));
        }
        if !(self.nms_radius_m > 0.0 && self.nms_radius_m.is_finite()) {
            return Err(Error::InvalidConfig("nms radius must be positive".into()));
        }
        Ok(())
    }
}

/// Fuses velocity quality and confidence: `V^(1-alpha) * C^alpha`.
pub fn fuse_score(vel_quality: f64, confidence: f64, alpha: f64) -> Result<f64> {
    if !vel_quality.is_finite() || !confidence.is_finite() || !alpha.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig("alpha must lie in [0, 1]".into()));
    }
    if !(0.0..=1.0).contains(&vel_quality) {
        return Err(Error::InvalidDetection("vel_quality out of [0,1]".into()));
    }
    if !(0.0..=1.0).contains(&confidence) {
        return Err(Error::InvalidDetection("score out of [0,1]".into()));
    }
    if alpha == 0.0 {
        return Ok(vel_quality);
    }
    if alpha == 1.0 {
        return Ok(confidence);
    }
    Ok(vel_quality.powf(1.0 - alpha) * confidence.powf(alpha))
}

/// Indices of the detections surviving fused-score NMS, ascending.
pub fn bev_nms_indices(detections: &[Detection], cfg: &FusionConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    let mut fused = Vec::with_capacity(detections.len());
    for d in detections {
        fused.push(fuse_score(d.vel_quality, d.score, cfg.alpha)?);
    }

    let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, d) in detections.iter().enumerate() {
        by_class.entry(d.class_id).or_default().push(i);
    }

    let mut keep = Vec::new();
    for (_, mut group) in by_class {
        // Highest fused score first; earlier input index wins ties.
        group.sort_by(|&a, &b| fused[b].partial_cmp(&fused[a]).expect("fused scores are finite").then(a.cmp(&b)));
        let cap = cfg.max_per_class.unwrap_or(usize::MAX);
        let mut taken = 0usize;
        let mut suppressed = vec![false; group.len()];
        for gi in 0..group.len() {
            if suppressed[gi] || taken >= cap {
                continue;
            }
            let best = group[gi];
            keep.push(best);
            taken += 1;
            for gj in gi + 1..group.len() {
                if !suppressed[gj]
                    && detections[best].center.distance(detections[group[gj]].center)
                        <= cfg.nms_radius_m
                {
                    suppressed[gj] = true;
                }
            }
        }
    }
    keep.sort_unstable();
    Ok(keep)
}

/// Runs fused-score NMS and returns the surviving detections, in input
/// order, with their scores replaced by the fused value.
pub fn bev_nms(detections: &[Detection], cfg: &FusionConfig) -> Result<Vec<Detection>> {
    let keep = bev_nms_indices(detections, cfg)?;
    let mut out = Vec::with_capacity(keep.len());
    for i in keep {
        let mut d = detections[i].clone();
        d.score = fuse_score(d.vel_quality, d.score, cfg.alpha)?;
        out.push(d);
    }
    Ok(out)
}

/// Applies fusion and NMS to every frame of a sequence.
pub fn apply_fusion(frames: &[FrameDetections], cfg: &FusionConfig) -> Result<Vec<FrameDetections>> {
    frames
        .iter()
        .map(|f| {
            Ok(FrameDetections {
                frame_index: f.frame_index,
                timestamp_s: f.timestamp_s,
                detections: bev_nms(&f.detections, cfg)?,
            })
        })
        .collect()
}

/// Convenience for sweeps: fused sequences for each blend exponent.
pub fn sweep_alpha(
    frames: &[FrameDetections],
    alphas: &[f64],
    base: &FusionConfig,
) -> Result<Vec<(f64, Vec<FrameDetections>)>> {
    alphas
        .iter()
        .map(|&alpha| {
            let cfg = FusionConfig { alpha, ..base.clone() };
            Ok((alpha, apply_fusion(frames, &cfg)?))
        })
        .collect()
}
