//! Synthetic BEV tracking scenarios with controlled degradations.
//!
//! Ground-truth objects move at constant velocity inside a square arena,
//! reflecting off its walls. Every frame, each object is either occluded
//! (with probability `miss_rate`) or emitted as one or more detections with
//! isotropic Gaussian position and velocity noise. Two cohorts can be
//! degraded: the first objects get inflated velocity noise and a score
//! drop (the motion-blur cohort), the last objects inflated position noise
//! and the same drop. Clutter arrives as Poisson false positives with low
//! scores and low qualities.
//!
//! Under oracle annotation, every detection's `loc_quality`/`vel_quality`
//! equals `exp(-|error|/gamma)` of the exact noise vector that was drawn;
//! the vectors are kept as per-detection provenance so analyses and
//! quality-model training can see the truth. False positives store
//! pseudo-error vectors consistent with their drawn qualities, so the
//! quality/error relation holds across a whole scenario. Generation is
//! deterministic for a given seed.

use crate::quality::{ngq, NgqParams, QualityEstimator};
use crate::types::{Detection, FrameDetections, Vec2};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

const BASE_SCORE_RANGE: (f64, f64) = (0.5, 0.95);
const FP_SCORE_RANGE: (f64, f64) = (0.05, 0.30);
const FP_QUALITY_RANGE: (f64, f64) = (0.01, 0.15);
const SCORE_FLOOR: f64 = 0.01;
const LOGIT_CLAMP: f64 = 1e-12;

/// How detection qualities are annotated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityAnnotation {
    /// Exact `exp(-|error|/gamma)` of the drawn noise.
    Oracle,
    /// Generated as oracle; callers replace the values with estimator
    /// outputs via [`annotate_learned_quality`].
    Learned,
    /// Oracle values perturbed by logit-space Gaussian noise.
    NoisyOracle,
}

impl fmt::Display for QualityAnnotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QualityAnnotation::Oracle => "oracle",
            QualityAnnotation::Learned => "learned",
            QualityAnnotation::NoisyOracle => "noisy_oracle",
        })
    }
}

impl FromStr for QualityAnnotation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(QualityAnnotation::Oracle),
            "learned" => Ok(QualityAnnotation::Learned),
            "noisy_oracle" | "noisy-oracle" => Ok(QualityAnnotation::NoisyOracle),
            other => Err(Error::InvalidConfig(format!(
                "unknown quality annotation '{other}', expected oracle, learned, or noisy_oracle"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub n_objects: usize,
    pub n_frames: usize,
    pub dt_s: f64,
    pub arena_half_extent_m: f64,
    /// Uniform range the initial object speeds are drawn from.
    pub speed_range_mps: (f64, f64),
    pub pos_noise_sigma_m: f64,
    pub vel_noise_sigma_mps: f64,
    /// Fraction of objects (taken from the front of the id range) whose
    /// velocity noise is inflated.
    pub degraded_fraction: f64,
    pub degraded_vel_noise_sigma_mps: f64,
    /// Score reduction applied to every degraded object's detections,
    /// velocity- and position-degraded cohorts alike.
    pub degraded_score_drop: f64,
    /// Fraction of objects (taken from the back of the id range) whose
    /// position noise is inflated.
    pub loc_degraded_fraction: f64,
    pub degraded_pos_noise_sigma_m: f64,
    pub miss_rate: f64,
    pub false_positive_rate_per_frame: f64,
    /// Independent noisy copies emitted per visible object per frame.
    pub detections_per_object: usize,
    /// Objects get class `id % n_classes`.
    pub n_classes: usize,
    pub quality_annotation: QualityAnnotation,
    /// Logit-space sigma used by `noisy_oracle` annotation.
    pub quality_logit_noise_sigma: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_objects: 10,
            n_frames: 50,
            dt_s: 0.5,
            arena_half_extent_m: 50.0,
            speed_range_mps: (2.0, 8.0),
            pos_noise_sigma_m: 0.15,
            vel_noise_sigma_mps: 0.3,
            degraded_fraction: 0.0,
            degraded_vel_noise_sigma_mps: 1.5,
            degraded_score_drop: 0.3,
            loc_degraded_fraction: 0.0,
            degraded_pos_noise_sigma_m: 1.5,
            miss_rate: 0.05,
            false_positive_rate_per_frame: 0.5,
            detections_per_object: 1,
            n_classes: 1,
            quality_annotation: QualityAnnotation::Oracle,
            quality_logit_noise_sigma: 0.5,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.n_objects == 0 {
            return bad("n_objects must be at least 1");
        }
        if self.n_frames == 0 {
            return bad("n_frames must be at least 1");
        }
        if !(self.dt_s > 0.0 && self.dt_s.is_finite()) {
            return bad("dt_s must be positive");
        }
        if !(self.arena_half_extent_m > 0.0 && self.arena_half_extent_m.is_finite()) {
            return bad("arena_half_extent_m must be positive");
        }
        let (lo, hi) = self.speed_range_mps;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return bad("speed_range_mps must satisfy 0 <= min <= max");
        }
        let sigma_ok = |s: f64| s.is_finite() && s >= 0.0;
        if !sigma_ok(self.pos_noise_sigma_m)
            || !sigma_ok(self.vel_noise_sigma_mps)
            || !sigma_ok(self.degraded_vel_noise_sigma_mps)
            || !sigma_ok(self.degraded_pos_noise_sigma_m)
            || !sigma_ok(self.quality_logit_noise_sigma)
        {
            return bad("noise sigmas must be non-negative");
        }
        let frac_ok = |f: f64| (0.0..=1.0).contains(&f);
        if !frac_ok(self.degraded_fraction) || !frac_ok(self.loc_degraded_fraction) {
            return bad("degraded fractions must lie in [0, 1]");
        }
        if !frac_ok(self.degraded_score_drop) {
            return bad("degraded_score_drop must lie in [0, 1]");
        }
        if !frac_ok(self.miss_rate) {
            return bad("miss_rate must lie in [0, 1]");
        }
        if !sigma_ok(self.false_positive_rate_per_frame) {
            return bad("false_positive_rate_per_frame must be non-negative");
        }
        if self.detections_per_object == 0 {
            return bad("detections_per_object must be at least 1");
        }
        if self.n_classes == 0 {
            return bad("n_classes must be at least 1");
        }
        Ok(())
    }
}

/// Membership in the inflated-velocity-noise cohort (front of id range).
pub fn is_vel_degraded(cfg: &ScenarioConfig, object_id: u64) -> bool {
    let k = (cfg.degraded_fraction * cfg.n_objects as f64).round() as u64;
    object_id < k
}

/// Membership in the inflated-position-noise cohort (back of id range).
pub fn is_loc_degraded(cfg: &ScenarioConfig, object_id: u64) -> bool {
    let k = (cfg.loc_degraded_fraction * cfg.n_objects as f64).round() as u64;
    object_id >= cfg.n_objects as u64 - k
}

/// One ground-truth object at one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtObjectState {
    pub object_id: u64,
    pub class_id: u32,
    pub center: Vec2,
    pub velocity: Vec2,
}

/// Ground truth for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GtFrame {
    pub frame_index: u64,
    pub timestamp_s: f64,
    pub objects: Vec<GtObjectState>,
}

/// Where a detection came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionOrigin {
    Object(u64),
    FalsePositive,
}

/// The exact noise a detection carries, kept alongside the emitted frames.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionProvenance {
    pub origin: DetectionOrigin,
    pub loc_error: Vec2,
    pub vel_error: Vec2,
}

/// A generated scenario: config echo, ground truth, detections, and
/// per-detection provenance aligned index-for-index with `frames`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub ngq: NgqParams,
    pub ground_truth: Vec<GtFrame>,
    pub frames: Vec<FrameDetections>,
    pub provenance: Vec<Vec<DetectionProvenance>>,
}

/// Initial state for one object when trajectories are supplied by hand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectInit {
    pub center: Vec2,
    pub velocity: Vec2,
}

/// Ground-truth frames as evaluation boxes, aligned with `frames`.
pub fn gt_boxes(frames: &[GtFrame]) -> Vec<Vec<crate::metrics::GtBox>> {
    frames
        .iter()
        .map(|f| {
            f.objects
                .iter()
                .map(|o| crate::metrics::GtBox {
                    object_id: o.object_id,
                    class_id: o.class_id,
                    center: o.center,
                })
                .collect()
        })
        .collect()
}

fn fold_axis(mut x: f64, mut v: f64, half: f64) -> (f64, f64) {
    loop {
        if x > half {
            x = 2.0 * half - x;
            v = -v;
        } else if x < -half {
            x = -2.0 * half - x;
            v = -v;
        } else {
            return (x, v);
        }
    }
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(LOGIT_CLAMP, 1.0 - LOGIT_CLAMP);
    (p / (1.0 - p)).ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Generates a scenario with randomly placed objects.
pub fn generate(cfg: &ScenarioConfig, ngq_params: &NgqParams) -> Result<Scenario> {
    cfg.validate()?;
    ngq_params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let half = cfg.arena_half_extent_m;
    let mut inits = Vec::with_capacity(cfg.n_objects);
    for _ in 0..cfg.n_objects {
        let x = rng.gen_range(-half..half);
        let y = rng.gen_range(-half..half);
        let heading = rng.gen_range(-PI..PI);
        let speed = if cfg.speed_range_mps.0 == cfg.speed_range_mps.1 {
            cfg.speed_range_mps.0
        } else {
            rng.gen_range(cfg.speed_range_mps.0..cfg.speed_range_mps.1)
        };
        inits.push(ObjectInit {
            center: Vec2::new(x, y),
            velocity: Vec2::new(speed * heading.cos(), speed * heading.sin()),
        });
    }
    generate_from(cfg, ngq_params, &inits, &mut rng)
}

/// Generates a scenario from hand-chosen initial object states; noise and
/// clutter still follow the config. Useful for golden fixtures.
pub fn generate_with_initial_states(
    cfg: &ScenarioConfig,
    ngq_params: &NgqParams,
    inits: &[ObjectInit],
) -> Result<Scenario> {
    cfg.validate()?;
    ngq_params.validate()?;
    if inits.len() != cfg.n_objects {
        return Err(Error::LengthMismatch { left: cfg.n_objects, right: inits.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    generate_from(cfg, ngq_params, inits, &mut rng)
}

fn generate_from(
    cfg: &ScenarioConfig,
    ngq_params: &NgqParams,
    inits: &[ObjectInit],
    rng: &mut ChaCha8Rng,
) -> Result<Scenario> {
    let half = cfg.arena_half_extent_m;
    let pos_noise = Normal::new(0.0, cfg.pos_noise_sigma_m)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let pos_noise_degraded = Normal::new(0.0, cfg.degraded_pos_noise_sigma_m)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let vel_noise = Normal::new(0.0, cfg.vel_noise_sigma_mps)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let vel_noise_degraded = Normal::new(0.0, cfg.degraded_vel_noise_sigma_mps)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let logit_noise = Normal::new(0.0, cfg.quality_logit_noise_sigma)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let mut centers: Vec<Vec2> = inits.iter().map(|o| o.center).collect();
    let mut velocities: Vec<Vec2> = inits.iter().map(|o| o.velocity).collect();

    let mut ground_truth = Vec::with_capacity(cfg.n_frames);
    let mut frames = Vec::with_capacity(cfg.n_frames);
    let mut provenance = Vec::with_capacity(cfg.n_frames);

    for frame_index in 0..cfg.n_frames as u64 {
        let timestamp_s = frame_index as f64 * cfg.dt_s;
        let objects: Vec<GtObjectState> = (0..cfg.n_objects as u64)
            .map(|id| GtObjectState {
                object_id: id,
                class_id: (id % cfg.n_classes as u64) as u32,
                center: centers[id as usize],
                velocity: velocities[id as usize],
            })
            .collect();

        let mut detections = Vec::new();
        let mut frame_prov = Vec::new();
        for obj in &objects {
            if cfg.miss_rate > 0.0 && rng.gen_bool(cfg.miss_rate) {
                continue;
            }
            let vel_degraded = is_vel_degraded(cfg, obj.object_id);
            let loc_degraded = is_loc_degraded(cfg, obj.object_id);
            for _ in 0..cfg.detections_per_object {
                let pdist = if loc_degraded { pos_noise_degraded } else { pos_noise };
                let vdist = if vel_degraded { vel_noise_degraded } else { vel_noise };
                let loc_error = Vec2::new(pdist.sample(rng), pdist.sample(rng));
                let vel_error = Vec2::new(vdist.sample(rng), vdist.sample(rng));
                let mut score = rng.gen_range(BASE_SCORE_RANGE.0..BASE_SCORE_RANGE.1);
                if vel_degraded || loc_degraded {
                    score = (score - cfg.degraded_score_drop).max(SCORE_FLOOR);
                }
                let mut loc_quality =
                    ngq(obj.center.add(loc_error), obj.center, ngq_params.gamma_loc)?;
                let mut vel_quality =
                    ngq(obj.velocity.add(vel_error), obj.velocity, ngq_params.gamma_vel)?;
                if cfg.quality_annotation == QualityAnnotation::NoisyOracle {
                    loc_quality = sigmoid(logit(loc_quality) + logit_noise.sample(rng));
                    vel_quality = sigmoid(logit(vel_quality) + logit_noise.sample(rng));
                }
                detections.push(Detection {
                    frame_index,
                    class_id: obj.class_id,
                    center: obj.center.add(loc_error),
                    yaw: obj.velocity.y.atan2(obj.velocity.x),
                    velocity: obj.velocity.add(vel_error),
                    score,
                    loc_quality,
                    vel_quality,
                    ..Detection::default()
                });
                frame_prov.push(DetectionProvenance {
                    origin: DetectionOrigin::Object(obj.object_id),
                    loc_error,
                    vel_error,
                });
            }
        }

        let fp_count = if cfg.false_positive_rate_per_frame > 0.0 {
            let poisson = Poisson::new(cfg.false_positive_rate_per_frame)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            poisson.sample(rng) as u64
        } else {
            0
        };
        for _ in 0..fp_count {
            let x = rng.gen_range(-half..half);
            let y = rng.gen_range(-half..half);
            let heading = rng.gen_range(-PI..PI);
            let speed = rng.gen_range(0.0..cfg.speed_range_mps.1.max(f64::MIN_POSITIVE));
            let class_id = rng.gen_range(0..cfg.n_classes as u32);
            let score = rng.gen_range(FP_SCORE_RANGE.0..FP_SCORE_RANGE.1);
            let loc_quality = rng.gen_range(FP_QUALITY_RANGE.0..FP_QUALITY_RANGE.1);
            let vel_quality = rng.gen_range(FP_QUALITY_RANGE.0..FP_QUALITY_RANGE.1);
            let loc_angle = rng.gen_range(-PI..PI);
            let vel_angle = rng.gen_range(-PI..PI);
            let loc_mag = ngq_params.gamma_loc * (1.0 / loc_quality).ln();
            let vel_mag = ngq_params.gamma_vel * (1.0 / vel_quality).ln();
            detections.push(Detection {
                frame_index,
                class_id,
                center: Vec2::new(x, y),
                yaw: heading,
                velocity: Vec2::new(speed * heading.cos(), speed * heading.sin()),
                score,
                loc_quality,
                vel_quality,
                ..Detection::default()
            });
            frame_prov.push(DetectionProvenance {
                origin: DetectionOrigin::FalsePositive,
                loc_error: Vec2::new(loc_mag * loc_angle.cos(), loc_mag * loc_angle.sin()),
                vel_error: Vec2::new(vel_mag * vel_angle.cos(), vel_mag * vel_angle.sin()),
            });
        }

        ground_truth.push(GtFrame { frame_index, timestamp_s, objects });
        frames.push(FrameDetections { frame_index, timestamp_s, detections });
        provenance.push(frame_prov);

        for i in 0..cfg.n_objects {
            let nx = centers[i].x + velocities[i].x * cfg.dt_s;
            let ny = centers[i].y + velocities[i].y * cfg.dt_s;
            let (x, vx) = fold_axis(nx, velocities[i].x, half);
            let (y, vy) = fold_axis(ny, velocities[i].y, half);
            centers[i] = Vec2::new(x, y);
            velocities[i] = Vec2::new(vx, vy);
        }
    }

    Ok(Scenario {
        config: cfg.clone(),
        ngq: *ngq_params,
        ground_truth,
        frames,
        provenance,
    })
}

/// Feature vector a quality estimator sees for one detection:
/// `[score, range / arena_half_extent, |loc_error|, |vel_error|]`.
pub fn detection_features(
    det: &Detection,
    prov: &DetectionProvenance,
    arena_half_extent_m: f64,
) -> Vec<f64> {
    vec![
        det.score,
        det.center.norm() / arena_half_extent_m,
        prov.loc_error.norm(),
        prov.vel_error.norm(),
    ]
}

/// Training tables built from a scenario: `(features, oracle target)` rows
/// for the location and velocity quality models.
#[allow(clippy::type_complexity)]
pub fn quality_samples(s: &Scenario) -> (Vec<(Vec<f64>, f64)>, Vec<(Vec<f64>, f64)>) {
    let mut loc = Vec::new();
    let mut vel = Vec::new();
    for (frame, prov) in s.frames.iter().zip(&s.provenance) {
        for (det, p) in frame.detections.iter().zip(prov) {
            let x = detection_features(det, p, s.config.arena_half_extent_m);
            loc.push((x.clone(), (-p.loc_error.norm() / s.ngq.gamma_loc).exp()));
            vel.push((x, (-p.vel_error.norm() / s.ngq.gamma_vel).exp()));
        }
    }
    (loc, vel)
}

/// Returns a copy of the scenario whose detection qualities are the
/// estimators' outputs on [`detection_features`]. Provenance and errors
/// are untouched.
pub fn annotate_learned_quality(
    s: &Scenario,
    loc_est: &QualityEstimator,
    vel_est: &QualityEstimator,
) -> Result<Scenario> {
    let mut out = s.clone();
    for (frame, prov) in out.frames.iter_mut().zip(&out.provenance) {
        for (det, p) in frame.detections.iter_mut().zip(prov) {
            let x = detection_features(det, p, out.config.arena_half_extent_m);
            det.loc_quality = loc_est.forward(&x)?;
            det.vel_quality = vel_est.forward(&x)?;
        }
    }
    Ok(out)
}
