//! Motion prediction: the constant-velocity step used by association, and
//! a linear Kalman filter kept as a baseline for comparison runs.
//!
//! The Kalman state is (cx, cy, vx, vy) with position-only measurements;
//! velocity is observed only through initialization and the transition.
//! Process noise scales linearly with the time step.

use crate::types::{Detection, Vec2};
use crate::{Error, Result};
use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix4x2, Vector2, Vector4};
use serde::{Deserialize, Serialize};

/// Constant-velocity prediction: `center + velocity * dt`.
pub fn cv_predict(center: Vec2, velocity: Vec2, dt: f64) -> Result<Vec2> {
    if dt < 0.0 {
        return Err(Error::NegativeTimeStep(dt));
    }
    Ok(center.add(velocity.scale(dt)))
}

/// Noise and initialization settings for the Kalman baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KalmanConfig {
    pub process_noise_pos: f64,
    pub process_noise_vel: f64,
    pub measurement_noise_pos: f64,
    pub initial_pos_var: f64,
    pub initial_vel_var: f64,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        KalmanConfig {
            process_noise_pos: 0.1,
            process_noise_vel: 0.1,
            measurement_noise_pos: 0.5,
            initial_pos_var: 1.0,
            initial_vel_var: 1.0,
        }
    }
}

impl KalmanConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.process_noise_pos,
            self.process_noise_vel,
            self.measurement_noise_pos,
            self.initial_pos_var,
            self.initial_vel_var,
        ];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidConfig("kalman noise parameters must be positive".into()))
        }
    }
}

/// Filter state: mean (cx, cy, vx, vy) and covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: Vector4<f64>,
    pub covariance: Matrix4<f64>,
}

impl KalmanState {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.mean[0], self.mean[1])
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.mean[2], self.mean[3])
    }
}

/// Initializes the filter from a detection: mean from its center and
/// velocity, diagonal covariance from the configured initial variances.
pub fn kf_init(d: &Detection, cfg: &KalmanConfig) -> KalmanState {
    KalmanState {
        mean: Vector4::new(d.center.x, d.center.y, d.velocity.x, d.velocity.y),
        covariance: Matrix4::from_diagonal(&Vector4::new(
            cfg.initial_pos_var,
            cfg.initial_pos_var,
            cfg.initial_vel_var,
            cfg.initial_vel_var,
        )),
    }
}

fn transition(dt: f64) -> Matrix4<f64> {
    let mut f = Matrix4::identity();
    f[(0, 2)] = dt;
    f[(1, 3)] = dt;
    f
}

/// Time update: mean through the constant-velocity transition, covariance
/// through `F P F^T + Q(dt)` with `Q` diagonal and proportional to `dt`.
pub fn kf_predict(s: &KalmanState, dt: f64, cfg: &KalmanConfig) -> Result<KalmanState> {
    if dt < 0.0 {
        return Err(Error::NegativeTimeStep(dt));
    }
    let f = transition(dt);
    let q = Matrix4::from_diagonal(&Vector4::new(
        cfg.process_noise_pos * dt,
        cfg.process_noise_pos * dt,
        cfg.process_noise_vel * dt,
        cfg.process_noise_vel * dt,
    ));
    Ok(KalmanState {
        mean: f * s.mean,
        covariance: f * s.covariance * f.transpose() + q,
    })
}

/// Measurement update with a position-only observation. The posterior
/// covariance is symmetrized, which keeps it positive definite through
/// long predict/update chains.
pub fn kf_update(s: &KalmanState, measured_center: Vec2, cfg: &KalmanConfig) -> Result<KalmanState> {
    if !measured_center.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let h = Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
    let r = Matrix2::from_diagonal(&Vector2::new(
        cfg.measurement_noise_pos,
        cfg.measurement_noise_pos,
    ));
    let innovation_cov = h * s.covariance * h.transpose() + r;
    let inv = innovation_cov.try_inverse().ok_or(Error::SingularInnovation)?;
    let gain: Matrix4x2<f64> = s.covariance * h.transpose() * inv;
    let innovation = Vector2::new(measured_center.x, measured_center.y) - h * s.mean;
    let mean = s.mean + gain * innovation;
    let cov = (Matrix4::identity() - gain * h) * s.covariance;
    Ok(KalmanState {
        mean,
        covariance: (cov + cov.transpose()) * 0.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn det_at(center: Vec2, velocity: Vec2) -> Detection {
        Detection { center, velocity, ..Detection::default() }
    }

    #[test]
    fn cv_predict_direct_substitution() {
        let p = cv_predict(Vec2::new(0.0, 0.0), Vec2::new(1.0, 2.0), 0.5).unwrap();
        assert_eq!(p, Vec2::new(0.5, 1.0));
        let p = cv_predict(Vec2::new(10.0, -3.0), Vec2::new(-2.0, 4.0), 0.5).unwrap();
        assert_eq!(p, Vec2::new(9.0, -1.0));
        let c = Vec2::new(3.0, 7.0);
        assert_eq!(cv_predict(c, Vec2::new(5.0, -5.0), 0.0).unwrap(), c);
        assert!(matches!(
            cv_predict(c, Vec2::new(0.0, 0.0), -0.1),
            Err(Error::NegativeTimeStep(_))
        ));
    }

    #[test]
    fn cv_predict_composes_over_time() {
        let c = Vec2::new(1.0, 2.0);
        let v = Vec2::new(-0.5, 3.0);
        let direct = cv_predict(c, v, 0.75).unwrap();
        let stepped = cv_predict(cv_predict(c, v, 0.5).unwrap(), v, 0.25).unwrap();
        assert_relative_eq!(direct.x, stepped.x, max_relative = 1e-15);
        assert_relative_eq!(direct.y, stepped.y, max_relative = 1e-15);
    }

    #[test]
    fn kf_init_builds_diagonal_covariance() {
        let cfg = KalmanConfig::default();
        let s = kf_init(&det_at(Vec2::new(1.0, 2.0), Vec2::new(0.0, 0.0)), &cfg);
        assert_eq!(s.mean, Vector4::new(1.0, 2.0, 0.0, 0.0));
        assert_eq!(s.covariance, Matrix4::identity());
        let cfg = KalmanConfig { initial_pos_var: 4.0, ..cfg };
        let s = kf_init(&det_at(Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.0)), &cfg);
        assert_eq!(s.covariance[(0, 0)], 4.0);
    }

    #[test]
    fn kf_predict_propagates_mean() {
        let cfg = KalmanConfig::default();
        let s = KalmanState {
            mean: Vector4::new(0.0, 0.0, 1.0, 2.0),
            covariance: Matrix4::identity(),
        };
        let p = kf_predict(&s, 1.0, &cfg).unwrap();
        assert_eq!(p.mean, Vector4::new(1.0, 2.0, 1.0, 2.0));
        // dt = 0 leaves the state untouched (Q is proportional to dt).
        let p0 = kf_predict(&s, 0.0, &cfg).unwrap();
        assert_eq!(p0.mean, s.mean);
        assert_eq!(p0.covariance, s.covariance);
        assert!(kf_predict(&s, -0.5, &cfg).is_err());
    }

    #[test]
    fn repeated_predicts_inflate_covariance() {
        let cfg = KalmanConfig::default();
        let mut s = kf_init(&det_at(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)), &cfg);
        let mut last_trace = s.covariance.trace();
        for _ in 0..10 {
            s = kf_predict(&s, 0.5, &cfg).unwrap();
            let trace = s.covariance.trace();
            assert!(trace > last_trace);
            last_trace = trace;
        }
    }

    #[test]
    fn update_with_predicted_position_keeps_mean() {
        let cfg = KalmanConfig::default();
        let s = kf_init(&det_at(Vec2::new(2.0, -1.0), Vec2::new(0.5, 0.5)), &cfg);
        let u = kf_update(&s, Vec2::new(2.0, -1.0), &cfg).unwrap();
        assert_relative_eq!(u.mean[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(u.mean[1], -1.0, max_relative = 1e-12);
    }

    #[test]
    fn update_never_inflates_covariance() {
        let cfg = KalmanConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = kf_init(&det_at(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0)), &cfg);
        for _ in 0..50 {
            s = kf_predict(&s, 0.5, &cfg).unwrap();
            let before = s.covariance.trace();
            s = kf_update(
                &s,
                Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)),
                &cfg,
            )
            .unwrap();
            assert!(s.covariance.trace() <= before + 1e-12);
        }
    }

    #[test]
    fn tiny_measurement_noise_pins_posterior_to_measurement() {
        let cfg = KalmanConfig { measurement_noise_pos: 1e-8, ..KalmanConfig::default() };
        let s = kf_init(&det_at(Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.0)), &cfg);
        let u = kf_update(&s, Vec2::new(3.0, -4.0), &cfg).unwrap();
        assert!((u.mean[0] - 3.0).abs() < 1e-4);
        assert!((u.mean[1] + 4.0).abs() < 1e-4);
    }

    #[test]
    fn filter_locks_onto_linear_trajectory() {
        // Small noise settings, perfectly linear truth at |v| = 5 m/s.
        let cfg = KalmanConfig {
            process_noise_pos: 1e-6,
            process_noise_vel: 1e-6,
            measurement_noise_pos: 1e-6,
            initial_pos_var: 1.0,
            initial_vel_var: 1.0,
        };
        let v = Vec2::new(3.0, 4.0);
        let mut s = kf_init(&det_at(Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.0)), &cfg);
        let dt = 0.5;
        for k in 1..=10 {
            let truth = Vec2::new(v.x * dt * k as f64, v.y * dt * k as f64);
            s = kf_predict(&s, dt, &cfg).unwrap();
            s = kf_update(&s, truth, &cfg).unwrap();
        }
        let truth = Vec2::new(v.x * dt * 10.0, v.y * dt * 10.0);
        assert!(s.position().distance(truth) < 1e-3);
    }

    #[test]
    fn covariance_stays_spd_through_random_cycles() {
        let cfg = KalmanConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut s = kf_init(&det_at(Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.0)), &cfg);
        for _ in 0..1000 {
            s = kf_predict(&s, rng.gen_range(0.0..1.0), &cfg).unwrap();
            if rng.gen_bool(0.7) {
                s = kf_update(
                    &s,
                    Vec2::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)),
                    &cfg,
                )
                .unwrap();
            }
            let asym = (s.covariance - s.covariance.transpose()).abs().max();
            assert!(asym < 1e-9);
            let eigen = s.covariance.symmetric_eigenvalues();
            assert!(eigen.min() > 0.0, "covariance lost positive definiteness");
        }
    }
}
