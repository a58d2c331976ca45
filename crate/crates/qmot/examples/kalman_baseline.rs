//! A single noisy trajectory pushed through the Kalman filter: how the
//! filtered position compares with the raw measurements, and how the
//! velocity estimate converges without ever being measured.
//!
//! The filter tracks `[x, y, vx, vy]` and observes position only, so its
//! velocity estimate exists purely through the cross covariance built up
//! by repeated predict/update cycles. The table shows the first frames in
//! detail: while the velocity estimate is still walking from its initial
//! zero toward the true velocity, the filtered position is worse than the
//! raw measurements (it leans on a wrong velocity); once the estimate has
//! converged the filter error drops below the sensor noise and stays
//! there. The summary compares RMS errors
//! over the whole run, then demonstrates the trade the tracker cares
//! about: through a string of missed frames the filter's coasted mean is
//! exactly the constant-velocity projection (same transition, same
//! residual velocity error), so what the filter actually adds during a
//! coast is the covariance growing with every unobserved step.
//!
//! Run with `cargo run --release --example kalman_baseline`.

use qmot::motion::{cv_predict, kf_init, kf_predict, kf_update, KalmanConfig};
use qmot::types::{Detection, Vec2};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

fn main() {
    let cfg = KalmanConfig::default();
    let dt = 0.5;
    let true_velocity = Vec2::new(3.0, -1.5);
    let sigma = 0.4;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, sigma).expect("positive sigma");

    let measure = |k: usize, rng: &mut rand_chacha::ChaCha8Rng| {
        let t = k as f64 * dt;
        Vec2::new(
            true_velocity.x * t + noise.sample(rng),
            true_velocity.y * t + noise.sample(rng),
        )
    };

    let first = Detection {
        center: measure(0, &mut rng),
        score: 0.9,
        ..Detection::default()
    };
    let mut state = kf_init(&first, &cfg);

    println!("true velocity ({}, {}) m/s, measurement sigma {sigma} m\n", 3.0, -1.5);
    println!("frame  meas err  filt err  est velocity");
    let n_frames = 40;
    let mut meas_sq = 0.0;
    let mut filt_sq = 0.0;
    for k in 1..=n_frames {
        let truth = Vec2::new(true_velocity.x * (k as f64 * dt), true_velocity.y * (k as f64 * dt));
        let z = measure(k, &mut rng);
        state = kf_predict(&state, dt, &cfg).expect("positive dt");
        state = kf_update(&state, z, &cfg).expect("well-conditioned innovation");
        let meas_err = z.distance(truth);
        let filt_err = state.position().distance(truth);
        meas_sq += meas_err * meas_err;
        filt_sq += filt_err * filt_err;
        if k <= 8 || k == n_frames {
            let v = state.velocity();
            println!("{k:>5} {meas_err:>9.3} {filt_err:>9.3}  ({:>6.3}, {:>6.3})", v.x, v.y);
        } else if k == 9 {
            println!("  ...");
        }
    }
    let n = n_frames as f64;
    println!(
        "\nposition RMSE: measurements {:.3} m, filter {:.3} m",
        (meas_sq / n).sqrt(),
        (filt_sq / n).sqrt()
    );
    let v = state.velocity();
    println!(
        "final velocity estimate ({:.3}, {:.3}) m/s, error {:.3} m/s",
        v.x,
        v.y,
        v.distance(true_velocity)
    );

    println!("\ncoasting through 5 missed frames from the final state:");
    println!("frames  cv projection err  kf prediction err  kf sqrt(P_xx)");
    let base = state.clone();
    let t0 = n_frames as f64 * dt;
    let mut coasted = base.clone();
    for m in 1..=5 {
        coasted = kf_predict(&coasted, dt, &cfg).expect("positive dt");
        let t = t0 + m as f64 * dt;
        let truth = Vec2::new(true_velocity.x * t, true_velocity.y * t);
        let cv = cv_predict(base.position(), base.velocity(), m as f64 * dt)
            .expect("finite state");
        println!(
            "{m:>6} {:>18.3} {:>18.3} {:>14.3}",
            cv.distance(truth),
            coasted.position().distance(truth),
            coasted.covariance[(0, 0)].sqrt(),
        );
    }
}
