//! Fits the two logistic quality estimators on one scenario and checks, on
//! a fresh scenario, that tracking with the learned annotations holds up
//! against tracking with oracle ones.
//!
//! The training table comes straight from the simulator: each detection
//! contributes the feature vector `[score, range fraction, |loc error|,
//! |vel error|]` and the oracle target `exp(-|error|/gamma)`. Because the
//! error norms are among the features, full-batch gradient descent on the
//! BCE objective has everything it needs; the point of the exercise is the
//! plumbing (standardized fitting, folding the normalization back into raw
//! weights, re-annotating a scenario with estimator outputs), not feature
//! discovery. The final comparison reruns the gated tracker on the same
//! detections with oracle and with learned qualities: the numbers land
//! close together, which is what lets the gates run on estimated quality
//! in the first place.
//!
//! Run with `cargo run --release --example learn_quality`.

use qmot::metrics::{amota, clear_mot_sequence, pearson};
use qmot::quality::{fit_standardized, NgqParams};
use qmot::sim::{annotate_learned_quality, generate, gt_boxes, quality_samples, ScenarioConfig};
use qmot::tracker::{hyp_boxes, track_sequence, TrackerConfig, TrackerMode};

fn busy_scenario(seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        n_objects: 20,
        n_frames: 100,
        arena_half_extent_m: 35.0,
        miss_rate: 0.20,
        degraded_fraction: 0.3,
        vel_noise_sigma_mps: 0.6,
        degraded_vel_noise_sigma_mps: 3.0,
        loc_degraded_fraction: 0.2,
        false_positive_rate_per_frame: 25.0,
        seed,
        ..ScenarioConfig::default()
    }
}

fn main() {
    let ngq = NgqParams::default();

    let train = generate(&busy_scenario(100), &ngq).expect("training scenario generates");
    let (loc_samples, vel_samples) = quality_samples(&train);
    println!("training table: {} detections, 4 features each\n", loc_samples.len());

    let mut fits = Vec::new();
    for (name, samples) in [("loc", &loc_samples), ("vel", &vel_samples)] {
        let fit = fit_standardized(samples, 400, 0.5).expect("descent converges");
        let preds: Vec<f64> = samples
            .iter()
            .map(|(x, _)| fit.estimator.forward(x).expect("fitted model evaluates"))
            .collect();
        let targets: Vec<f64> = samples.iter().map(|(_, t)| *t).collect();
        let r = pearson(&preds, &targets).expect("nondegenerate predictions");
        println!(
            "{name} quality: bce {:.5} -> {:.5} over {} epochs, train pearson {:.4}",
            fit.epoch_losses.first().expect("at least one epoch"),
            fit.epoch_losses.last().expect("at least one epoch"),
            fit.epoch_losses.len(),
            r,
        );
        fits.push(fit.estimator);
    }
    let vel_est = fits.pop().expect("two fits");
    let loc_est = fits.pop().expect("two fits");

    println!("\nevaluation on a fresh seed, gated tracker, same detections:");
    println!("annotation   AMOTA    MOTA    IDS");
    let eval = generate(&busy_scenario(200), &ngq).expect("evaluation scenario generates");
    let learned = annotate_learned_quality(&eval, &loc_est, &vel_est)
        .expect("annotation preserves detection counts");
    let gt = gt_boxes(&eval.ground_truth);
    let cfg = TrackerConfig { mode: TrackerMode::Qoa, ..TrackerConfig::default() };
    for (name, scenario) in [("oracle", &eval), ("learned", &learned)] {
        let tracks = track_sequence(&scenario.frames, &cfg).expect("tracking succeeds");
        let hyp = hyp_boxes(&tracks);
        let clear = clear_mot_sequence(&gt, &hyp, 2.0).expect("ground truth is nonempty");
        let sweep = amota(&gt, &hyp, 2.0, 40).expect("positive recall");
        println!("{name:<10} {:>7.4} {:>7.4} {:>6}", sweep.amota, clear.mota, clear.ids);
    }
}
