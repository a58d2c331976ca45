//! Measures whether a detection's location error says anything about its
//! velocity error, which is the question that decides how many quality
//! gates a tracker needs.
//!
//! The pairs come from simulator provenance, so both error magnitudes are
//! known exactly for every object-born detection. Three regimes are put
//! through the same analysis. On a clean sensor the two axes are drawn
//! independently and the correlations land near zero: knowing a box is
//! well localized says nothing about its velocity estimate. With degraded
//! cohorts in the mix the pooled correlation turns slightly negative,
//! because degradation strikes one axis at a time: the objects with the
//! worst velocities are not the ones with the worst positions. Either way
//! a single fused quality would average two signals that do not move
//! together, which is the case for gating location and velocity quality
//! separately. The coupled control forces the velocity error to track the
//! location error and the correlation snaps to one; a detector behaving
//! like that could get away with one gate. The histograms show the raw
//! error distributions of the mixed regime, degraded tails included.
//!
//! Run with `cargo run --release --example quality_misalignment`.

use qmot::metrics::{analyze_quality, Histogram};
use qmot::quality::NgqParams;
use qmot::sim::{generate, DetectionOrigin, ScenarioConfig};
use rand::{Rng, SeedableRng};

fn error_pairs(cfg: &ScenarioConfig) -> Vec<(f64, f64)> {
    let scenario = generate(cfg, &NgqParams::default()).expect("config validates");
    scenario
        .frames
        .iter()
        .zip(&scenario.provenance)
        .flat_map(|(f, prov)| f.detections.iter().zip(prov))
        .filter(|(_, p)| matches!(p.origin, DetectionOrigin::Object(_)))
        .map(|(_, p)| (p.loc_error.norm(), p.vel_error.norm()))
        .collect()
}

fn print_histogram(name: &str, unit: &str, hist: &Histogram) {
    println!("{name}");
    let max = *hist.counts.iter().max().expect("bins exist");
    for (i, &count) in hist.counts.iter().enumerate() {
        let bar = "#".repeat((count * 50 / max.max(1)) as usize);
        println!(
            "  [{:>6.2}, {:>6.2}) {unit} {:>6} {bar}",
            hist.edges[i],
            hist.edges[i + 1],
            count
        );
    }
}

fn main() {
    let base = ScenarioConfig {
        n_objects: 30,
        n_frames: 200,
        miss_rate: 0.05,
        false_positive_rate_per_frame: 0.0,
        seed: 4,
        ..ScenarioConfig::default()
    };
    let clean = error_pairs(&base);
    let mixed = error_pairs(&ScenarioConfig {
        degraded_fraction: 0.2,
        loc_degraded_fraction: 0.2,
        ..base
    });
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(44);
    let coupled: Vec<(f64, f64)> = clean
        .iter()
        .map(|&(l, _)| (l, 2.0 * l * (1.0 + 0.02 * rng.gen_range(-1.0..1.0))))
        .collect();

    println!("regime            samples  pearson r  spearman rho");
    let mut mixed_analysis = None;
    for (label, pairs) in
        [("clean sensor", &clean), ("degraded cohorts", &mixed), ("coupled control", &coupled)]
    {
        let analysis = analyze_quality(pairs).expect("enough samples");
        println!(
            "{label:<17} {:>7} {:>10.4} {:>13.4}",
            pairs.len(),
            analysis.pearson_r,
            analysis.spearman_rho
        );
        if label == "degraded cohorts" {
            mixed_analysis = Some(analysis);
        }
    }

    let analysis = mixed_analysis.expect("mixed regime analyzed");
    println!();
    print_histogram("location error distribution (degraded cohorts)", "m  ", &analysis.loc_error_histogram);
    println!();
    print_histogram("velocity error distribution (degraded cohorts)", "m/s", &analysis.vel_error_histogram);
}
