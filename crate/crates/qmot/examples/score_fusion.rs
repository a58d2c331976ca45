//! Fused-score suppression on a handcrafted frame: three duplicate
//! detections of the same object disagree about whether confidence or
//! velocity quality should pick the survivor, and the blend exponent
//! decides.
//!
//! The fused score is `V^(1-alpha) * C^alpha`, so `alpha = 1` ranks by raw
//! confidence and `alpha = 0` by velocity quality alone. Detection A is
//! confident but carries a junk velocity (C 0.95, V 0.2); detection B is
//! the opposite (C 0.60, V 0.9); detection C is middling in both. With the
//! three sitting well inside one suppression radius, exactly one survives
//! per alpha: A as long as confidence dominates the blend, B once the
//! exponent drops below the crossover near 0.77 where the geometric means
//! trade places. The detached detection D is outside everyone's radius and
//! survives at every alpha, whatever its fused score.
//!
//! Run with `cargo run --release --example score_fusion`.

use qmot::fusion::{bev_nms, fuse_score, FusionConfig};
use qmot::types::{Detection, Vec2};

fn det(x: f64, y: f64, score: f64, vel_quality: f64) -> Detection {
    Detection {
        center: Vec2::new(x, y),
        score,
        vel_quality,
        ..Detection::default()
    }
}

fn main() {
    let names = ["A", "B", "C", "D"];
    let frame = vec![
        det(0.0, 0.0, 0.95, 0.2),
        det(0.3, 0.1, 0.60, 0.9),
        det(0.1, 0.3, 0.50, 0.5),
        det(12.0, 0.0, 0.40, 0.8),
    ];
    println!("det  center        C     V");
    for (name, d) in names.iter().zip(&frame) {
        println!(
            "{name}    ({:>4.1},{:>4.1}) {:>5.2} {:>5.2}",
            d.center.x, d.center.y, d.score, d.vel_quality
        );
    }

    println!("\nalpha  fused A  fused B  fused C   survivors of the cluster");
    for i in 0..=10 {
        let alpha = i as f64 / 10.0;
        let cfg = FusionConfig { alpha, nms_radius_m: 1.5, max_per_class: None };
        let fused: Vec<f64> = frame
            .iter()
            .map(|d| fuse_score(d.vel_quality, d.score, alpha).expect("inputs in range"))
            .collect();
        let survivors = bev_nms(&frame, &cfg).expect("valid config");
        let kept: Vec<&str> = survivors
            .iter()
            .map(|s| {
                let i = frame
                    .iter()
                    .position(|d| d.center == s.center)
                    .expect("survivor is one of the inputs");
                names[i]
            })
            .filter(|n| *n != "D")
            .collect();
        println!(
            "{alpha:>5.2} {:>8.3} {:>8.3} {:>8.3}   {}",
            fused[0],
            fused[1],
            fused[2],
            kept.join(" ")
        );
    }
    println!("\nD survives every row: nothing else is within its radius.");
}
