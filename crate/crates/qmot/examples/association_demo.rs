//! The assignment stage on two hand-sized problems: one where the greedy
//! matcher walks into a trap the exact solver avoids, and one where the
//! distance gate rules pairs out before any matcher sees them.
//!
//! Greedy matching takes the globally cheapest pair first, which can force
//! an expensive leftover: in the 3x3 matrix below, trk0 and trk1 both sit
//! close to det0, and greedy hands det0 to the marginally closer trk0,
//! stranding trk1 with a cost of 8.0. The exact solver accepts the slightly
//! worse pairing for trk0 so trk1 can keep its cheap one, and pays less
//! than half in total. The second problem builds its costs from
//! predicted track positions and detections through the same gate the
//! tracker uses: pairs farther apart than the gate radius are inadmissible,
//! and a detection that no track can reach stays unmatched no matter how
//! empty the matrix gets.
//!
//! Run with `cargo run --release --example association_demo`.

use qmot::assignment::{build_cost, greedy_match, hungarian, CostMatrix, GateConfig};
use qmot::types::{Detection, Vec2};
use std::collections::BTreeMap;

fn print_matrix(values: &[f64], rows: usize, cols: usize, mask: &[bool]) {
    print!("      ");
    for c in 0..cols {
        print!("  det{c}");
    }
    println!();
    for r in 0..rows {
        print!("trk{r}  ");
        for c in 0..cols {
            if mask[r * cols + c] {
                print!("{:>6.1}", values[r * cols + c]);
            } else {
                print!("{:>6}", "-");
            }
        }
        println!();
    }
}

fn total(values: &[f64], cols: usize, pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(r, c)| values[r * cols + c]).sum()
}

fn main() {
    println!("== greedy trap ==");
    let values = vec![
        1.0, 1.2, 7.0, //
        1.1, 8.0, 7.5, //
        6.0, 7.0, 2.0,
    ];
    let mask = vec![true; 9];
    print_matrix(&values, 3, 3, &mask);
    let costs = CostMatrix::new(3, 3, values.clone(), mask).expect("well-formed matrix");
    for (name, result) in
        [("greedy", greedy_match(&costs)), ("hungarian", hungarian(&costs))]
    {
        println!(
            "{name:<10} pairs {:?}  total {:.1}",
            result.pairs,
            total(&values, 3, &result.pairs)
        );
    }

    println!("\n== gated costs from track/detection geometry ==");
    let predicted = vec![
        (Vec2::new(0.0, 0.0), 0u32),
        (Vec2::new(10.0, 0.0), 0),
        (Vec2::new(20.0, 0.0), 0),
    ];
    let det = |x: f64, y: f64| Detection {
        center: Vec2::new(x, y),
        score: 0.9,
        ..Detection::default()
    };
    // det0 sits between trk0 and trk1, det1 is reachable by trk2 only,
    // det2 is 40 m from everything.
    let detections = vec![det(4.0, 0.0), det(21.0, 1.0), det(0.0, 40.0)];
    let gate = GateConfig {
        gate_radius_m: 5.0,
        gate_radius_per_class_m: BTreeMap::new(),
        class_gated: true,
    };
    let costs = build_cost(&predicted, &detections, &gate).expect("valid inputs");
    let values: Vec<f64> = (0..3)
        .flat_map(|r| (0..3).map(move |c| (r, c)))
        .map(|(r, c)| costs.value(r, c))
        .collect();
    let mask: Vec<bool> = (0..3)
        .flat_map(|r| (0..3).map(move |c| (r, c)))
        .map(|(r, c)| costs.is_admissible(r, c))
        .collect();
    print_matrix(&values, 3, 3, &mask);
    let result = hungarian(&costs);
    println!("pairs          {:?}", result.pairs);
    println!("unmatched trk  {:?}", result.unmatched_rows);
    println!("unmatched det  {:?}  (outside every gate)", result.unmatched_cols);
}
