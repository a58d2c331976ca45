//! Data association: gated cost matrices, an exact assignment solver, and
//! the greedy matcher kept as a baseline.
//!
//! Gating removes pairs from the problem instead of padding them with large
//! sentinel costs; a pair outside the gate is not an edge at all. The exact
//! solver therefore works on a bipartite graph that may be sparse and
//! rectangular. It finds a maximum-cardinality matching and, among those,
//! one of minimum total cost, via successive shortest augmenting paths with
//! dual potentials: each round runs a multi-source Dijkstra over reduced
//! costs from every unmatched row, augments along the cheapest path to an
//! unmatched column, and stops once no augmenting path exists.

use crate::types::{Detection, Vec2};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Gating rules applied while building a cost matrix.
///
/// A track/detection pair is admissible when their BEV distance is at most
/// the gate radius and, if `class_gated` is set, their classes agree. The
/// radius is resolved from the detection's class: a per-class entry if one
/// exists, the default otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateConfig {
    pub gate_radius_m: f64,
    pub gate_radius_per_class_m: BTreeMap<u32, f64>,
    pub class_gated: bool,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            gate_radius_m: 2.0,
            gate_radius_per_class_m: BTreeMap::new(),
            class_gated: true,
        }
    }
}

impl GateConfig {
    pub fn radius_for_class(&self, class_id: u32) -> f64 {
        self.gate_radius_per_class_m
            .get(&class_id)
            .copied()
            .unwrap_or(self.gate_radius_m)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |r: f64| r > 0.0 && r.is_finite();
        if !ok(self.gate_radius_m) {
            return Err(Error::InvalidConfig("gate radius must be positive".into()));
        }
        for (&class_id, &r) in &self.gate_radius_per_class_m {
            if !ok(r) {
                return Err(Error::InvalidConfig(format!(
                    "gate radius for class {class_id} must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// Dense cost matrix with a per-entry admissibility mask.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    gate_mask: Vec<bool>,
}

impl CostMatrix {
    /// Builds a matrix from row-major values and mask. Admissible entries
    /// must be finite; masked-out entries may hold anything.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>, gate_mask: Vec<bool>) -> Result<Self> {
        let expected = rows * cols;
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: values.len() });
        }
        if gate_mask.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: gate_mask.len() });
        }
        if values
            .iter()
            .zip(&gate_mask)
            .any(|(v, admissible)| *admissible && !v.is_finite())
        {
            return Err(Error::NonFiniteInput);
        }
        Ok(CostMatrix { rows, cols, values, gate_mask })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn is_admissible(&self, row: usize, col: usize) -> bool {
        self.gate_mask[row * self.cols + col]
    }
}

/// Builds the gated BEV-distance cost matrix for one association round.
/// Rows are predicted track positions with their class, columns are
/// detections; each admissible entry holds the Euclidean BEV distance.
pub fn build_cost(
    predicted: &[(Vec2, u32)],
    detections: &[Detection],
    gate: &GateConfig,
) -> Result<CostMatrix> {
    gate.validate()?;
    if predicted.iter().any(|(p, _)| !p.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let rows = predicted.len();
    let cols = detections.len();
    let mut values = Vec::with_capacity(rows * cols);
    let mut gate_mask = Vec::with_capacity(rows * cols);
    for (pos, class_id) in predicted {
        for det in detections {
            let d = pos.distance(det.center);
            let class_ok = !gate.class_gated || *class_id == det.class_id;
            values.push(d);
            gate_mask.push(class_ok && d <= gate.radius_for_class(det.class_id));
        }
    }
    CostMatrix::new(rows, cols, values, gate_mask)
}

/// Outcome of one association round, in matrix index space.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult {
    /// Matched `(row, col)` pairs, ascending by row.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
    /// Sum of matrix values over `pairs`.
    pub total_cost: f64,
}

fn assemble(costs: &CostMatrix, row_match: &[Option<usize>], col_match: &[Option<usize>]) -> AssignmentResult {
    let mut pairs = Vec::new();
    let mut unmatched_rows = Vec::new();
    let mut total_cost = 0.0;
    for (r, m) in row_match.iter().enumerate() {
        match m {
            Some(c) => {
                pairs.push((r, *c));
                total_cost += costs.value(r, *c);
            }
            None => unmatched_rows.push(r),
        }
    }
    let unmatched_cols = col_match
        .iter()
        .enumerate()
        .filter(|(_, m)| m.is_none())
        .map(|(c, _)| c)
        .collect();
    AssignmentResult { pairs, unmatched_rows, unmatched_cols, total_cost }
}

/// Exact solver: maximum-cardinality matching over admissible pairs,
/// minimum total cost among those. Ties resolve deterministically by
/// scan order, so equal inputs give equal outputs.
pub fn hungarian(costs: &CostMatrix) -> AssignmentResult {
    let n = costs.rows();
    let m = costs.cols();
    let mut row_match: Vec<Option<usize>> = vec![None; n];
    let mut col_match: Vec<Option<usize>> = vec![None; m];
    if n == 0 || m == 0 {
        return assemble(costs, &row_match, &col_match);
    }

    // Zero-initialized potentials need non-negative costs; shifting every
    // admissible value by a common offset preserves the optimum within
    // each cardinality.
    let mut shift = 0.0_f64;
    for r in 0..n {
        for c in 0..m {
            if costs.is_admissible(r, c) {
                shift = shift.min(costs.value(r, c));
            }
        }
    }
    let cost = |r: usize, c: usize| costs.value(r, c) - shift;

    let mut u = vec![0.0; n];
    let mut v = vec![0.0; m];

    loop {
        let mut dist = vec![f64::INFINITY; m];
        let mut prev_row = vec![usize::MAX; m];
        let mut col_done = vec![false; m];
        let mut row_dist = vec![f64::INFINITY; n];

        for r in 0..n {
            if row_match[r].is_none() {
                row_dist[r] = 0.0;
                for c in 0..m {
                    if costs.is_admissible(r, c) {
                        let rc = (cost(r, c) - u[r] - v[c]).max(0.0);
                        if rc < dist[c] {
                            dist[c] = rc;
                            prev_row[c] = r;
                        }
                    }
                }
            }
        }

        let mut dstar = f64::INFINITY;
        let mut jstar = usize::MAX;
        loop {
            let mut best = f64::INFINITY;
            let mut bj = usize::MAX;
            for (c, d) in dist.iter().enumerate() {
                if !col_done[c] && *d < best {
                    best = *d;
                    bj = c;
                }
            }
            if bj == usize::MAX {
                break;
            }
            if col_match[bj].is_none() {
                dstar = best;
                jstar = bj;
                break;
            }
            col_done[bj] = true;
            let r = col_match[bj].unwrap();
            row_dist[r] = best;
            for c in 0..m {
                if !col_done[c] && costs.is_admissible(r, c) {
                    let nd = best + (cost(r, c) - u[r] - v[c]).max(0.0);
                    if nd < dist[c] {
                        dist[c] = nd;
                        prev_row[c] = r;
                    }
                }
            }
        }

        if jstar == usize::MAX {
            break;
        }

        for r in 0..n {
            if row_dist[r].is_finite() {
                u[r] += dstar - row_dist[r];
            }
        }
        for c in 0..m {
            if col_done[c] {
                v[c] -= dstar - dist[c];
            }
        }

        let mut c = jstar;
        loop {
            let r = prev_row[c];
            col_match[c] = Some(r);
            match row_match[r].replace(c) {
                Some(pc) => c = pc,
                None => break,
            }
        }
    }

    assemble(costs, &row_match, &col_match)
}

/// Greedy baseline: repeatedly takes the globally cheapest admissible
/// entry whose row and column are both still free. Ties break on the
/// lower row index, then the lower column index.
pub fn greedy_match(costs: &CostMatrix) -> AssignmentResult {
    let mut entries: Vec<(f64, usize, usize)> = Vec::new();
    for r in 0..costs.rows() {
        for c in 0..costs.cols() {
            if costs.is_admissible(r, c) {
                entries.push((costs.value(r, c), r, c));
            }
        }
    }
    entries.sort_unstable_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("admissible costs are finite")
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut row_match: Vec<Option<usize>> = vec![None; costs.rows()];
    let mut col_match: Vec<Option<usize>> = vec![None; costs.cols()];
    for (_, r, c) in entries {
        if row_match[r].is_none() && col_match[c].is_none() {
            row_match[r] = Some(c);
            col_match[c] = Some(r);
        }
    }
    assemble(costs, &row_match, &col_match)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn full(rows: usize, cols: usize, values: Vec<f64>) -> CostMatrix {
        let len = values.len();
        CostMatrix::new(rows, cols, values, vec![true; len]).unwrap()
    }

    fn masked(rows: usize, cols: usize, entries: &[(usize, usize, f64)]) -> CostMatrix {
        let mut values = vec![0.0; rows * cols];
        let mut mask = vec![false; rows * cols];
        for &(r, c, v) in entries {
            values[r * cols + c] = v;
            mask[r * cols + c] = true;
        }
        CostMatrix::new(rows, cols, values, mask).unwrap()
    }

    /// Enumerates every matching (each row may stay unmatched or take any
    /// free admissible column) and returns the best (cardinality, cost).
    fn brute_force(costs: &CostMatrix) -> (usize, f64) {
        fn rec(costs: &CostMatrix, r: usize, used: u32) -> (usize, f64) {
            if r == costs.rows() {
                return (0, 0.0);
            }
            let mut best = rec(costs, r + 1, used);
            for c in 0..costs.cols() {
                if costs.is_admissible(r, c) && used & (1 << c) == 0 {
                    let (k, t) = rec(costs, r + 1, used | (1 << c));
                    let cand = (k + 1, t + costs.value(r, c));
                    if cand.0 > best.0 || (cand.0 == best.0 && cand.1 < best.1) {
                        best = cand;
                    }
                }
            }
            best
        }
        rec(costs, 0, 0)
    }

    fn check_consistent(costs: &CostMatrix, res: &AssignmentResult) {
        let mut rows_seen = vec![false; costs.rows()];
        let mut cols_seen = vec![false; costs.cols()];
        let mut total = 0.0;
        for &(r, c) in &res.pairs {
            assert!(costs.is_admissible(r, c), "matched a gated-out pair ({r},{c})");
            assert!(!rows_seen[r] && !cols_seen[c], "row or column matched twice");
            rows_seen[r] = true;
            cols_seen[c] = true;
            total += costs.value(r, c);
        }
        for &r in &res.unmatched_rows {
            assert!(!rows_seen[r]);
            rows_seen[r] = true;
        }
        for &c in &res.unmatched_cols {
            assert!(!cols_seen[c]);
            cols_seen[c] = true;
        }
        assert!(rows_seen.iter().all(|s| *s) && cols_seen.iter().all(|s| *s));
        assert!((total - res.total_cost).abs() < 1e-9);
    }

    #[test]
    fn two_by_two_where_greedy_is_suboptimal() {
        let costs = full(2, 2, vec![1.0, 2.0, 2.0, 4.0]);
        let h = hungarian(&costs);
        assert_eq!(h.pairs, vec![(0, 1), (1, 0)]);
        assert_eq!(h.total_cost, 4.0);
        let g = greedy_match(&costs);
        assert_eq!(g.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(g.total_cost, 5.0);
    }

    #[test]
    fn cardinality_beats_cost() {
        // The cheap (0,0) edge must be abandoned: only (0,1)+(1,0) reaches
        // cardinality two.
        let costs = masked(2, 2, &[(0, 0, 0.0), (0, 1, 10.0), (1, 0, 1.0)]);
        let h = hungarian(&costs);
        assert_eq!(h.pairs, vec![(0, 1), (1, 0)]);
        assert_eq!(h.total_cost, 11.0);
    }

    #[test]
    fn augmenting_path_reassigns_earlier_match() {
        let costs = masked(2, 2, &[(0, 0, 0.0), (0, 1, 3.0), (1, 0, 0.0)]);
        let h = hungarian(&costs);
        assert_eq!(h.pairs, vec![(0, 1), (1, 0)]);
        assert_eq!(h.total_cost, 3.0);
    }

    #[test]
    fn middle_row_left_unmatched_when_cheapest() {
        let costs = masked(3, 2, &[(0, 0, 0.0), (1, 0, 1.0), (1, 1, 5.0), (2, 1, 1.0)]);
        let h = hungarian(&costs);
        assert_eq!(h.pairs, vec![(0, 0), (2, 1)]);
        assert_eq!(h.unmatched_rows, vec![1]);
        assert_eq!(h.total_cost, 1.0);
    }

    #[test]
    fn single_entry_and_fully_gated() {
        let costs = full(1, 1, vec![7.0]);
        let h = hungarian(&costs);
        assert_eq!(h.pairs, vec![(0, 0)]);
        assert_eq!(h.total_cost, 7.0);

        let gated = CostMatrix::new(2, 2, vec![1.0; 4], vec![false; 4]).unwrap();
        for res in [hungarian(&gated), greedy_match(&gated)] {
            assert!(res.pairs.is_empty());
            assert_eq!(res.unmatched_rows, vec![0, 1]);
            assert_eq!(res.unmatched_cols, vec![0, 1]);
            assert_eq!(res.total_cost, 0.0);
        }
    }

    #[test]
    fn empty_dimensions() {
        let no_rows = CostMatrix::new(0, 3, vec![], vec![]).unwrap();
        let h = hungarian(&no_rows);
        assert!(h.pairs.is_empty());
        assert_eq!(h.unmatched_cols, vec![0, 1, 2]);

        let no_cols = CostMatrix::new(2, 0, vec![], vec![]).unwrap();
        let h = hungarian(&no_cols);
        assert!(h.pairs.is_empty());
        assert_eq!(h.unmatched_rows, vec![0, 1]);
    }

    #[test]
    fn rectangular_leaves_extra_columns() {
        let costs = full(2, 3, vec![1.0, 9.0, 4.0, 9.0, 1.0, 4.0]);
        let h = hungarian(&costs);
        assert_eq!(h.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(h.unmatched_cols, vec![2]);
        assert_eq!(h.total_cost, 2.0);
    }

    #[test]
    fn diagonal_dominant_identity() {
        let n = 10;
        let mut values = vec![10.0; n * n];
        for i in 0..n {
            values[i * n + i] = 0.1;
        }
        let h = hungarian(&full(n, n, values));
        assert_eq!(h.pairs, (0..n).map(|i| (i, i)).collect::<Vec<_>>());
        assert!((h.total_cost - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_costs_are_handled() {
        let costs = full(2, 2, vec![-5.0, -1.0, -1.0, -5.0]);
        let h = hungarian(&costs);
        assert_eq!(h.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(h.total_cost, -10.0);
    }

    #[test]
    fn greedy_tie_break_prefers_low_row_then_col() {
        let costs = full(2, 2, vec![1.0, 1.0, 1.0, 1.0]);
        let g = greedy_match(&costs);
        assert_eq!(g.pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for case in 0..300 {
            let rows = rng.gen_range(0..=5);
            let cols = rng.gen_range(0..=5);
            let values: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(0..20) as f64).collect();
            let mask: Vec<bool> = (0..rows * cols).map(|_| rng.gen_bool(0.7)).collect();
            let costs = CostMatrix::new(rows, cols, values, mask).unwrap();

            let (best_k, best_cost) = brute_force(&costs);
            let h = hungarian(&costs);
            check_consistent(&costs, &h);
            assert_eq!(h.pairs.len(), best_k, "cardinality off in case {case}");
            assert!(
                (h.total_cost - best_cost).abs() < 1e-9,
                "cost off in case {case}: {} vs {}",
                h.total_cost,
                best_cost
            );

            let g = greedy_match(&costs);
            check_consistent(&costs, &g);
            assert!(g.pairs.len() <= best_k);
            if g.pairs.len() == best_k {
                assert!(h.total_cost <= g.total_cost + 1e-9);
            }
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rows = 30;
        let cols = 40;
        let values: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(0.0..50.0)).collect();
        let mask: Vec<bool> = (0..rows * cols).map(|_| rng.gen_bool(0.5)).collect();
        let costs = CostMatrix::new(rows, cols, values, mask).unwrap();
        assert_eq!(hungarian(&costs), hungarian(&costs));
        assert_eq!(greedy_match(&costs), greedy_match(&costs));
    }

    #[test]
    fn build_cost_distances_and_gates() {
        let gate = GateConfig::default();
        let predicted = vec![(Vec2::new(0.0, 0.0), 0), (Vec2::new(10.0, 0.0), 0)];
        let detections = vec![
            Detection { center: Vec2::new(0.3, 0.4), ..Detection::default() },
            Detection { center: Vec2::new(10.0, 1.5), ..Detection::default() },
        ];
        let costs = build_cost(&predicted, &detections, &gate).unwrap();
        assert!((costs.value(0, 0) - 0.5).abs() < 1e-12);
        assert!(costs.is_admissible(0, 0));
        assert!(!costs.is_admissible(0, 1), "9.7 m exceeds the 2 m gate");
        assert!(costs.is_admissible(1, 1));
    }

    #[test]
    fn build_cost_per_class_radius_override() {
        let mut gate = GateConfig::default();
        gate.gate_radius_per_class_m.insert(1, 5.0);
        let predicted = vec![(Vec2::new(0.0, 0.0), 1)];
        let det = |class_id, x| Detection {
            class_id,
            center: Vec2::new(x, 0.0),
            ..Detection::default()
        };
        let costs = build_cost(&predicted, &[det(1, 4.0)], &gate).unwrap();
        assert!(costs.is_admissible(0, 0), "class 1 widens the gate to 5 m");
        let costs = build_cost(&[(Vec2::new(0.0, 0.0), 0)], &[det(0, 4.0)], &gate).unwrap();
        assert!(!costs.is_admissible(0, 0));
    }

    #[test]
    fn build_cost_class_gating() {
        let predicted = vec![(Vec2::new(0.0, 0.0), 2)];
        let det = Detection { class_id: 3, ..Detection::default() };
        let strict =
            build_cost(&predicted, std::slice::from_ref(&det), &GateConfig::default()).unwrap();
        assert!(!strict.is_admissible(0, 0), "class mismatch blocks even at zero distance");
        let loose_cfg = GateConfig { class_gated: false, ..GateConfig::default() };
        let loose = build_cost(&predicted, &[det], &loose_cfg).unwrap();
        assert!(loose.is_admissible(0, 0));
    }

    #[test]
    fn build_cost_rejects_non_finite_prediction() {
        let predicted = vec![(Vec2::new(f64::NAN, 0.0), 0)];
        let err = build_cost(&predicted, &[Detection::default()], &GateConfig::default());
        assert!(matches!(err, Err(Error::NonFiniteInput)));
    }

    #[test]
    fn cost_matrix_shape_errors() {
        assert!(matches!(
            CostMatrix::new(2, 2, vec![1.0; 3], vec![true; 4]),
            Err(Error::DimensionMismatch { expected: 4, got: 3 })
        ));
        assert!(matches!(
            CostMatrix::new(2, 2, vec![1.0; 4], vec![true; 5]),
            Err(Error::DimensionMismatch { expected: 4, got: 5 })
        ));
        assert!(matches!(
            CostMatrix::new(1, 1, vec![f64::NAN], vec![true]),
            Err(Error::NonFiniteInput)
        ));
        assert!(CostMatrix::new(1, 1, vec![f64::NAN], vec![false]).is_ok());
    }
}
