//! Tracking evaluation (CLEAR events, MOTA/MOTP, AMOTA/AMOTP) and the
//! quality-misalignment analysis.
//!
//! Frame matching follows the CLEAR convention: matched pairs from the
//! previous frame persist while they stay within the match radius, the
//! remainder is matched by the exact assignment solver gated at the same
//! radius, and an identity switch is counted whenever a ground-truth
//! object is matched to a different track id than it last carried, gaps
//! included. AMOTA reruns the evaluation at score thresholds drawn from
//! the hypothesis scores, maps each target recall to the run with the
//! smallest achieved recall at or above it (ties prefer the higher
//! threshold), skips unreachable targets, and averages
//! `MOTAR = max(0, 1 - (IDS + FP) / TP)` over the kept rows.

use crate::assignment::{hungarian, CostMatrix};
use crate::types::Vec2;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One ground-truth box in one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtBox {
    pub object_id: u64,
    pub class_id: u32,
    pub center: Vec2,
}

/// One reported track row in one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypBox {
    pub track_id: u64,
    pub class_id: u32,
    pub center: Vec2,
    pub score: f64,
}

/// Outcome of matching a single frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatchResult {
    /// `(object_id, track_id, distance)` per matched pair.
    pub matches: Vec<(u64, u64, f64)>,
    pub unmatched_gt: Vec<u64>,
    pub unmatched_hyp: Vec<u64>,
    pub switches: u64,
}

/// Matches one frame against ground truth. `carried` maps each object to
/// the track id it last matched; it persists across calls (including over
/// frames where the object vanished) so switches after gaps are counted.
pub fn match_frame(
    gt: &[GtBox],
    hyp: &[HypBox],
    match_radius_m: f64,
    carried: &mut BTreeMap<u64, u64>,
) -> FrameMatchResult {
    let mut gt_used = vec![false; gt.len()];
    let mut hyp_used = vec![false; hyp.len()];
    let mut matches = Vec::new();

    let mut gt_index: BTreeMap<u64, usize> = BTreeMap::new();
    for (i, g) in gt.iter().enumerate() {
        gt_index.entry(g.object_id).or_insert(i);
    }
    let mut hyp_index: BTreeMap<u64, usize> = BTreeMap::new();
    for (i, h) in hyp.iter().enumerate() {
        hyp_index.entry(h.track_id).or_insert(i);
    }

    for (&gid, &tid) in carried.iter() {
        if let (Some(&gi), Some(&hi)) = (gt_index.get(&gid), hyp_index.get(&tid)) {
            if !gt_used[gi] && !hyp_used[hi] {
                let d = gt[gi].center.distance(hyp[hi].center);
                if d <= match_radius_m {
                    gt_used[gi] = true;
                    hyp_used[hi] = true;
                    matches.push((gid, tid, d));
                }
            }
        }
    }

    let rg: Vec<usize> = (0..gt.len()).filter(|&i| !gt_used[i]).collect();
    let rh: Vec<usize> = (0..hyp.len()).filter(|&i| !hyp_used[i]).collect();
    let mut values = Vec::with_capacity(rg.len() * rh.len());
    let mut mask = Vec::with_capacity(rg.len() * rh.len());
    for &gi in &rg {
        for &hi in &rh {
            let d = gt[gi].center.distance(hyp[hi].center);
            values.push(d);
            mask.push(d <= match_radius_m);
        }
    }
    let costs = CostMatrix::new(rg.len(), rh.len(), values, mask)
        .expect("finite centers yield finite distances");
    let mut switches = 0;
    for &(r, c) in &hungarian(&costs).pairs {
        let (gi, hi) = (rg[r], rh[c]);
        let gid = gt[gi].object_id;
        let tid = hyp[hi].track_id;
        if carried.get(&gid).is_some_and(|old| *old != tid) {
            switches += 1;
        }
        gt_used[gi] = true;
        hyp_used[hi] = true;
        matches.push((gid, tid, gt[gi].center.distance(hyp[hi].center)));
    }

    for &(gid, tid, _) in &matches {
        carried.insert(gid, tid);
    }
    let unmatched_gt = gt
        .iter()
        .enumerate()
        .filter(|(i, _)| !gt_used[*i])
        .map(|(_, g)| g.object_id)
        .collect();
    let unmatched_hyp = hyp
        .iter()
        .enumerate()
        .filter(|(i, _)| !hyp_used[*i])
        .map(|(_, h)| h.track_id)
        .collect();
    FrameMatchResult { matches, unmatched_gt, unmatched_hyp, switches }
}

/// Aggregated CLEAR numbers for one evaluation pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClearMotSummary {
    pub mota: f64,
    pub motp_m: f64,
    pub ids: u64,
    pub frag: u64,
    pub mt: u64,
    pub ml: u64,
    pub recall: f64,
    pub precision: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_count: u64,
    pub gt_total: u64,
}

/// Aggregates per-frame match results into CLEAR metrics.
pub fn clear_mot(frames: &[FrameMatchResult]) -> Result<ClearMotSummary> {
    let mut tp = 0u64;
    let mut fn_count = 0u64;
    let mut fp = 0u64;
    let mut ids = 0u64;
    let mut dist_sum = 0.0;
    let mut life: BTreeMap<u64, Vec<bool>> = BTreeMap::new();

    for f in frames {
        tp += f.matches.len() as u64;
        fn_count += f.unmatched_gt.len() as u64;
        fp += f.unmatched_hyp.len() as u64;
        ids += f.switches;
        for &(gid, _, d) in &f.matches {
            dist_sum += d;
            life.entry(gid).or_default().push(true);
        }
        for &gid in &f.unmatched_gt {
            life.entry(gid).or_default().push(false);
        }
    }

    let gt_total = tp + fn_count;
    if gt_total == 0 {
        return Err(Error::UndefinedMetric("undefined MOTA"));
    }

    let mut frag = 0u64;
    let mut mt = 0u64;
    let mut ml = 0u64;
    for flags in life.values() {
        let mut seen = false;
        let mut in_gap = false;
        for &f in flags {
            if f {
                if seen && in_gap {
                    frag += 1;
                }
                seen = true;
                in_gap = false;
            } else if seen {
                in_gap = true;
            }
        }
        let ratio = flags.iter().filter(|f| **f).count() as f64 / flags.len() as f64;
        if ratio >= 0.8 {
            mt += 1;
        }
        if ratio <= 0.2 {
            ml += 1;
        }
    }

    Ok(ClearMotSummary {
        mota: 1.0 - (fn_count + fp + ids) as f64 / gt_total as f64,
        motp_m: if tp > 0 { dist_sum / tp as f64 } else { 0.0 },
        ids,
        frag,
        mt,
        ml,
        recall: tp as f64 / gt_total as f64,
        precision: if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 },
        tp,
        fp,
        fn_count,
        gt_total,
    })
}

/// Matches every frame and aggregates in one call.
pub fn clear_mot_sequence(
    gt_frames: &[Vec<GtBox>],
    hyp_frames: &[Vec<HypBox>],
    match_radius_m: f64,
) -> Result<ClearMotSummary> {
    if gt_frames.len() != hyp_frames.len() {
        return Err(Error::LengthMismatch { left: gt_frames.len(), right: hyp_frames.len() });
    }
    let mut carried = BTreeMap::new();
    let results: Vec<FrameMatchResult> = gt_frames
        .iter()
        .zip(hyp_frames)
        .map(|(g, h)| match_frame(g, h, match_radius_m, &mut carried))
        .collect();
    clear_mot(&results)
}

/// One kept row of the recall sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecallRow {
    pub target_recall: f64,
    pub achieved_recall: f64,
    pub threshold: f64,
    pub motar: f64,
    pub motp_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmotaResult {
    pub amota: f64,
    pub amotp_m: f64,
    pub rows: Vec<RecallRow>,
}

const MAX_THRESHOLD_CANDIDATES: usize = 128;

/// Recall-averaged tracking accuracy over `n_rows` targets `k / n_rows`.
pub fn amota(
    gt_frames: &[Vec<GtBox>],
    hyp_frames: &[Vec<HypBox>],
    match_radius_m: f64,
    n_rows: usize,
) -> Result<AmotaResult> {
    if n_rows == 0 {
        return Err(Error::InvalidConfig("recall sweep needs at least one row".into()));
    }
    if gt_frames.len() != hyp_frames.len() {
        return Err(Error::LengthMismatch { left: gt_frames.len(), right: hyp_frames.len() });
    }

    let mut scores: Vec<f64> = hyp_frames
        .iter()
        .flatten()
        .map(|h| h.score)
        .collect();
    scores.sort_unstable_by(|a, b| b.total_cmp(a));
    scores.dedup();
    if scores.len() > MAX_THRESHOLD_CANDIDATES {
        let n = scores.len();
        let mut picked = Vec::with_capacity(MAX_THRESHOLD_CANDIDATES);
        for i in 0..MAX_THRESHOLD_CANDIDATES {
            let idx = (i as f64 * (n - 1) as f64 / (MAX_THRESHOLD_CANDIDATES - 1) as f64)
                .round() as usize;
            picked.push(scores[idx]);
        }
        picked.dedup();
        scores = picked;
    }

    struct Point {
        threshold: f64,
        recall: f64,
        motar: f64,
        motp_m: f64,
    }
    let mut points = Vec::new();
    for &threshold in &scores {
        let filtered: Vec<Vec<HypBox>> = hyp_frames
            .iter()
            .map(|f| f.iter().copied().filter(|h| h.score >= threshold).collect())
            .collect();
        let summary = clear_mot_sequence(gt_frames, &filtered, match_radius_m)?;
        if summary.tp == 0 {
            continue;
        }
        let motar = (1.0 - (summary.ids + summary.fp) as f64 / summary.tp as f64).max(0.0);
        points.push(Point {
            threshold,
            recall: summary.recall,
            motar,
            motp_m: summary.motp_m,
        });
    }
    points.sort_by(|a, b| a.recall.total_cmp(&b.recall).then(b.threshold.total_cmp(&a.threshold)));

    let mut rows = Vec::new();
    for k in 1..=n_rows {
        let target = k as f64 / n_rows as f64;
        if let Some(p) = points.iter().find(|p| p.recall >= target) {
            rows.push(RecallRow {
                target_recall: target,
                achieved_recall: p.recall,
                threshold: p.threshold,
                motar: p.motar,
                motp_m: p.motp_m,
            });
        }
    }
    if rows.is_empty() {
        return Err(Error::NoPositiveRecall);
    }
    let n = rows.len() as f64;
    Ok(AmotaResult {
        amota: rows.iter().map(|r| r.motar).sum::<f64>() / n,
        amotp_m: rows.iter().map(|r| r.motp_m).sum::<f64>() / n,
        rows,
    })
}

/// Full evaluation report for one tracker run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mota: f64,
    pub motp_m: f64,
    pub ids: u64,
    pub frag: u64,
    pub mt: u64,
    pub ml: u64,
    pub recall: f64,
    pub precision: f64,
    pub amota: f64,
    pub amotp_m: f64,
    pub per_recall_rows: Vec<RecallRow>,
}

impl MetricsReport {
    pub fn assemble(clear: &ClearMotSummary, sweep: &AmotaResult) -> MetricsReport {
        MetricsReport {
            mota: clear.mota,
            motp_m: clear.motp_m,
            ids: clear.ids,
            frag: clear.frag,
            mt: clear.mt,
            ml: clear.ml,
            recall: clear.recall,
            precision: clear.precision,
            amota: sweep.amota,
            amotp_m: sweep.amotp_m,
            per_recall_rows: sweep.rows.clone(),
        }
    }
}

/// Sample Pearson correlation; 0 when either series has no variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::EmptyInput("correlation needs at least two samples"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks on ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::EmptyInput("correlation needs at least two samples"));
    }
    pearson(&ranks(xs), &ranks(ys))
}

/// Equal-width histogram; the last bin absorbs the maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

fn histogram(values: &[f64], n_bins: usize) -> Histogram {
    let hi = values.iter().copied().fold(0.0_f64, f64::max).max(f64::MIN_POSITIVE);
    let width = hi / n_bins as f64;
    let edges = (0..=n_bins).map(|i| i as f64 * width).collect();
    let mut counts = vec![0u64; n_bins];
    for &v in values {
        let idx = ((v / width) as usize).min(n_bins - 1);
        counts[idx] += 1;
    }
    Histogram { edges, counts }
}

/// Distributional view of location/velocity errors and their relation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityAnalysis {
    pub loc_error_histogram: Histogram,
    pub vel_error_histogram: Histogram,
    pub pearson_r: f64,
    pub spearman_rho: f64,
    /// True when either error series is constant, making the correlations
    /// undefined; both are then reported as 0.
    pub degenerate_correlation: bool,
    pub scatter_sample: Vec<(f64, f64)>,
}

const ANALYSIS_BINS: usize = 20;
const SCATTER_CAP: usize = 1024;
const SCATTER_SEED: u64 = 0xA11A5;

/// Analyzes `(location error, velocity error)` magnitude pairs.
pub fn analyze_quality(pairs: &[(f64, f64)]) -> Result<QualityAnalysis> {
    if pairs.len() < 2 {
        return Err(Error::EmptyInput("quality analysis needs at least two samples"));
    }
    if pairs.iter().any(|(l, v)| !l.is_finite() || !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let loc: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let vel: Vec<f64> = pairs.iter().map(|p| p.1).collect();

    let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    let degenerate = constant(&loc) || constant(&vel);
    let (pearson_r, spearman_rho) = if degenerate {
        (0.0, 0.0)
    } else {
        (pearson(&loc, &vel)?, spearman(&loc, &vel)?)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(SCATTER_SEED);
    let mut scatter: Vec<(f64, f64)> = Vec::with_capacity(SCATTER_CAP.min(pairs.len()));
    for (i, &p) in pairs.iter().enumerate() {
        if i < SCATTER_CAP {
            scatter.push(p);
        } else {
            let j = rng.gen_range(0..=i);
            if j < SCATTER_CAP {
                scatter[j] = p;
            }
        }
    }

    Ok(QualityAnalysis {
        loc_error_histogram: histogram(&loc, ANALYSIS_BINS),
        vel_error_histogram: histogram(&vel, ANALYSIS_BINS),
        pearson_r,
        spearman_rho,
        degenerate_correlation: degenerate,
        scatter_sample: scatter,
    })
}
