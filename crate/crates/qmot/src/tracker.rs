//! Tracking-by-detection with two-stage association and an optional
//! quality gate.
//!
//! Each step advances every live track along its velocity (or through the
//! Kalman filter), then associates in two stages: high-score detections
//! first, leftover tracks against low-score detections second. Both stages
//! solve a gated minimum-cost assignment on BEV distance. In `qoa` mode a
//! second gate inspects each stage-two match and voids it when the track's
//! velocity quality or the detection's localization quality is below its
//! floor; the detection is discarded and the track counts a miss. New
//! tracks are seeded from unmatched high-score detections only.
//!
//! Tracks confirm after `min_hits` updates, go to `Lost` on a miss, and are
//! dropped once their consecutive misses exceed `max_age`. Only confirmed
//! tracks are reported; reported rows carry an aggregate of the matched
//! detection scores while the live track keeps the latest score.

use crate::assignment::{build_cost, hungarian, GateConfig};
use crate::motion::{cv_predict, kf_init, kf_predict, kf_update, KalmanConfig, KalmanState};
use crate::types::{validate_detection, Detection, FrameDetections, Track, TrackStatus, Vec2};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Motion and association variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackerMode {
    /// Constant-velocity prediction, two-stage association.
    Cv,
    /// Kalman-filtered state, two-stage association.
    Kf,
    /// Constant-velocity prediction plus the quality gate on stage two.
    Qoa,
}

impl fmt::Display for TrackerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrackerMode::Cv => "cv",
            TrackerMode::Kf => "kf",
            TrackerMode::Qoa => "qoa",
        })
    }
}

impl FromStr for TrackerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cv" => Ok(TrackerMode::Cv),
            "kf" => Ok(TrackerMode::Kf),
            "qoa" => Ok(TrackerMode::Qoa),
            other => Err(Error::InvalidConfig(format!(
                "unknown tracker mode '{other}', expected cv, kf, or qoa"
            ))),
        }
    }
}

/// How a reported track's score summarizes its matched detections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreAggregation {
    Mean,
    Max,
    Last,
}

impl FromStr for ScoreAggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(ScoreAggregation::Mean),
            "max" => Ok(ScoreAggregation::Max),
            "last" => Ok(ScoreAggregation::Last),
            other => Err(Error::InvalidConfig(format!(
                "unknown score aggregation '{other}', expected mean, max, or last"
            ))),
        }
    }
}

/// Class ids as string keys, so the map survives formats (TOML, JSON)
/// that only allow string-keyed tables.
mod class_key_map {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(map: &BTreeMap<u32, f64>, s: S) -> Result<S::Ok, S::Error> {
        map.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u32, f64>, D::Error> {
        BTreeMap::<String, f64>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| k.parse::<u32>().map(|k| (k, v)).map_err(D::Error::custom))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerConfig {
    pub mode: TrackerMode,
    /// Score split between the two association stages.
    pub score_threshold: f64,
    /// Velocity-quality floor a track needs to accept a stage-two match.
    pub vel_quality_min: f64,
    /// Localization-quality floor a stage-two detection must meet.
    pub loc_quality_min: f64,
    /// Updates required before a track is reported.
    pub min_hits: u32,
    /// Consecutive misses tolerated before a track is dropped.
    pub max_age: u32,
    pub gate_radius_m: f64,
    #[serde(with = "class_key_map")]
    pub gate_radius_per_class_m: BTreeMap<u32, f64>,
    pub class_gated: bool,
    pub score_aggregation: ScoreAggregation,
    pub kalman: KalmanConfig,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            mode: TrackerMode::Qoa,
            score_threshold: 0.35,
            vel_quality_min: 0.3,
            loc_quality_min: 0.3,
            min_hits: 1,
            max_age: 2,
            gate_radius_m: 2.0,
            gate_radius_per_class_m: BTreeMap::new(),
            class_gated: true,
            score_aggregation: ScoreAggregation::Mean,
            kalman: KalmanConfig::default(),
        }
    }
}

impl TrackerConfig {
    pub fn gate_config(&self) -> GateConfig {
        GateConfig {
            gate_radius_m: self.gate_radius_m,
            gate_radius_per_class_m: self.gate_radius_per_class_m.clone(),
            class_gated: self.class_gated,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.score_threshold) {
            return Err(Error::InvalidConfig("score_threshold must lie in [0, 1]".into()));
        }
        if !unit(self.vel_quality_min) || !unit(self.loc_quality_min) {
            return Err(Error::InvalidConfig("quality floors must lie in [0, 1]".into()));
        }
        if self.min_hits == 0 {
            return Err(Error::InvalidConfig("min_hits must be at least 1".into()));
        }
        self.gate_config().validate()?;
        self.kalman.validate()
    }
}

/// Splits detections at the score threshold: strictly above goes to the
/// first stage, the rest to the second. Order is preserved.
pub fn split_by_score(detections: &[Detection], threshold: f64) -> (Vec<Detection>, Vec<Detection>) {
    detections.iter().cloned().partition(|d| d.score > threshold)
}

#[derive(Debug, Clone, Copy)]
struct ScoreStats {
    sum: f64,
    count: u32,
    max: f64,
}

impl ScoreStats {
    fn seed(score: f64) -> Self {
        ScoreStats { sum: score, count: 1, max: score }
    }

    fn absorb(&mut self, score: f64) {
        self.sum += score;
        self.count += 1;
        self.max = self.max.max(score);
    }
}

/// Mutable tracker state carried between frames.
#[derive(Debug, Clone, Default)]
pub struct TrackerState {
    pub tracks: Vec<Track>,
    next_track_id: u64,
    last_timestamp: Option<f64>,
    kf_states: BTreeMap<u64, KalmanState>,
    score_stats: BTreeMap<u64, ScoreStats>,
}

impl TrackerState {
    pub fn new() -> Self {
        TrackerState::default()
    }

    /// Kalman posterior for a live track, populated in `kf` mode only.
    pub fn kalman_state(&self, track_id: u64) -> Option<&KalmanState> {
        self.kf_states.get(&track_id)
    }
}

/// Per-frame reported tracks.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTracks {
    pub frame_index: u64,
    pub timestamp_s: f64,
    pub tracks: Vec<Track>,
}

/// Reported frames as evaluation hypotheses, aligned with the input.
pub fn hyp_boxes(frames: &[FrameTracks]) -> Vec<Vec<crate::metrics::HypBox>> {
    frames
        .iter()
        .map(|f| {
            f.tracks
                .iter()
                .map(|t| crate::metrics::HypBox {
                    track_id: t.track_id,
                    class_id: t.class_id,
                    center: t.center,
                    score: t.score,
                })
                .collect()
        })
        .collect()
}

/// Advances the tracker by one frame and returns the confirmed tracks.
pub fn step(state: &mut TrackerState, frame: &FrameDetections, cfg: &TrackerConfig) -> Result<Vec<Track>> {
    cfg.validate()?;
    for d in &frame.detections {
        validate_detection(d).map_err(Error::InvalidDetection)?;
    }

    let dt = match state.last_timestamp {
        Some(prev) => {
            if frame.timestamp_s <= prev {
                return Err(Error::NonMonotonicTimestamps { prev, next: frame.timestamp_s });
            }
            frame.timestamp_s - prev
        }
        None => 0.0,
    };
    state.last_timestamp = Some(frame.timestamp_s);

    for t in &mut state.tracks {
        if cfg.mode == TrackerMode::Kf {
            let ks = state
                .kf_states
                .get_mut(&t.track_id)
                .expect("kalman state exists for every live track");
            *ks = kf_predict(ks, dt, &cfg.kalman)?;
            t.center = ks.position();
            t.velocity = ks.velocity();
        } else {
            t.center = cv_predict(t.center, t.velocity, dt)?;
        }
    }

    let (high, low) = split_by_score(&frame.detections, cfg.score_threshold);
    let gate = cfg.gate_config();
    let predicted: Vec<(Vec2, u32)> = state.tracks.iter().map(|t| (t.center, t.class_id)).collect();

    let stage1 = hungarian(&build_cost(&predicted, &high, &gate)?);
    let mut matched: Vec<(usize, &Detection)> =
        stage1.pairs.iter().map(|&(r, c)| (r, &high[c])).collect();
    let unmatched_after_stage1 = stage1.unmatched_rows;

    let predicted2: Vec<(Vec2, u32)> = unmatched_after_stage1
        .iter()
        .map(|&i| (state.tracks[i].center, state.tracks[i].class_id))
        .collect();
    let stage2 = hungarian(&build_cost(&predicted2, &low, &gate)?);
    let mut missed: Vec<usize> = stage2
        .unmatched_rows
        .iter()
        .map(|&r| unmatched_after_stage1[r])
        .collect();
    for &(r, c) in &stage2.pairs {
        let ti = unmatched_after_stage1[r];
        let det = &low[c];
        let voided = cfg.mode == TrackerMode::Qoa
            && (state.tracks[ti].vel_quality < cfg.vel_quality_min
                || det.loc_quality < cfg.loc_quality_min);
        if voided {
            missed.push(ti);
        } else {
            matched.push((ti, det));
        }
    }
    missed.sort_unstable();

    for (ti, det) in matched {
        let t = &mut state.tracks[ti];
        if cfg.mode == TrackerMode::Kf {
            let ks = state
                .kf_states
                .get_mut(&t.track_id)
                .expect("kalman state exists for every live track");
            *ks = kf_update(ks, det.center, &cfg.kalman)?;
            t.center = ks.position();
            t.velocity = ks.velocity();
        } else {
            t.center = det.center;
            t.velocity = det.velocity;
        }
        t.score = det.score;
        t.loc_quality = det.loc_quality;
        t.vel_quality = det.vel_quality;
        t.hits += 1;
        t.misses_in_a_row = 0;
        t.status = if t.hits >= cfg.min_hits {
            TrackStatus::Confirmed
        } else {
            TrackStatus::Tentative
        };
        t.last_update_frame = frame.frame_index;
        state
            .score_stats
            .get_mut(&t.track_id)
            .expect("score stats exist for every live track")
            .absorb(det.score);
    }

    for ti in missed {
        let t = &mut state.tracks[ti];
        t.misses_in_a_row += 1;
        t.status = if t.misses_in_a_row > cfg.max_age {
            TrackStatus::Removed
        } else {
            TrackStatus::Lost
        };
    }

    for &c in &stage1.unmatched_cols {
        let det = &high[c];
        let track_id = state.next_track_id;
        state.next_track_id += 1;
        if cfg.mode == TrackerMode::Kf {
            state.kf_states.insert(track_id, kf_init(det, &cfg.kalman));
        }
        state.score_stats.insert(track_id, ScoreStats::seed(det.score));
        state.tracks.push(Track {
            track_id,
            class_id: det.class_id,
            center: det.center,
            velocity: det.velocity,
            score: det.score,
            vel_quality: det.vel_quality,
            loc_quality: det.loc_quality,
            hits: 1,
            misses_in_a_row: 0,
            status: if cfg.min_hits <= 1 {
                TrackStatus::Confirmed
            } else {
                TrackStatus::Tentative
            },
            last_update_frame: frame.frame_index,
        });
    }

    for t in &state.tracks {
        if t.status == TrackStatus::Removed {
            state.kf_states.remove(&t.track_id);
            state.score_stats.remove(&t.track_id);
        }
    }
    state.tracks.retain(|t| t.status != TrackStatus::Removed);

    let mut reported = Vec::new();
    for t in &state.tracks {
        if t.status != TrackStatus::Confirmed {
            continue;
        }
        let stats = state.score_stats[&t.track_id];
        let mut row = t.clone();
        row.score = match cfg.score_aggregation {
            ScoreAggregation::Mean => stats.sum / f64::from(stats.count),
            ScoreAggregation::Max => stats.max,
            ScoreAggregation::Last => t.score,
        };
        reported.push(row);
    }
    Ok(reported)
}

/// Runs the tracker over an ordered frame sequence.
pub fn track_sequence(frames: &[FrameDetections], cfg: &TrackerConfig) -> Result<Vec<FrameTracks>> {
    cfg.validate()?;
    let mut state = TrackerState::new();
    let mut out = Vec::with_capacity(frames.len());
    for frame in frames {
        let tracks = step(&mut state, frame, cfg)?;
        out.push(FrameTracks {
            frame_index: frame.frame_index,
            timestamp_s: frame.timestamp_s,
            tracks,
        });
    }
    Ok(out)
}
