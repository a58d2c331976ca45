//! File formats: JSONL data streams, TOML run configs, and run manifests.
//!
//! Data streams carry one JSON object per line with floats printed to nine
//! significant digits; a value that has been through one parse/serialize
//! cycle reproduces the same bytes on every further cycle. Readers
//! tolerate unknown fields, report malformed lines with their line number,
//! accept rows in any frame order (rows are regrouped by frame and frames
//! ordered by timestamp), and reject timestamps that do not strictly
//! increase with the frame index. Config files are TOML with unknown keys
//! rejected, so a typo fails loudly instead of silently falling back to a
//! default. Manifests echo the fully resolved config and contain nothing
//! volatile, so rerunning from a manifest reproduces a run byte for byte.

use crate::quality::{NgqParams, QualityEstimator};
use crate::sim::{DetectionOrigin, DetectionProvenance, GtFrame, GtObjectState, ScenarioConfig};
use crate::tracker::{FrameTracks, TrackerConfig};
use crate::types::{validate_detection, BoxExtent, Detection, FrameDetections, Vec2};
use crate::fusion::FusionConfig;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Nine significant digits: enough that one decimal round trip is a fixed
/// point, short enough to keep the streams diffable.
pub(crate) fn format_sig(v: f64) -> String {
    format!("{v:.8e}")
}

use format_sig as jf;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| with_path(path, e))
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| with_path(path, e))
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| with_path(path, e))
}

fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Groups `(frame, t, row)` triples into frames ordered by frame index and
/// checks that timestamps strictly increase along that order.
fn group_frames<T>(rows: Vec<(u64, f64, usize, T)>) -> Result<Vec<(u64, f64, Vec<T>)>> {
    let mut by_frame: BTreeMap<u64, (f64, Vec<T>)> = BTreeMap::new();
    for (frame, t, line, row) in rows {
        match by_frame.get_mut(&frame) {
            None => {
                by_frame.insert(frame, (t, vec![row]));
            }
            Some((t0, list)) => {
                if *t0 != t {
                    return Err(parse_err(line, format!("conflicting timestamp for frame {frame}")));
                }
                list.push(row);
            }
        }
    }
    let frames: Vec<(u64, f64, Vec<T>)> =
        by_frame.into_iter().map(|(f, (t, rows))| (f, t, rows)).collect();
    for pair in frames.windows(2) {
        if pair[1].1 <= pair[0].1 {
            return Err(Error::NonMonotonicTimestamps { prev: pair[0].1, next: pair[1].1 });
        }
    }
    Ok(frames)
}

fn read_jsonl_rows<R: Read, T: for<'de> Deserialize<'de>>(
    reader: R,
) -> Result<Vec<(usize, T)>> {
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let row: T =
            serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
        rows.push((lineno, row));
    }
    Ok(rows)
}

pub fn write_detections<W: Write>(w: &mut W, frames: &[FrameDetections]) -> Result<()> {
    for f in frames {
        for d in &f.detections {
            writeln!(
                w,
                "{{\"frame\":{},\"t\":{},\"cls\":{},\"cx\":{},\"cy\":{},\"z\":{},\"l\":{},\"w\":{},\"h\":{},\"yaw\":{},\"vx\":{},\"vy\":{},\"score\":{},\"q_loc\":{},\"q_vel\":{}}}",
                f.frame_index,
                jf(f.timestamp_s),
                d.class_id,
                jf(d.center.x),
                jf(d.center.y),
                jf(d.height_z),
                jf(d.extent.length),
                jf(d.extent.width),
                jf(d.extent.height),
                jf(d.yaw),
                jf(d.velocity.x),
                jf(d.velocity.y),
                jf(d.score),
                jf(d.loc_quality),
                jf(d.vel_quality),
            )?;
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct DetRow {
    frame: u64,
    t: f64,
    cls: u32,
    cx: f64,
    cy: f64,
    z: f64,
    l: f64,
    w: f64,
    h: f64,
    yaw: f64,
    vx: f64,
    vy: f64,
    score: f64,
    q_loc: Option<f64>,
    q_vel: Option<f64>,
}

/// Parsed detection stream plus how many rows were missing quality fields
/// (those default to 1, which a caller should surface as a warning).
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionsRead {
    pub frames: Vec<FrameDetections>,
    pub defaulted_quality_rows: usize,
}

pub fn read_detections<R: Read>(reader: R) -> Result<DetectionsRead> {
    let mut defaulted = 0;
    let mut rows = Vec::new();
    for (lineno, r) in read_jsonl_rows::<_, DetRow>(reader)? {
        if r.q_loc.is_none() || r.q_vel.is_none() {
            defaulted += 1;
        }
        let det = Detection {
            frame_index: r.frame,
            class_id: r.cls,
            center: Vec2::new(r.cx, r.cy),
            height_z: r.z,
            extent: BoxExtent { length: r.l, width: r.w, height: r.h },
            yaw: r.yaw,
            velocity: Vec2::new(r.vx, r.vy),
            score: r.score,
            loc_quality: r.q_loc.unwrap_or(1.0),
            vel_quality: r.q_vel.unwrap_or(1.0),
        };
        if !r.t.is_finite() {
            return Err(parse_err(lineno, "non-finite timestamp"));
        }
        validate_detection(&det).map_err(|msg| parse_err(lineno, msg))?;
        rows.push((r.frame, r.t, lineno, det));
    }
    let frames = group_frames(rows)?
        .into_iter()
        .map(|(frame_index, timestamp_s, detections)| FrameDetections {
            frame_index,
            timestamp_s,
            detections,
        })
        .collect();
    Ok(DetectionsRead { frames, defaulted_quality_rows: defaulted })
}

pub fn write_gt<W: Write>(w: &mut W, frames: &[GtFrame]) -> Result<()> {
    for f in frames {
        for o in &f.objects {
            writeln!(
                w,
                "{{\"frame\":{},\"t\":{},\"obj\":{},\"cls\":{},\"cx\":{},\"cy\":{},\"vx\":{},\"vy\":{}}}",
                f.frame_index,
                jf(f.timestamp_s),
                o.object_id,
                o.class_id,
                jf(o.center.x),
                jf(o.center.y),
                jf(o.velocity.x),
                jf(o.velocity.y),
            )?;
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct GtRow {
    frame: u64,
    t: f64,
    obj: u64,
    cls: u32,
    cx: f64,
    cy: f64,
    vx: f64,
    vy: f64,
}

pub fn read_gt<R: Read>(reader: R) -> Result<Vec<GtFrame>> {
    let mut rows = Vec::new();
    for (lineno, r) in read_jsonl_rows::<_, GtRow>(reader)? {
        let state = GtObjectState {
            object_id: r.obj,
            class_id: r.cls,
            center: Vec2::new(r.cx, r.cy),
            velocity: Vec2::new(r.vx, r.vy),
        };
        if !r.t.is_finite() || !state.center.is_finite() || !state.velocity.is_finite() {
            return Err(parse_err(lineno, "non-finite value"));
        }
        rows.push((r.frame, r.t, lineno, state));
    }
    Ok(group_frames(rows)?
        .into_iter()
        .map(|(frame_index, timestamp_s, objects)| GtFrame { frame_index, timestamp_s, objects })
        .collect())
}

pub fn write_tracks<W: Write>(w: &mut W, frames: &[FrameTracks]) -> Result<()> {
    for f in frames {
        for t in &f.tracks {
            writeln!(
                w,
                "{{\"frame\":{},\"t\":{},\"track\":{},\"cls\":{},\"cx\":{},\"cy\":{},\"vx\":{},\"vy\":{},\"score\":{},\"q_loc\":{},\"q_vel\":{}}}",
                f.frame_index,
                jf(f.timestamp_s),
                t.track_id,
                t.class_id,
                jf(t.center.x),
                jf(t.center.y),
                jf(t.velocity.x),
                jf(t.velocity.y),
                jf(t.score),
                jf(t.loc_quality),
                jf(t.vel_quality),
            )?;
        }
    }
    Ok(())
}

/// One reported track row as read back from a track stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackRow {
    pub track_id: u64,
    pub class_id: u32,
    pub center: Vec2,
    pub velocity: Vec2,
    pub score: f64,
    pub loc_quality: f64,
    pub vel_quality: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrackRows {
    pub frame_index: u64,
    pub timestamp_s: f64,
    pub rows: Vec<TrackRow>,
}

#[derive(Deserialize)]
struct TrackFileRow {
    frame: u64,
    t: f64,
    track: u64,
    cls: u32,
    cx: f64,
    cy: f64,
    vx: f64,
    vy: f64,
    score: f64,
    q_loc: f64,
    q_vel: f64,
}

pub fn read_tracks<R: Read>(reader: R) -> Result<Vec<FrameTrackRows>> {
    let mut rows = Vec::new();
    for (lineno, r) in read_jsonl_rows::<_, TrackFileRow>(reader)? {
        let row = TrackRow {
            track_id: r.track,
            class_id: r.cls,
            center: Vec2::new(r.cx, r.cy),
            velocity: Vec2::new(r.vx, r.vy),
            score: r.score,
            loc_quality: r.q_loc,
            vel_quality: r.q_vel,
        };
        if !r.t.is_finite() || !row.center.is_finite() || !row.velocity.is_finite() {
            return Err(parse_err(lineno, "non-finite value"));
        }
        rows.push((r.frame, r.t, lineno, row));
    }
    Ok(group_frames(rows)?
        .into_iter()
        .map(|(frame_index, timestamp_s, rows)| FrameTrackRows { frame_index, timestamp_s, rows })
        .collect())
}

pub fn write_provenance<W: Write>(
    w: &mut W,
    provenance: &[Vec<DetectionProvenance>],
) -> Result<()> {
    for (frame, list) in provenance.iter().enumerate() {
        for (det, p) in list.iter().enumerate() {
            let mut origin = String::new();
            match p.origin {
                DetectionOrigin::Object(id) => {
                    write!(origin, "\"origin\":\"object\",\"obj\":{id}").unwrap();
                }
                DetectionOrigin::FalsePositive => origin.push_str("\"origin\":\"fp\""),
            }
            writeln!(
                w,
                "{{\"frame\":{frame},\"det\":{det},{origin},\"ex\":{},\"ey\":{},\"evx\":{},\"evy\":{}}}",
                jf(p.loc_error.x),
                jf(p.loc_error.y),
                jf(p.vel_error.x),
                jf(p.vel_error.y),
            )?;
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct ProvRow {
    frame: u64,
    det: usize,
    origin: String,
    obj: Option<u64>,
    ex: f64,
    ey: f64,
    evx: f64,
    evy: f64,
}

/// Reads provenance rows grouped by frame index; within a frame, entries
/// are ordered by their detection index.
pub fn read_provenance<R: Read>(reader: R) -> Result<Vec<(u64, Vec<DetectionProvenance>)>> {
    let mut by_frame: BTreeMap<u64, Vec<(usize, DetectionProvenance)>> = BTreeMap::new();
    for (lineno, r) in read_jsonl_rows::<_, ProvRow>(reader)? {
        let origin = match (r.origin.as_str(), r.obj) {
            ("object", Some(id)) => DetectionOrigin::Object(id),
            ("object", None) => return Err(parse_err(lineno, "object row without obj")),
            ("fp", _) => DetectionOrigin::FalsePositive,
            (other, _) => return Err(parse_err(lineno, format!("unknown origin {other:?}"))),
        };
        let p = DetectionProvenance {
            origin,
            loc_error: Vec2::new(r.ex, r.ey),
            vel_error: Vec2::new(r.evx, r.evy),
        };
        by_frame.entry(r.frame).or_default().push((r.det, p));
    }
    Ok(by_frame
        .into_iter()
        .map(|(frame, mut list)| {
            list.sort_by_key(|(det, _)| *det);
            (frame, list.into_iter().map(|(_, p)| p).collect())
        })
        .collect())
}

/// Serialized quality estimator with the feature layout it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorFile {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_names: Vec<String>,
}

impl EstimatorFile {
    pub fn estimator(&self) -> QualityEstimator {
        QualityEstimator { weights: self.weights.clone(), bias: self.bias }
    }
}

pub fn write_estimator(path: &Path, est: &QualityEstimator, feature_names: &[String]) -> Result<()> {
    let file = EstimatorFile {
        weights: est.weights.clone(),
        bias: est.bias,
        feature_names: feature_names.to_vec(),
    };
    let mut body = serde_json::to_string_pretty(&file).expect("estimator serializes");
    body.push('\n');
    fs::write(path, body)?;
    Ok(())
}

pub fn read_estimator(path: &Path) -> Result<EstimatorFile> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| parse_err(e.line(), e.to_string()))
}

/// Evaluation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    pub match_radius_m: f64,
    /// Number of evenly spaced recall targets in the sweep.
    pub recall_thresholds: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig { match_radius_m: 2.0, recall_thresholds: 40 }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.match_radius_m > 0.0 && self.match_radius_m.is_finite()) {
            return Err(Error::InvalidConfig("match_radius_m must be positive".into()));
        }
        if self.recall_thresholds == 0 {
            return Err(Error::InvalidConfig("recall_thresholds must be at least 1".into()));
        }
        Ok(())
    }
}

/// Every knob of a run in one place. All sections are optional in the
/// file and fall back to defaults; unknown keys anywhere are an error.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub tracker: TrackerConfig,
    pub fusion: FusionConfig,
    pub ngq: NgqParams,
    pub metrics: MetricsConfig,
    pub sim: ScenarioConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.tracker.validate()?;
        self.fusion.validate()?;
        self.ngq.validate()?;
        self.metrics.validate()?;
        self.sim.validate()
    }
}

pub fn read_run_config(path: &Path) -> Result<RunConfig> {
    let text = read_to_string(path)?;
    let cfg: RunConfig =
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// What a run actually did: the subcommand line it resolved to and the
/// fully resolved config. Contains nothing volatile, so re-running the
/// same tool version from a manifest reproduces the outputs byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub command: String,
    pub config: RunConfig,
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let body = toml::to_string_pretty(manifest)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    fs::write(path, body)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))
}

pub fn write_detections_file(path: &Path, frames: &[FrameDetections]) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    write_detections(&mut w, frames)?;
    w.flush()?;
    Ok(())
}

pub fn read_detections_file(path: &Path) -> Result<DetectionsRead> {
    read_detections(open(path)?)
}

pub fn write_gt_file(path: &Path, frames: &[GtFrame]) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    write_gt(&mut w, frames)?;
    w.flush()?;
    Ok(())
}

pub fn read_gt_file(path: &Path) -> Result<Vec<GtFrame>> {
    read_gt(open(path)?)
}

pub fn write_tracks_file(path: &Path, frames: &[FrameTracks]) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    write_tracks(&mut w, frames)?;
    w.flush()?;
    Ok(())
}

pub fn read_tracks_file(path: &Path) -> Result<Vec<FrameTrackRows>> {
    read_tracks(open(path)?)
}

pub fn write_provenance_file(path: &Path, provenance: &[Vec<DetectionProvenance>]) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    write_provenance(&mut w, provenance)?;
    w.flush()?;
    Ok(())
}

pub fn read_provenance_file(path: &Path) -> Result<Vec<(u64, Vec<DetectionProvenance>)>> {
    read_provenance(open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate, ScenarioConfig};
    use crate::tracker::track_sequence;
    use proptest::prelude::*;

    fn sample_frames() -> Vec<FrameDetections> {
        let cfg = ScenarioConfig {
            n_objects: 4,
            n_frames: 6,
            false_positive_rate_per_frame: 1.0,
            seed: 11,
            ..ScenarioConfig::default()
        };
        generate(&cfg, &NgqParams::default()).unwrap().frames
    }

    #[test]
    fn detections_round_trip_preserves_grouping() {
        let frames = sample_frames();
        let mut buf = Vec::new();
        write_detections(&mut buf, &frames).unwrap();
        let read = read_detections(&buf[..]).unwrap();
        assert_eq!(read.defaulted_quality_rows, 0);
        let nonempty: Vec<&FrameDetections> =
            frames.iter().filter(|f| !f.detections.is_empty()).collect();
        assert_eq!(read.frames.len(), nonempty.len());
        for (got, want) in read.frames.iter().zip(nonempty) {
            assert_eq!(got.frame_index, want.frame_index);
            assert_eq!(got.detections.len(), want.detections.len());
            for (g, w) in got.detections.iter().zip(&want.detections) {
                assert!((g.center.x - w.center.x).abs() < 1e-7);
                assert!((g.score - w.score).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn serialization_is_a_fixed_point_after_one_cycle() {
        let frames = sample_frames();
        let mut first = Vec::new();
        write_detections(&mut first, &frames).unwrap();
        let reread = read_detections(&first[..]).unwrap().frames;
        let mut second = Vec::new();
        write_detections(&mut second, &reread).unwrap();
        assert_eq!(first, second);
    }

    proptest! {
        #[test]
        fn nine_digit_format_round_trips_exactly(v in -1e12f64..1e12) {
            let once: f64 = jf(v).parse().unwrap();
            let twice: f64 = jf(once).parse().unwrap();
            prop_assert_eq!(once.to_bits(), twice.to_bits());
        }
    }

    #[test]
    fn missing_quality_fields_default_with_warning() {
        let line = br#"{"frame":0,"t":0.0,"cls":1,"cx":1.0,"cy":2.0,"z":0.5,"l":4.0,"w":2.0,"h":1.5,"yaw":0.0,"vx":1.0,"vy":0.0,"score":0.8}"#;
        let read = read_detections(&line[..]).unwrap();
        assert_eq!(read.defaulted_quality_rows, 1);
        let d = &read.frames[0].detections[0];
        assert_eq!(d.loc_quality, 1.0);
        assert_eq!(d.vel_quality, 1.0);
    }

    #[test]
    fn unknown_fields_are_tolerated() {
        let line = br#"{"frame":0,"t":0.0,"cls":1,"cx":1.0,"cy":2.0,"z":0.5,"l":4.0,"w":2.0,"h":1.5,"yaw":0.0,"vx":1.0,"vy":0.0,"score":0.8,"q_loc":0.9,"q_vel":0.9,"extra":42}"#;
        assert_eq!(read_detections(&line[..]).unwrap().frames.len(), 1);
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let text = b"{\"frame\":0,\"t\":0.0,\"cls\":1,\"cx\":1.0,\"cy\":2.0,\"z\":0.5,\"l\":4.0,\"w\":2.0,\"h\":1.5,\"yaw\":0.0,\"vx\":1.0,\"vy\":0.0,\"score\":0.8}\nnot json\n";
        match read_detections(&text[..]) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_detection_values_fail_at_parse() {
        let line = br#"{"frame":0,"t":0.0,"cls":1,"cx":1.0,"cy":2.0,"z":0.5,"l":4.0,"w":2.0,"h":1.5,"yaw":0.0,"vx":1.0,"vy":0.0,"score":1.8}"#;
        match read_detections(&line[..]) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 1);
                assert!(msg.contains("score"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_an_empty_list() {
        assert!(read_detections(&b""[..]).unwrap().frames.is_empty());
        assert!(read_gt(&b""[..]).unwrap().is_empty());
    }

    #[test]
    fn out_of_order_rows_are_regrouped_stably() {
        let mut frames = sample_frames();
        frames.retain(|f| !f.detections.is_empty());
        let mut buf = Vec::new();
        write_detections(&mut buf, &frames).unwrap();
        let mut lines: Vec<&[u8]> = buf.split(|b| *b == b'\n').filter(|l| !l.is_empty()).collect();
        lines.reverse();
        // Reversing whole-file order reverses within-frame order too; undo
        // that by re-reversing each frame's contiguous run of rows.
        let mut text = Vec::new();
        let mut i = 0;
        while i < lines.len() {
            let key = |l: &[u8]| -> Vec<u8> { l[..20.min(l.len())].to_vec() };
            let mut j = i;
            while j + 1 < lines.len() && key(lines[j + 1]) == key(lines[i]) {
                j += 1;
            }
            for k in (i..=j).rev() {
                text.extend_from_slice(lines[k]);
                text.push(b'\n');
            }
            i = j + 1;
        }
        let read = read_detections(&text[..]).unwrap();
        let direct = read_detections(&buf[..]).unwrap();
        assert_eq!(read, direct);
    }

    #[test]
    fn non_monotonic_timestamps_are_rejected() {
        let text = br#"{"frame":0,"t":1.0,"cls":1,"cx":1.0,"cy":2.0,"z":0.5,"l":4.0,"w":2.0,"h":1.5,"yaw":0.0,"vx":1.0,"vy":0.0,"score":0.8,"q_loc":1.0,"q_vel":1.0}
{"frame":1,"t":0.5,"cls":1,"cx":1.0,"cy":2.0,"z":0.5,"l":4.0,"w":2.0,"h":1.5,"yaw":0.0,"vx":1.0,"vy":0.0,"score":0.8,"q_loc":1.0,"q_vel":1.0}"#;
        assert!(matches!(
            read_detections(&text[..]),
            Err(Error::NonMonotonicTimestamps { .. })
        ));
    }

    #[test]
    fn conflicting_timestamps_within_a_frame_are_rejected() {
        let text = br#"{"frame":0,"t":1.0,"cls":1,"cx":1.0,"cy":2.0,"z":0.5,"l":4.0,"w":2.0,"h":1.5,"yaw":0.0,"vx":1.0,"vy":0.0,"score":0.8,"q_loc":1.0,"q_vel":1.0}
{"frame":0,"t":1.5,"cls":1,"cx":1.0,"cy":2.0,"z":0.5,"l":4.0,"w":2.0,"h":1.5,"yaw":0.0,"vx":1.0,"vy":0.0,"score":0.8,"q_loc":1.0,"q_vel":1.0}"#;
        match read_detections(&text[..]) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("conflicting timestamp"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn gt_and_tracks_round_trip() {
        let cfg = ScenarioConfig { n_objects: 3, n_frames: 5, seed: 3, ..Default::default() };
        let scenario = generate(&cfg, &NgqParams::default()).unwrap();
        let mut buf = Vec::new();
        write_gt(&mut buf, &scenario.ground_truth).unwrap();
        let gt = read_gt(&buf[..]).unwrap();
        assert_eq!(gt.len(), 5);
        assert_eq!(gt[0].objects.len(), 3);
        assert_eq!(gt[2].objects[1].object_id, 1);

        let tracks = track_sequence(&scenario.frames, &TrackerConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_tracks(&mut buf, &tracks).unwrap();
        let rows = read_tracks(&buf[..]).unwrap();
        let reported: Vec<&FrameTracks> =
            tracks.iter().filter(|f| !f.tracks.is_empty()).collect();
        assert_eq!(rows.len(), reported.len());
        for (got, want) in rows.iter().zip(reported) {
            assert_eq!(got.frame_index, want.frame_index);
            let ids: Vec<u64> = got.rows.iter().map(|r| r.track_id).collect();
            let want_ids: Vec<u64> = want.tracks.iter().map(|t| t.track_id).collect();
            assert_eq!(ids, want_ids);
        }
    }

    #[test]
    fn provenance_round_trip_and_validation() {
        let prov = vec![
            vec![
                DetectionProvenance {
                    origin: DetectionOrigin::Object(4),
                    loc_error: Vec2::new(0.1, -0.2),
                    vel_error: Vec2::new(0.0, 0.3),
                },
                DetectionProvenance {
                    origin: DetectionOrigin::FalsePositive,
                    loc_error: Vec2::new(1.0, 1.0),
                    vel_error: Vec2::new(2.0, 2.0),
                },
            ],
            vec![],
        ];
        let mut buf = Vec::new();
        write_provenance(&mut buf, &prov).unwrap();
        let read = read_provenance(&buf[..]).unwrap();
        assert_eq!(read.len(), 1, "empty frames carry no rows");
        assert_eq!(read[0].0, 0);
        assert_eq!(read[0].1, prov[0]);

        let bad = br#"{"frame":0,"det":0,"origin":"ghost","ex":0.0,"ey":0.0,"evx":0.0,"evy":0.0}"#;
        assert!(matches!(read_provenance(&bad[..]), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn estimator_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("estimator.json");
        let est = QualityEstimator { weights: vec![0.25, -1.5], bias: 0.75 };
        let names = vec!["score".to_string(), "range".to_string()];
        write_estimator(&path, &est, &names).unwrap();
        let file = read_estimator(&path).unwrap();
        assert_eq!(file.estimator(), est);
        assert_eq!(file.feature_names, names);
    }

    #[test]
    fn run_config_defaults_and_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "[tracker]\nscore_threshold = 0.5\n").unwrap();
        let cfg = read_run_config(&path).unwrap();
        assert_eq!(cfg.tracker.score_threshold, 0.5);
        assert_eq!(cfg.tracker.max_age, TrackerConfig::default().max_age);
        assert_eq!(cfg.metrics.match_radius_m, 2.0);

        fs::write(&path, "[tracker]\nscore_treshold = 0.5\n").unwrap();
        match read_run_config(&path) {
            Err(Error::InvalidConfig(msg)) => assert!(msg.contains("score_treshold"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }

        fs::write(&path, "[tracker]\nscore_threshold = 1.5\n").unwrap();
        assert!(matches!(read_run_config(&path), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn manifest_round_trips_and_echoes_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.toml");
        let mut config = RunConfig::default();
        config.tracker.gate_radius_per_class_m.insert(2, 3.5);
        config.sim.seed = 99;
        let manifest = Manifest { command: "simulate --seed 99".to_string(), config };
        write_manifest(&path, &manifest).unwrap();
        let read = read_manifest(&path).unwrap();
        assert_eq!(read, manifest);

        let text = fs::read_to_string(&path).unwrap();
        write_manifest(&path, &read).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), text, "rewrite is byte-stable");
    }
}
