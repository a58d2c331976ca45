//! Golden-file checks: committed fixtures are byte-for-byte what the
//! library writes today.
//!
//! Two families are frozen here. The hand-built 10-frame evaluation
//! scenario (two objects, one miss, one false positive, one identity
//! switch) anchors the metrics stack; the small simulator dump anchors
//! the generator's random streams and the 9-significant-digit float
//! format. Any intentional change to either regenerates the fixtures by
//! running this test with `UPDATE_GOLDEN=1` and committing the result.

use std::path::PathBuf;

use qmot::io::{write_detections, write_gt, write_provenance, write_tracks};
use qmot::sim::{generate, GtFrame, GtObjectState, ScenarioConfig};
use qmot::tracker::FrameTracks;
use qmot::types::{Track, TrackStatus, Vec2};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Compares freshly written bytes against the committed fixture, or
/// rewrites the fixture when `UPDATE_GOLDEN` is set.
fn assert_frozen(name: &str, generated: &[u8]) {
    let path = fixture(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, generated).unwrap();
        return;
    }
    let committed = std::fs::read(&path)
        .unwrap_or_else(|e| panic!("missing fixture {name} ({e}); run with UPDATE_GOLDEN=1"));
    assert_eq!(
        committed,
        generated,
        "{name} drifted from the committed bytes; if intentional, regenerate with UPDATE_GOLDEN=1"
    );
}

/// Two objects crossing ten frames on parallel lanes, one metre per
/// frame. Twenty ground-truth boxes in total.
pub fn golden_gt_frames() -> Vec<GtFrame> {
    (0..10)
        .map(|k| GtFrame {
            frame_index: k,
            timestamp_s: k as f64 * 0.5,
            objects: vec![
                GtObjectState {
                    object_id: 0,
                    class_id: 0,
                    center: Vec2::new(k as f64, 0.0),
                    velocity: Vec2::new(2.0, 0.0),
                },
                GtObjectState {
                    object_id: 1,
                    class_id: 0,
                    center: Vec2::new(k as f64, 10.0),
                    velocity: Vec2::new(2.0, 0.0),
                },
            ],
        })
        .collect()
}

fn hyp(track_id: u64, x: f64, y: f64, frame: u64) -> Track {
    Track {
        track_id,
        class_id: 0,
        center: Vec2::new(x, y),
        velocity: Vec2::new(2.0, 0.0),
        score: 0.9,
        vel_quality: 1.0,
        loc_quality: 1.0,
        hits: 1,
        misses_in_a_row: 0,
        status: TrackStatus::Confirmed,
        last_update_frame: frame,
    }
}

/// Hypotheses over the golden ground truth with exactly one miss (track
/// 100 skips frame 4), one false positive (track 999 appears once, far
/// from everything), and one identity switch (object 1 changes from
/// track 200 to track 201 at frame 5). Every true match is coincident
/// with its object, so MOTP is zero.
pub fn golden_track_frames() -> Vec<FrameTracks> {
    (0..10)
        .map(|k| {
            let mut tracks = Vec::new();
            if k != 4 {
                tracks.push(hyp(100, k as f64, 0.0, k));
            }
            let follower = if k < 5 { 200 } else { 201 };
            tracks.push(hyp(follower, k as f64, 10.0, k));
            if k == 7 {
                tracks.push(hyp(999, 50.0, 50.0, k));
            }
            FrameTracks { frame_index: k, timestamp_s: k as f64 * 0.5, tracks }
        })
        .collect()
}

#[test]
fn golden_evaluation_fixture_is_frozen() {
    let mut gt_bytes = Vec::new();
    write_gt(&mut gt_bytes, &golden_gt_frames()).unwrap();
    assert_frozen("golden_gt.jsonl", &gt_bytes);

    let mut track_bytes = Vec::new();
    write_tracks(&mut track_bytes, &golden_track_frames()).unwrap();
    assert_frozen("golden_tracks.jsonl", &track_bytes);
}

#[test]
fn simulator_output_format_is_frozen() {
    let cfg = ScenarioConfig {
        n_objects: 3,
        n_frames: 8,
        miss_rate: 0.1,
        false_positive_rate_per_frame: 0.5,
        degraded_fraction: 0.34,
        seed: 42,
        ..ScenarioConfig::default()
    };
    let scenario = generate(&cfg, &Default::default()).unwrap();

    let mut gt_bytes = Vec::new();
    write_gt(&mut gt_bytes, &scenario.ground_truth).unwrap();
    assert_frozen("sim_gt.jsonl", &gt_bytes);

    let mut det_bytes = Vec::new();
    write_detections(&mut det_bytes, &scenario.frames).unwrap();
    assert_frozen("sim_detections.jsonl", &det_bytes);

    let mut prov_bytes = Vec::new();
    write_provenance(&mut prov_bytes, &scenario.provenance).unwrap();
    assert_frozen("sim_provenance.jsonl", &prov_bytes);
}

#[test]
fn golden_fixture_reads_back_to_its_source() {
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        return; // the rewrite tests may not have produced the files yet
    }
    let gt = qmot::io::read_gt_file(&fixture("golden_gt.jsonl")).unwrap();
    assert_eq!(gt, golden_gt_frames());

    let tracks = qmot::io::read_tracks_file(&fixture("golden_tracks.jsonl")).unwrap();
    let source = golden_track_frames();
    assert_eq!(tracks.len(), source.len());
    for (read, built) in tracks.iter().zip(&source) {
        assert_eq!(read.frame_index, built.frame_index);
        assert_eq!(read.timestamp_s, built.timestamp_s);
        assert_eq!(read.rows.len(), built.tracks.len());
        for (row, track) in read.rows.iter().zip(&built.tracks) {
            assert_eq!(row.track_id, track.track_id);
            assert_eq!(row.center, track.center);
            assert_eq!(row.score, track.score);
        }
    }
}
