//! Command-line front end.
//!
//! Six subcommands cover the pipeline: `simulate` writes a synthetic
//! scenario, `track` runs a tracker over a detection stream, `evaluate`
//! scores a track stream against ground truth, `analyze` characterizes
//! the error distributions behind the quality annotations, `fit-quality`
//! trains the logistic quality models, and `sweep-alpha` traces score
//! fusion across its blend exponent. Every command resolves its
//! configuration (config file first, flags override), writes fixed-name
//! outputs into `--out-dir`, and records the resolved configuration plus
//! the invocation in `manifest.toml`; nothing volatile is written, so the
//! same invocation reproduces its outputs byte for byte.
//!
//! Exit codes: 0 on success, 1 on validation or runtime failure, 2 on
//! usage errors.

use crate::assignment::{build_cost, hungarian, GateConfig};
use crate::fusion::apply_fusion;
use crate::io::{
    self, read_detections_file, read_estimator, read_gt_file, read_manifest, read_provenance_file,
    read_run_config, read_tracks_file, write_detections_file, write_estimator, write_gt_file,
    write_manifest, write_provenance_file, write_tracks_file, Manifest, RunConfig,
};
use crate::metrics::{
    amota, analyze_quality, clear_mot_sequence, pearson, GtBox, Histogram, HypBox, MetricsReport,
};
use crate::quality::{bce_quality_loss, fit_standardized};
use crate::sim::{
    annotate_learned_quality, detection_features, generate, DetectionOrigin, DetectionProvenance,
    GtFrame, QualityAnnotation, Scenario,
};
use crate::tracker::{track_sequence, TrackerMode};
use crate::types::{Detection, FrameDetections, Vec2};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "qmot",
    version,
    about = "Quality-aware multi-object tracking: simulate, track, evaluate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario (ground truth, detections, provenance).
    Simulate(SimulateArgs),
    /// Run a tracker over a detection stream.
    Track(TrackArgs),
    /// Score a track stream against ground truth.
    Evaluate(EvaluateArgs),
    /// Characterize location/velocity error distributions and their coupling.
    Analyze(AnalyzeArgs),
    /// Fit a logistic quality model on scenario or CSV feature tables.
    FitQuality(FitQualityArgs),
    /// Score a detection stream against ground truth, optionally fused.
    EvaluateDetection(EvaluateDetectionArgs),
    /// Evaluate detection and tracking quality across fusion exponents.
    SweepAlpha(SweepAlphaArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (TOML); command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory the outputs are written into (created if missing).
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    objects: Option<usize>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    miss_rate: Option<f64>,
    /// Expected false positives per frame.
    #[arg(long)]
    fp_rate: Option<f64>,
    /// Fraction of objects with inflated velocity noise.
    #[arg(long)]
    degraded_fraction: Option<f64>,
    /// Fraction of objects with inflated position noise.
    #[arg(long)]
    loc_degraded_fraction: Option<f64>,
    /// Quality annotation mode: oracle, learned, or noisy_oracle.
    #[arg(long)]
    quality: Option<QualityAnnotation>,
    /// Location-quality estimator (required with --quality learned).
    #[arg(long)]
    estimator_loc: Option<PathBuf>,
    /// Velocity-quality estimator (required with --quality learned).
    #[arg(long)]
    estimator_vel: Option<PathBuf>,
}

#[derive(Args)]
struct TrackArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Detection stream (JSONL).
    #[arg(long)]
    detections: PathBuf,
    /// Tracker variant: cv, kf, or qoa.
    #[arg(long)]
    mode: Option<TrackerMode>,
    /// Score split between the association stages.
    #[arg(long)]
    tau: Option<f64>,
    /// Velocity-quality floor for stage-two matches.
    #[arg(long)]
    mu_v: Option<f64>,
    /// Localization-quality floor for stage-two matches.
    #[arg(long)]
    mu_l: Option<f64>,
    #[arg(long)]
    min_hits: Option<u32>,
    #[arg(long)]
    max_age: Option<u32>,
    /// Apply score fusion and suppression before tracking.
    #[arg(long)]
    fuse: bool,
    /// Fusion blend exponent; implies --fuse.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Ground-truth stream (JSONL).
    #[arg(long)]
    gt: PathBuf,
    /// Track stream (JSONL).
    #[arg(long)]
    tracks: PathBuf,
    #[arg(long)]
    match_radius: Option<f64>,
    /// Number of recall targets in the AMOTA sweep.
    #[arg(long)]
    recall_thresholds: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Provenance stream written by simulate (JSONL).
    #[arg(long)]
    provenance: PathBuf,
    /// Include false-positive rows (their errors are synthetic).
    #[arg(long)]
    include_fp: bool,
}

#[derive(Args)]
struct FitQualityArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Scenario directory written by simulate.
    #[arg(long, conflicts_with = "features")]
    scenario_dir: Option<PathBuf>,
    /// CSV feature table with a `target` column.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Which quality to fit from a scenario: loc or vel.
    #[arg(long, default_value = "loc")]
    target: String,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    lr: f64,
    /// Fraction of samples held out for validation.
    #[arg(long, default_value_t = 0.2)]
    holdout: f64,
    /// Seed for the holdout split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvaluateDetectionArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Detection stream (JSONL).
    #[arg(long)]
    detections: PathBuf,
    /// Ground-truth stream (JSONL).
    #[arg(long)]
    gt: PathBuf,
    /// Apply score fusion and suppression before scoring.
    #[arg(long)]
    fuse: bool,
    /// Fusion blend exponent; implies --fuse.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    match_radius: Option<f64>,
}

#[derive(Args)]
struct SweepAlphaArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Detection stream (JSONL).
    #[arg(long)]
    detections: PathBuf,
    /// Ground-truth stream (JSONL).
    #[arg(long)]
    gt: PathBuf,
    /// Comma-separated blend exponents; overrides --steps.
    #[arg(long)]
    alphas: Option<String>,
    /// Number of evenly spaced exponents over [0, 1].
    #[arg(long, default_value_t = 11)]
    steps: usize,
}

/// Parses `argv` and runs the selected command. Returns the process exit
/// code: 0 success, 1 validation/runtime failure, 2 usage error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let echo: String = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ");
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code =
                if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                    0
                } else {
                    2
                };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli, &echo) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli, echo: &str) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a, echo),
        Command::Track(a) => cmd_track(a, echo),
        Command::Evaluate(a) => cmd_evaluate(a, echo),
        Command::Analyze(a) => cmd_analyze(a, echo),
        Command::FitQuality(a) => cmd_fit_quality(a, echo),
        Command::EvaluateDetection(a) => cmd_evaluate_detection(a, echo),
        Command::SweepAlpha(a) => cmd_sweep_alpha(a, echo),
    }
}

fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    match &common.config {
        Some(path) => read_run_config(path),
        None => Ok(RunConfig::default()),
    }
}

fn prepare_out_dir(common: &CommonArgs) -> Result<&Path> {
    fs::create_dir_all(&common.out_dir)?;
    Ok(&common.out_dir)
}

fn finish(out_dir: &Path, config: RunConfig, echo: &str) -> Result<()> {
    write_manifest(&out_dir.join("manifest.toml"), &Manifest {
        command: echo.to_string(),
        config,
    })
}

fn cmd_simulate(a: SimulateArgs, echo: &str) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    if let Some(v) = a.seed {
        cfg.sim.seed = v;
    }
    if let Some(v) = a.objects {
        cfg.sim.n_objects = v;
    }
    if let Some(v) = a.frames {
        cfg.sim.n_frames = v;
    }
    if let Some(v) = a.miss_rate {
        cfg.sim.miss_rate = v;
    }
    if let Some(v) = a.fp_rate {
        cfg.sim.false_positive_rate_per_frame = v;
    }
    if let Some(v) = a.degraded_fraction {
        cfg.sim.degraded_fraction = v;
    }
    if let Some(v) = a.loc_degraded_fraction {
        cfg.sim.loc_degraded_fraction = v;
    }
    if let Some(v) = a.quality {
        cfg.sim.quality_annotation = v;
    }
    cfg.validate()?;

    let mut scenario = generate(&cfg.sim, &cfg.ngq)?;
    if cfg.sim.quality_annotation == QualityAnnotation::Learned {
        let (loc_path, vel_path) = match (&a.estimator_loc, &a.estimator_vel) {
            (Some(l), Some(v)) => (l, v),
            _ => {
                return Err(Error::InvalidConfig(
                    "--quality learned needs --estimator-loc and --estimator-vel".into(),
                ))
            }
        };
        let loc = read_estimator(loc_path)?.estimator();
        let vel = read_estimator(vel_path)?.estimator();
        scenario = annotate_learned_quality(&scenario, &loc, &vel)?;
    }

    let out = prepare_out_dir(&a.common)?;
    write_scenario(out, &scenario)?;
    let n_det: usize = scenario.frames.iter().map(|f| f.detections.len()).sum();
    println!(
        "simulated {} objects for {} frames: {} detections",
        cfg.sim.n_objects, cfg.sim.n_frames, n_det
    );
    finish(out, cfg, echo)
}

/// Writes the three scenario streams with their fixed names.
fn write_scenario(dir: &Path, scenario: &Scenario) -> Result<()> {
    write_gt_file(&dir.join("gt.jsonl"), &scenario.ground_truth)?;
    write_detections_file(&dir.join("detections.jsonl"), &scenario.frames)?;
    write_provenance_file(&dir.join("provenance.jsonl"), &scenario.provenance)
}

fn cmd_track(a: TrackArgs, echo: &str) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    if let Some(v) = a.mode {
        cfg.tracker.mode = v;
    }
    if let Some(v) = a.tau {
        cfg.tracker.score_threshold = v;
    }
    if let Some(v) = a.mu_v {
        cfg.tracker.vel_quality_min = v;
    }
    if let Some(v) = a.mu_l {
        cfg.tracker.loc_quality_min = v;
    }
    if let Some(v) = a.min_hits {
        cfg.tracker.min_hits = v;
    }
    if let Some(v) = a.max_age {
        cfg.tracker.max_age = v;
    }
    if let Some(v) = a.alpha {
        cfg.fusion.alpha = v;
    }
    cfg.validate()?;

    let read = read_detections_file(&a.detections)?;
    if read.defaulted_quality_rows > 0 {
        eprintln!(
            "warning: {} detection rows had no quality fields; defaulted both to 1",
            read.defaulted_quality_rows
        );
    }
    let mut frames = read.frames;
    if a.fuse || a.alpha.is_some() {
        frames = apply_fusion(&frames, &cfg.fusion)?;
    }
    let tracks = track_sequence(&frames, &cfg.tracker)?;

    let out = prepare_out_dir(&a.common)?;
    write_tracks_file(&out.join("tracks.jsonl"), &tracks)?;
    let rows: usize = tracks.iter().map(|f| f.tracks.len()).sum();
    println!("tracked {} frames: {} confirmed track rows", tracks.len(), rows);
    finish(out, cfg, echo)
}

/// Aligns ground-truth and track streams on the union of frame indices.
fn align_frames(
    gt: &[GtFrame],
    tracks: &[io::FrameTrackRows],
) -> (Vec<Vec<GtBox>>, Vec<Vec<HypBox>>) {
    let mut union: BTreeMap<u64, (Vec<GtBox>, Vec<HypBox>)> = BTreeMap::new();
    for g in gt {
        let boxes = g
            .objects
            .iter()
            .map(|o| GtBox { object_id: o.object_id, class_id: o.class_id, center: o.center })
            .collect();
        union.entry(g.frame_index).or_default().0 = boxes;
    }
    for f in tracks {
        let boxes = f
            .rows
            .iter()
            .map(|r| HypBox {
                track_id: r.track_id,
                class_id: r.class_id,
                center: r.center,
                score: r.score,
            })
            .collect();
        union.entry(f.frame_index).or_default().1 = boxes;
    }
    union.into_values().unzip()
}

fn cmd_evaluate(a: EvaluateArgs, echo: &str) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    if let Some(v) = a.match_radius {
        cfg.metrics.match_radius_m = v;
    }
    if let Some(v) = a.recall_thresholds {
        cfg.metrics.recall_thresholds = v;
    }
    cfg.validate()?;

    let gt = read_gt_file(&a.gt)?;
    let tracks = read_tracks_file(&a.tracks)?;
    let (gt_frames, hyp_frames) = align_frames(&gt, &tracks);
    let radius = cfg.metrics.match_radius_m;
    let clear = clear_mot_sequence(&gt_frames, &hyp_frames, radius)?;
    let sweep = amota(&gt_frames, &hyp_frames, radius, cfg.metrics.recall_thresholds)?;
    let report = MetricsReport::assemble(&clear, &sweep);

    let out = prepare_out_dir(&a.common)?;
    write_json(&out.join("metrics.json"), &report)?;
    let mut csv = String::from("target_recall,achieved_recall,threshold,motar,motp_m\n");
    for r in &report.per_recall_rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            io::format_sig(r.target_recall),
            io::format_sig(r.achieved_recall),
            io::format_sig(r.threshold),
            io::format_sig(r.motar),
            io::format_sig(r.motp_m),
        ));
    }
    fs::write(out.join("per_recall.csv"), csv)?;

    println!("MOTA   {:.4}", report.mota);
    println!("MOTP   {:.3} m", report.motp_m);
    println!("IDS    {}", report.ids);
    println!("FRAG   {}", report.frag);
    println!("MT     {}", report.mt);
    println!("ML     {}", report.ml);
    println!("recall {:.4}  precision {:.4}", report.recall, report.precision);
    println!("AMOTA  {:.4}", report.amota);
    println!("AMOTP  {:.3} m  ({} recall rows)", report.amotp_m, report.per_recall_rows.len());
    finish(out, cfg, echo)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value).expect("report serializes");
    body.push('\n');
    fs::write(path, body)?;
    Ok(())
}

fn write_histogram_csv(path: &Path, hist: &Histogram) -> Result<()> {
    let mut csv = String::from("edge_lo,edge_hi,count\n");
    for (i, count) in hist.counts.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{}\n",
            io::format_sig(hist.edges[i]),
            io::format_sig(hist.edges[i + 1]),
            count
        ));
    }
    fs::write(path, csv)?;
    Ok(())
}

fn cmd_analyze(a: AnalyzeArgs, echo: &str) -> Result<()> {
    let cfg = load_config(&a.common)?;
    cfg.validate()?;
    let provenance = read_provenance_file(&a.provenance)?;
    let pairs: Vec<(f64, f64)> = provenance
        .iter()
        .flat_map(|(_, rows)| rows.iter())
        .filter(|p| a.include_fp || matches!(p.origin, DetectionOrigin::Object(_)))
        .map(|p| (p.loc_error.norm(), p.vel_error.norm()))
        .collect();
    let analysis = analyze_quality(&pairs)?;

    let out = prepare_out_dir(&a.common)?;
    write_json(&out.join("analysis.json"), &analysis)?;
    write_histogram_csv(&out.join("hist_loc.csv"), &analysis.loc_error_histogram)?;
    write_histogram_csv(&out.join("hist_vel.csv"), &analysis.vel_error_histogram)?;
    let mut csv = String::from("loc_error_m,vel_error_mps\n");
    for (l, v) in &analysis.scatter_sample {
        csv.push_str(&format!("{},{}\n", io::format_sig(*l), io::format_sig(*v)));
    }
    fs::write(out.join("scatter.csv"), csv)?;

    println!("samples  {}", pairs.len());
    println!("pearson  {:.4}", analysis.pearson_r);
    println!("spearman {:.4}", analysis.spearman_rho);
    if analysis.degenerate_correlation {
        println!("correlations degenerate: at least one error series is constant");
    }
    finish(out, cfg, echo)
}

const SCENARIO_FEATURE_NAMES: [&str; 4] =
    ["score", "range_fraction", "loc_error_norm", "vel_error_norm"];

/// `(features, target)` training rows plus the feature column names.
type SampleTable = (Vec<(Vec<f64>, f64)>, Vec<String>);

/// Rebuilds the quality training table from a scenario directory.
fn load_scenario_samples(dir: &Path, target: &str) -> Result<SampleTable> {
    let manifest = read_manifest(&dir.join("manifest.toml"))?;
    let arena = manifest.config.sim.arena_half_extent_m;
    let gamma = match target {
        "loc" => manifest.config.ngq.gamma_loc,
        "vel" => manifest.config.ngq.gamma_vel,
        other => {
            return Err(Error::InvalidConfig(format!(
                "target must be loc or vel, got {other:?}"
            )))
        }
    };
    let frames = read_detections_file(&dir.join("detections.jsonl"))?.frames;
    let provenance: BTreeMap<u64, Vec<DetectionProvenance>> =
        read_provenance_file(&dir.join("provenance.jsonl"))?.into_iter().collect();
    let mut samples = Vec::new();
    for frame in &frames {
        let rows = provenance.get(&frame.frame_index).ok_or_else(|| {
            Error::InvalidConfig(format!("provenance missing frame {}", frame.frame_index))
        })?;
        if rows.len() != frame.detections.len() {
            return Err(Error::InvalidConfig(format!(
                "frame {}: {} detections but {} provenance rows",
                frame.frame_index,
                frame.detections.len(),
                rows.len()
            )));
        }
        for (det, p) in frame.detections.iter().zip(rows) {
            let x = detection_features(det, p, arena);
            let err = match target {
                "loc" => p.loc_error.norm(),
                _ => p.vel_error.norm(),
            };
            samples.push((x, (-err / gamma).exp()));
        }
    }
    Ok((samples, SCENARIO_FEATURE_NAMES.iter().map(|s| s.to_string()).collect()))
}

/// Reads a CSV feature table; every column except `target` is a feature.
fn load_csv_samples(path: &Path) -> Result<SampleTable> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?
        .clone();
    let target_idx = headers
        .iter()
        .position(|h| h == "target")
        .ok_or_else(|| Error::InvalidConfig("feature CSV needs a `target` column".into()))?;
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target_idx)
        .map(|(_, h)| h.to_string())
        .collect();
    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse { line, msg: e.to_string() }
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mut features = Vec::with_capacity(names.len());
        let mut target = f64::NAN;
        for (i, field) in record.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line, msg: format!("bad number {field:?}") })?;
            if i == target_idx {
                target = v;
            } else {
                features.push(v);
            }
        }
        if !(0.0..=1.0).contains(&target) {
            return Err(Error::Parse { line, msg: format!("target out of [0, 1]: {target}") });
        }
        samples.push((features, target));
    }
    Ok((samples, names))
}

fn cmd_fit_quality(a: FitQualityArgs, echo: &str) -> Result<()> {
    let cfg = load_config(&a.common)?;
    cfg.validate()?;
    if !(0.0..1.0).contains(&a.holdout) {
        return Err(Error::InvalidConfig("holdout must lie in [0, 1)".into()));
    }
    let (samples, feature_names) = match (&a.scenario_dir, &a.features) {
        (Some(dir), None) => load_scenario_samples(dir, &a.target)?,
        (None, Some(path)) => load_csv_samples(path)?,
        _ => {
            return Err(Error::InvalidConfig(
                "pass exactly one of --scenario-dir or --features".into(),
            ))
        }
    };
    if samples.len() < 2 {
        return Err(Error::EmptyInput("fit-quality needs at least two samples"));
    }

    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(a.seed));
    let n_holdout = (samples.len() as f64 * a.holdout).round() as usize;
    let (holdout_idx, train_idx) = order.split_at(n_holdout);
    if train_idx.is_empty() {
        return Err(Error::InvalidConfig("holdout leaves no training samples".into()));
    }
    let train: Vec<(Vec<f64>, f64)> = train_idx.iter().map(|&i| samples[i].clone()).collect();
    let fit = fit_standardized(&train, a.epochs, a.lr)?;

    let eval = |idx: &[usize]| -> Result<(f64, f64)> {
        let mut preds = Vec::with_capacity(idx.len());
        let mut targets = Vec::with_capacity(idx.len());
        for &i in idx {
            preds.push(fit.estimator.forward(&samples[i].0)?);
            targets.push(samples[i].1);
        }
        let bce = bce_quality_loss(&preds, &targets)?;
        let r = if preds.len() >= 2 { pearson(&preds, &targets)? } else { 0.0 };
        Ok((bce, r))
    };
    let (train_bce, train_r) = eval(train_idx)?;

    let out = prepare_out_dir(&a.common)?;
    write_estimator(&out.join("estimator.json"), &fit.estimator, &feature_names)?;

    #[derive(serde::Serialize)]
    struct FitReport {
        n_train: usize,
        n_holdout: usize,
        epochs: usize,
        learning_rate: f64,
        initial_loss: f64,
        final_train_bce: f64,
        train_pearson: f64,
        holdout_bce: Option<f64>,
        holdout_pearson: Option<f64>,
    }
    let mut report = FitReport {
        n_train: train_idx.len(),
        n_holdout: holdout_idx.len(),
        epochs: a.epochs,
        learning_rate: a.lr,
        initial_loss: fit.epoch_losses.first().copied().unwrap_or(f64::NAN),
        final_train_bce: train_bce,
        train_pearson: train_r,
        holdout_bce: None,
        holdout_pearson: None,
    };
    println!("fit {} samples ({} held out)", samples.len(), holdout_idx.len());
    println!("train    bce {:.5}  pearson {:.4}", train_bce, train_r);
    if holdout_idx.len() >= 2 {
        let (bce, r) = eval(holdout_idx)?;
        println!("holdout  bce {:.5}  pearson {:.4}", bce, r);
        report.holdout_bce = Some(bce);
        report.holdout_pearson = Some(r);
    }
    write_json(&out.join("fit_report.json"), &report)?;
    finish(out, cfg, echo)
}

/// Detection-level quality of one fused stream against ground truth.
#[derive(serde::Serialize)]
struct DetectionStats {
    survivors: usize,
    precision: f64,
    recall: f64,
    mean_loc_error_m: f64,
    mean_vel_error_mps: f64,
}

fn detection_stats(
    gt: &[GtFrame],
    frames: &[FrameDetections],
    radius: f64,
) -> Result<DetectionStats> {
    let by_frame: BTreeMap<u64, &[Detection]> =
        frames.iter().map(|f| (f.frame_index, f.detections.as_slice())).collect();
    let gate = GateConfig {
        gate_radius_m: radius,
        gate_radius_per_class_m: BTreeMap::new(),
        class_gated: false,
    };
    let known: std::collections::BTreeSet<u64> = gt.iter().map(|g| g.frame_index).collect();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_count = 0usize;
    let mut loc_sum = 0.0;
    let mut vel_sum = 0.0;
    for g in gt {
        let dets = by_frame.get(&g.frame_index).copied().unwrap_or(&[]);
        let predicted: Vec<(Vec2, u32)> =
            g.objects.iter().map(|o| (o.center, o.class_id)).collect();
        let result = hungarian(&build_cost(&predicted, dets, &gate)?);
        tp += result.pairs.len();
        fn_count += result.unmatched_rows.len();
        fp += result.unmatched_cols.len();
        for &(r, c) in &result.pairs {
            loc_sum += g.objects[r].center.distance(dets[c].center);
            vel_sum += g.objects[r].velocity.sub(dets[c].velocity).norm();
        }
    }
    for f in frames {
        if !known.contains(&f.frame_index) {
            fp += f.detections.len();
        }
    }
    let ratio = |num: usize, den: usize| if den > 0 { num as f64 / den as f64 } else { 0.0 };
    Ok(DetectionStats {
        survivors: frames.iter().map(|f| f.detections.len()).sum(),
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_count),
        mean_loc_error_m: if tp > 0 { loc_sum / tp as f64 } else { 0.0 },
        mean_vel_error_mps: if tp > 0 { vel_sum / tp as f64 } else { 0.0 },
    })
}

fn cmd_evaluate_detection(a: EvaluateDetectionArgs, echo: &str) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    if let Some(v) = a.alpha {
        cfg.fusion.alpha = v;
    }
    if let Some(v) = a.match_radius {
        cfg.metrics.match_radius_m = v;
    }
    cfg.validate()?;

    let gt = read_gt_file(&a.gt)?;
    let read = read_detections_file(&a.detections)?;
    if read.defaulted_quality_rows > 0 {
        eprintln!(
            "warning: {} detection rows had no quality fields; defaulted both to 1",
            read.defaulted_quality_rows
        );
    }
    let mut frames = read.frames;
    let input_rows: usize = frames.iter().map(|f| f.detections.len()).sum();
    if a.fuse || a.alpha.is_some() {
        frames = apply_fusion(&frames, &cfg.fusion)?;
    }
    let stats = detection_stats(&gt, &frames, cfg.metrics.match_radius_m)?;

    let out = prepare_out_dir(&a.common)?;
    write_json(&out.join("detection_metrics.json"), &stats)?;
    println!("detections {} -> {} survivors", input_rows, stats.survivors);
    println!("precision  {:.4}", stats.precision);
    println!("recall     {:.4}", stats.recall);
    println!("loc error  {:.3} m", stats.mean_loc_error_m);
    println!("vel error  {:.3} m/s", stats.mean_vel_error_mps);
    finish(out, cfg, echo)
}

fn parse_alphas(a: &SweepAlphaArgs) -> Result<Vec<f64>> {
    if let Some(list) = &a.alphas {
        let mut out = Vec::new();
        for part in list.split(',') {
            let v: f64 = part
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad alpha {part:?}")))?;
            out.push(v);
        }
        if out.is_empty() {
            return Err(Error::InvalidConfig("empty alpha list".into()));
        }
        return Ok(out);
    }
    if a.steps < 2 {
        return Err(Error::InvalidConfig("sweep needs at least 2 steps".into()));
    }
    Ok((0..a.steps).map(|i| i as f64 / (a.steps - 1) as f64).collect())
}

fn cmd_sweep_alpha(a: SweepAlphaArgs, echo: &str) -> Result<()> {
    let cfg = load_config(&a.common)?;
    cfg.validate()?;
    let alphas = parse_alphas(&a)?;
    let gt = read_gt_file(&a.gt)?;
    let read = read_detections_file(&a.detections)?;
    if read.defaulted_quality_rows > 0 {
        eprintln!(
            "warning: {} detection rows had no quality fields; defaulted both to 1",
            read.defaulted_quality_rows
        );
    }
    let radius = cfg.metrics.match_radius_m;

    let mut csv = String::from(
        "alpha,survivors,det_precision,det_recall,mean_loc_error_m,mean_vel_error_mps,mota,amota,ids\n",
    );
    println!("alpha  survivors  vel_err  loc_err   mota   amota  ids");
    for &alpha in &alphas {
        let fusion = crate::fusion::FusionConfig { alpha, ..cfg.fusion.clone() };
        fusion.validate()?;
        let fused = apply_fusion(&read.frames, &fusion)?;
        let stats = detection_stats(&gt, &fused, radius)?;
        let tracks = track_sequence(&fused, &cfg.tracker)?;
        let rows: Vec<io::FrameTrackRows> = tracks
            .iter()
            .map(|f| io::FrameTrackRows {
                frame_index: f.frame_index,
                timestamp_s: f.timestamp_s,
                rows: f
                    .tracks
                    .iter()
                    .map(|t| io::TrackRow {
                        track_id: t.track_id,
                        class_id: t.class_id,
                        center: t.center,
                        velocity: t.velocity,
                        score: t.score,
                        loc_quality: t.loc_quality,
                        vel_quality: t.vel_quality,
                    })
                    .collect(),
            })
            .collect();
        let (gt_frames, hyp_frames) = align_frames(&gt, &rows);
        let clear = clear_mot_sequence(&gt_frames, &hyp_frames, radius)?;
        let sweep = amota(&gt_frames, &hyp_frames, radius, cfg.metrics.recall_thresholds);
        let amota_value = match sweep {
            Ok(s) => s.amota,
            Err(Error::NoPositiveRecall) => 0.0,
            Err(e) => return Err(e),
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            io::format_sig(alpha),
            stats.survivors,
            io::format_sig(stats.precision),
            io::format_sig(stats.recall),
            io::format_sig(stats.mean_loc_error_m),
            io::format_sig(stats.mean_vel_error_mps),
            io::format_sig(clear.mota),
            io::format_sig(amota_value),
            clear.ids,
        ));
        println!(
            "{alpha:<6.3}{:>8}{:>10.3}{:>9.3}{:>8.3}{:>8.3}{:>5}",
            stats.survivors,
            stats.mean_vel_error_mps,
            stats.mean_loc_error_m,
            clear.mota,
            amota_value,
            clear.ids,
        );
    }
    let out = prepare_out_dir(&a.common)?;
    fs::write(out.join("sweep.csv"), csv)?;
    finish(out, cfg, echo)
}
