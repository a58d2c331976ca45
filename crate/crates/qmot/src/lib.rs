//! Quality-aware multi-object tracking in bird's-eye view.
//!
//! The crate implements a tracking-by-detection engine whose association step
//! is gated twice: detections are first split by classification score, and
//! low-score matches are then re-checked against quality estimates (the
//! track's velocity quality and the detection's location quality). Around
//! that core sit the pieces needed to exercise it end to end at desk scale:
//!
//! - [`types`]: detections, tracks, frames, validation.
//! - [`quality`]: the normalized Gaussian quality metric `exp(-|err|/gamma)`,
//!   a BCE objective over soft quality targets, and a small logistic
//!   quality estimator with exact gradients.
//! - [`motion`]: constant-velocity prediction and a Kalman-filter baseline.
//! - [`assignment`]: gated cost matrices, exact min-cost matching, and a
//!   greedy baseline matcher.
//! - [`tracker`]: the two-gate association loop and track lifecycle, with
//!   switchable `cv` / `kf` / `qoa` modes.
//! - [`fusion`]: quality-weighted score fusion and circular BEV NMS.
//! - [`sim`]: a seeded synthetic scenario generator with controlled
//!   degradations and oracle quality annotations.
//! - [`metrics`]: CLEAR MOT, AMOTA/AMOTP, and error-correlation analysis.
//! - [`io`]: JSONL formats, run configuration, and manifests.
//! - [`cli`]: the subcommand surface used by the `qmot` binary.
//!
//! Every example under `examples/` is runnable with
//! `cargo run --example <name>` and demonstrates one capability in
//! isolation; the `qmot` binary wires the same capabilities to files.

pub mod assignment;
pub mod cli;
pub mod fusion;
pub mod io;
pub mod metrics;
pub mod motion;
pub mod quality;
pub mod sim;
pub mod tracker;
pub mod types;

/// Crate-wide error type. Variants mirror the failure modes named in the
/// operation contracts; everything else panics only on internal logic bugs.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid detection: {0}")]
    InvalidDetection(String),
    #[error("non-finite vector")]
    NonFiniteInput,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("non-monotonic timestamps: {prev} then {next}")]
    NonMonotonicTimestamps { prev: f64, next: f64 },
    #[error("negative time step: {0}")]
    NegativeTimeStep(f64),
    #[error("singular innovation covariance")]
    SingularInnovation,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    UndefinedMetric(&'static str),
    #[error("no score threshold achieves positive recall")]
    NoPositiveRecall,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
