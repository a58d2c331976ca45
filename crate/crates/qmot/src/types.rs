//! Shared domain types: BEV vectors, detections, tracks, and frames.
//!
//! Association is purely 2-D in the bird's-eye-view plane; the 3-D box
//! fields (`height_z`, `extent`, `yaw`) are carried through untouched so
//! detector logs round-trip losslessly.

use serde::{Deserialize, Serialize};

/// A 2-D vector in the BEV plane (meters, or meters/second for velocities).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn sub(&self, other: Vec2) -> Vec2 {
        Vec2::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(&self, other: Vec2) -> Vec2 {
        Vec2::new(self.x + other.x, self.y + other.y)
    }

    pub fn scale(&self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }

    pub fn distance(&self, other: Vec2) -> f64 {
        self.sub(other).norm()
    }
}

/// 3-D box extent in meters. Not used by association; carried for I/O.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxExtent {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

impl Default for BoxExtent {
    fn default() -> Self {
        BoxExtent { length: 4.5, width: 2.0, height: 1.6 }
    }
}

/// One detected object in BEV, as produced by a detector log or the
/// simulator. `loc_quality` and `vel_quality` are inputs here: quality is
/// estimated upstream (or annotated by the simulator) and consumed by the
/// tracker, never recomputed at track time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame_index: u64,
    pub class_id: u32,
    pub center: Vec2,
    pub height_z: f64,
    pub extent: BoxExtent,
    /// Heading in radians, wrapped to [-pi, pi).
    pub yaw: f64,
    pub velocity: Vec2,
    /// Classification score in [0, 1].
    pub score: f64,
    /// Location quality in [0, 1] (1 = center believed exact).
    pub loc_quality: f64,
    /// Velocity quality in [0, 1] (1 = velocity believed exact).
    pub vel_quality: f64,
}

impl Default for Detection {
    fn default() -> Self {
        Detection {
            frame_index: 0,
            class_id: 0,
            center: Vec2::default(),
            height_z: 0.0,
            extent: BoxExtent::default(),
            yaw: 0.0,
            velocity: Vec2::default(),
            score: 1.0,
            loc_quality: 1.0,
            vel_quality: 1.0,
        }
    }
}

/// Lifecycle state of a track. A track is born `Tentative`, becomes
/// `Confirmed` once it has accumulated `min_hits` updates, drops to `Lost`
/// on a missed frame, and is `Removed` (dropped from the tracker state)
/// once its consecutive misses exceed `max_age`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Lost,
    Removed,
}

/// A live trajectory. `center`/`velocity` are the current state (advanced
/// by prediction each frame, overwritten from the matched detection on
/// update); the quality fields are copied from the most recent matched
/// detection, which is the only place a track can obtain them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub track_id: u64,
    pub class_id: u32,
    pub center: Vec2,
    pub velocity: Vec2,
    /// Score of the most recent matched detection.
    pub score: f64,
    pub vel_quality: f64,
    pub loc_quality: f64,
    /// Total successful updates, including the initializing detection.
    pub hits: u32,
    pub misses_in_a_row: u32,
    pub status: TrackStatus,
    pub last_update_frame: u64,
}

/// All detections of one frame plus its timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDetections {
    pub frame_index: u64,
    pub timestamp_s: f64,
    pub detections: Vec<Detection>,
}

/// Wraps an angle to [-pi, pi). Idempotent: values already in range are
/// returned unchanged, bit for bit (the in-range check runs before any
/// arithmetic, so no rounding can disturb a fixed point).
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::PI;
    if (-PI..PI).contains(&theta) {
        return theta;
    }
    let r = (theta + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid lands in [0, 2pi); the subtraction keeps r < pi except
    // when rounding pushes it onto the excluded endpoint itself.
    if r >= PI {
        -PI
    } else {
        r
    }
}

/// Checks every detection invariant and names the first violated field.
pub fn validate_detection(d: &Detection) -> Result<(), String> {
    if !d.center.is_finite() {
        return Err("center non-finite".into());
    }
    if !d.velocity.is_finite() {
        return Err("velocity non-finite".into());
    }
    if !d.height_z.is_finite() {
        return Err("height_z non-finite".into());
    }
    if !d.yaw.is_finite() {
        return Err("yaw non-finite".into());
    }
    if !(0.0..=1.0).contains(&d.score) {
        return Err("score out of [0,1]".into());
    }
    if !(0.0..=1.0).contains(&d.loc_quality) {
        return Err("loc_quality out of [0,1]".into());
    }
    if !(0.0..=1.0).contains(&d.vel_quality) {
        return Err("vel_quality out of [0,1]".into());
    }
    if !(d.extent.length > 0.0 && d.extent.width > 0.0 && d.extent.height > 0.0) {
        return Err("extent non-positive".into());
    }
    Ok(())
}
