//! Deployment geometry, train mobility and the frame schedule.
//!
//! The rail runs along `y`. The base station stands `bs_rail_distance` metres
//! off the track; the refracting surface is mounted on a carriage window facing
//! `+x` and moves with the train. A cell transit is cut into frames of length
//! `frame_advance = v * tau`; one carriage is served during a contiguous window
//! of `total_users / users_per_cluster` of them.

mod config;
mod geometry;

pub use config::{canonical_key, DirectModel, ScenarioConfig, CONFIG_KEYS, DEFAULT_NOISE_POWER_DBM};
pub use geometry::{angles, Point3};

use std::ops::RangeInclusive;

use crate::error::{invalid_input, Result};
use crate::numerics::RngStream;

/// Frame bookkeeping for one cell transit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSchedule {
    /// Frames needed to cross the cell, `round(2R / D_f)`.
    pub total_frames: usize,
    /// Frames that elapse before the served window opens.
    pub serve_offset: usize,
    /// Clusters served, one per frame.
    pub served_clusters: usize,
    /// Distance covered per frame, metres.
    pub frame_advance: f64,
}

impl FrameSchedule {
    /// Absolute (1-based) indices of the served frames.
    pub fn served_frames(&self) -> RangeInclusive<usize> {
        self.serve_offset + 1..=self.serve_offset + self.served_clusters
    }

    pub fn is_served(&self, k: usize) -> bool {
        self.served_frames().contains(&k)
    }

    /// The middle frame of the served window.
    pub fn center_frame(&self) -> usize {
        self.serve_offset + self.served_clusters.div_ceil(2)
    }

    /// Served window length in seconds, `t = K_serve * tau`.
    pub fn window_duration(&self, frame_duration: f64) -> f64 {
        self.served_clusters as f64 * frame_duration
    }
}

pub fn build_schedule(cfg: &ScenarioConfig) -> Result<FrameSchedule> {
    cfg.validate()?;
    let frame_advance = cfg.speed_mps() * cfg.frame_duration;
    let total_frames = (2.0 * cfg.cell_radius / frame_advance).round() as usize;
    let served_clusters = cfg.served_clusters();
    if served_clusters > total_frames {
        return Err(crate::error::invalid_config(format!(
            "{served_clusters} served frames do not fit in a {total_frames}-frame cell transit"
        )));
    }
    let serve_offset = cfg.serve_offset.unwrap_or((total_frames - served_clusters) / 2);
    if serve_offset + served_clusters > total_frames {
        return Err(crate::error::invalid_config(format!(
            "serve_offset {serve_offset} pushes the served window past frame {total_frames}"
        )));
    }
    Ok(FrameSchedule {
        total_frames,
        serve_offset,
        served_clusters,
        frame_advance,
    })
}

fn check_frame(sched: &FrameSchedule, k: usize) -> Result<()> {
    if k == 0 || k > sched.total_frames {
        return Err(invalid_input(format!("frame {k} outside 1..={}", sched.total_frames)));
    }
    Ok(())
}

/// Offset along the rail from the base station's foot point at frame `k`,
/// sampled mid-frame.
fn rail_offset(sched: &FrameSchedule, cfg: &ScenarioConfig, k: usize) -> f64 {
    (k as f64 - 0.5) * sched.frame_advance - cfg.cell_radius
}

/// Predicted BS-to-surface distance at frame `k` (1-based).
pub fn distance_bs_irs(sched: &FrameSchedule, cfg: &ScenarioConfig, k: usize) -> Result<f64> {
    check_frame(sched, k)?;
    Ok(rail_offset(sched, cfg, k).hypot(cfg.bs_rail_distance))
}

/// Surface and passenger positions during frame `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePositions {
    pub irs: Point3,
    pub users: Vec<Point3>,
}

/// Surface centre during frame `k`.
pub fn irs_position(sched: &FrameSchedule, cfg: &ScenarioConfig, k: usize) -> Result<Point3> {
    check_frame(sched, k)?;
    let start = cfg.irs_initial_position;
    Ok(Point3::new(
        start.x,
        start.y + cfg.bs_position.y + rail_offset(sched, cfg, k),
        start.z,
    ))
}

/// Draws one passenger seat inside the carriage behind the surface at `irs`.
pub fn draw_user(cfg: &ScenarioConfig, irs: Point3, rng: &mut RngStream) -> Point3 {
    let m = cfg.seat_margin;
    let half_len = 0.5 * cfg.carriage_length - m;
    Point3::new(
        rng.uniform_in(irs.x - cfg.carriage_width + m, irs.x - m),
        rng.uniform_in(irs.y - half_len, irs.y + half_len),
        rng.uniform_in(cfg.seat_height - cfg.seat_jitter, cfg.seat_height + cfg.seat_jitter),
    )
}

/// Surface position and `users_per_cluster` passenger positions at frame `k`.
///
/// Passengers sit uniformly inside the carriage box behind the window
/// (`x` in `[irs.x - width, irs.x]`, `y` within half a carriage of the surface).
pub fn positions_at_frame(
    sched: &FrameSchedule,
    cfg: &ScenarioConfig,
    k: usize,
    rng: &mut RngStream,
) -> Result<FramePositions> {
    if !sched.is_served(k) {
        return Err(invalid_input(format!(
            "frame {k} outside the served window {:?}",
            sched.served_frames()
        )));
    }
    let irs = irs_position(sched, cfg, k)?;
    let users = (0..cfg.users_per_cluster).map(|_| draw_user(cfg, irs, rng)).collect();
    Ok(FramePositions { irs, users })
}
