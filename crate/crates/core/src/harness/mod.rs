//! Monte-Carlo experiments, parameter sweeps and their CSV artifacts.
//!
//! Every trial draws one channel realization per frame from the stream
//! `(seed, trial, frame, CHANNEL)`; all schemes in the trial see that same
//! realization. Randomized schemes draw from their own purpose streams, so
//! adding or removing a scheme never perturbs the others.

mod csv;
mod sweep;

pub use csv::{emit_csv, format_sig9, parse_csv, write_csv, HEADER as CSV_HEADER};
pub use sweep::{run_sweep, Axis, Metric, SweepError, SweepResult, SweepRow, SweepSpec};

use std::fmt;
use std::str::FromStr;

use crate::baselines::{nce_optimize, no_irs_design, rps_optimize, sr_optimize, CeParams};
use crate::channel::{synthesize_frame, ChannelRealization};
use crate::error::{invalid_input, Result};
use crate::numerics::RngStream;
use crate::optimizer::{alternating_optimize_with, AoResult, AoSettings};
use crate::power::{allocate_all, window_throughput, PaSettings, PowerWindow};
use crate::rate::rate_from_total;
use crate::scenario::{build_schedule, ScenarioConfig};

/// Stream purposes within a `(trial, frame)` pair.
pub const PURPOSE_CHANNEL: u8 = 0;
pub const PURPOSE_RPS: u8 = 1;
pub const PURPOSE_NCE: u8 = 2;

/// Phase and beam design schemes under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Alternating optimization, with power allocation in throughput runs.
    Proposed,
    /// Alternating optimization with equal power in every frame.
    ProposedNoPa,
    Nce,
    Sr,
    Rps,
    NoIrs,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Proposed,
        Scheme::ProposedNoPa,
        Scheme::Nce,
        Scheme::Sr,
        Scheme::Rps,
        Scheme::NoIrs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::ProposedNoPa => "proposed_no_pa",
            Scheme::Nce => "nce",
            Scheme::Sr => "sr",
            Scheme::Rps => "rps",
            Scheme::NoIrs => "no_irs",
        }
    }

    /// Whether power allocation applies to this scheme in throughput runs.
    pub fn allocates_power(self) -> bool {
        self != Scheme::ProposedNoPa
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL.into_iter().find(|x| x.name() == s.trim()).ok_or_else(|| {
            let names: Vec<_> = Scheme::ALL.iter().map(|x| x.name()).collect();
            invalid_input(format!("unknown scheme '{s}' (expected one of {})", names.join(", ")))
        })
    }
}

/// Parses a comma-separated scheme list, keeping the given order and
/// dropping repeats.
pub fn parse_schemes(list: &str) -> Result<Vec<Scheme>> {
    let mut out = Vec::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        let s: Scheme = part.parse()?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    if out.is_empty() {
        return Err(invalid_input("at least one scheme is required"));
    }
    Ok(out)
}

/// One scheme's design for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub scheme: Scheme,
    /// Total effective gain `sum_i g_i`.
    pub gain: f64,
    /// Frame rate at equal power, bit/s/Hz.
    pub rate: f64,
    /// The alternating optimization result, for the proposed schemes.
    pub ao: Option<AoResult>,
}

/// Runs every scheme on one channel realization.
pub fn design_frame(
    ch: &ChannelRealization,
    cfg: &ScenarioConfig,
    schemes: &[Scheme],
    seed: u64,
    trial: u64,
) -> Result<Vec<FrameOutcome>> {
    let k = ch.frame as u64;
    let power = cfg.avg_power_watts();
    let mut ao: Option<AoResult> = None;
    let mut out = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        let (gain, ao_result) = match scheme {
            Scheme::Proposed | Scheme::ProposedNoPa => {
                if ao.is_none() {
                    ao = Some(alternating_optimize_with(ch, &AoSettings::from_config(cfg)?)?);
                }
                let r = ao.clone().expect("just computed");
                (r.gain, Some(r))
            }
            Scheme::Nce => {
                let mut rng = RngStream::for_trial(seed, trial, k, PURPOSE_NCE);
                (
                    nce_optimize(ch, cfg, &CeParams::from_config(cfg), &mut rng)?
                        .design
                        .gain,
                    None,
                )
            }
            Scheme::Sr => (sr_optimize(ch, cfg)?.design.gain, None),
            Scheme::Rps => {
                let mut rng = RngStream::for_trial(seed, trial, k, PURPOSE_RPS);
                (rps_optimize(ch, cfg, &mut rng)?.gain, None)
            }
            Scheme::NoIrs => (no_irs_design(ch, cfg).1, None),
        };
        out.push(FrameOutcome {
            scheme,
            gain,
            rate: rate_from_total(gain, power, ch.noise_var),
            ao: ao_result,
        });
    }
    Ok(out)
}

/// The frame used by single-frame experiments: `cfg.frame`, or the centre
/// of the served window.
pub fn experiment_frame(cfg: &ScenarioConfig) -> Result<usize> {
    let sched = build_schedule(cfg)?;
    let k = cfg.frame.unwrap_or_else(|| sched.center_frame());
    if !sched.is_served(k) {
        return Err(invalid_input(format!(
            "frame {k} is outside the served window {}..={}",
            sched.served_frames().start(),
            sched.served_frames().end()
        )));
    }
    Ok(k)
}

/// Draws the channel of frame `k` for `trial`.
pub fn trial_channel(cfg: &ScenarioConfig, k: usize, seed: u64, trial: u64) -> Result<ChannelRealization> {
    let sched = build_schedule(cfg)?;
    synthesize_frame(
        cfg,
        &sched,
        k,
        &mut RngStream::for_trial(seed, trial, k as u64, PURPOSE_CHANNEL),
    )
}

/// Per-scheme frame designs of one trial at the experiment frame.
pub fn run_frame_experiment(
    cfg: &ScenarioConfig,
    schemes: &[Scheme],
    seed: u64,
    trial: u64,
) -> Result<Vec<FrameOutcome>> {
    let k = experiment_frame(cfg)?;
    let ch = trial_channel(cfg, k, seed, trial)?;
    design_frame(&ch, cfg, schemes, seed, trial)
}

/// One scheme's throughput over the served window.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputOutcome {
    pub scheme: Scheme,
    /// Per-frame aggregate gain over noise, `Gamma_k`, 1/watts.
    pub frame_gains: Vec<f64>,
    /// `sum_k (tau / t) log2(1 + P_bar Gamma_k)`.
    pub equal_split: f64,
    /// The same with per-window power allocation, when it was run.
    pub allocated: Option<f64>,
    pub windows: Vec<PowerWindow>,
}

impl ThroughputOutcome {
    /// The scheme's reported throughput: allocated where it applies.
    pub fn throughput(&self) -> f64 {
        match self.allocated {
            Some(a) if self.scheme.allocates_power() => a,
            _ => self.equal_split,
        }
    }
}

/// Designs every served frame of one trial and evaluates the window
/// throughput, optionally with per-window power allocation.
pub fn run_throughput_experiment(
    cfg: &ScenarioConfig,
    schemes: &[Scheme],
    with_power_allocation: bool,
    seed: u64,
    trial: u64,
) -> Result<Vec<ThroughputOutcome>> {
    let sched = build_schedule(cfg)?;
    let noise = cfg.noise_watts();
    let mut gains = vec![Vec::with_capacity(sched.served_clusters); schemes.len()];
    for k in sched.served_frames() {
        let ch = synthesize_frame(
            cfg,
            &sched,
            k,
            &mut RngStream::for_trial(seed, trial, k as u64, PURPOSE_CHANNEL),
        )?;
        for (slot, design) in gains.iter_mut().zip(design_frame(&ch, cfg, schemes, seed, trial)?) {
            slot.push(design.gain / noise);
        }
    }
    let tau = cfg.frame_duration;
    let horizon = sched.window_duration(tau);
    let avg = cfg.avg_power_watts();
    let pa = PaSettings::from_config(cfg);
    schemes
        .iter()
        .zip(gains)
        .map(|(&scheme, frame_gains)| {
            let equal = window_throughput(&vec![avg; frame_gains.len()], &frame_gains, tau, horizon);
            let (allocated, windows) = if with_power_allocation && scheme.allocates_power() {
                let windows = allocate_all(&frame_gains, cfg.alloc_window, avg, &pa)?;
                let total = windows
                    .iter()
                    .map(|w| window_throughput(&w.powers, &w.gains, tau, horizon))
                    .sum();
                (Some(total), windows)
            } else {
                (None, Vec::new())
            };
            Ok(ThroughputOutcome {
                scheme,
                frame_gains,
                equal_split: equal,
                allocated,
                windows,
            })
        })
        .collect()
}
