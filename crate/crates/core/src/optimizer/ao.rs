use std::io::Write;

use super::{bb_discrete_search, continuous_phase_opt, optimal_beamformer, BeamVector, Codebook, PhaseVector};
use crate::channel::ChannelRealization;
use crate::error::Result;
use crate::rate::{coupling, gain_sum, rate_from_total};
use crate::scenario::ScenarioConfig;

/// Knobs of the alternating optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct AoSettings {
    /// Stop once consecutive objectives differ by less than this.
    pub tol: f64,
    pub max_iter: usize,
    pub sca_max_iter: usize,
    pub sca_tol: f64,
    pub node_budget: u64,
    pub codebook: Codebook,
    /// Transmit power of the frame, watts.
    pub power: f64,
    /// Weight of the frame rate in the objective (frame duration over window duration).
    pub weight: f64,
}

impl AoSettings {
    /// Equal per-frame power and the `1 / K_serve` frame weight.
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        Ok(Self {
            tol: cfg.ao_tol,
            max_iter: cfg.ao_max_iter,
            sca_max_iter: cfg.sca_max_iter,
            sca_tol: cfg.sca_tol,
            node_budget: cfg.bb_node_budget,
            codebook: Codebook::new(cfg.quant_bits)?,
            power: cfg.avg_power_watts(),
            weight: 1.0 / cfg.served_clusters() as f64,
        })
    }
}

/// One row of the optimization trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoStep {
    pub iteration: usize,
    /// Weighted objective after the iteration.
    pub objective: f64,
    pub bb_nodes: u64,
    pub budget_exceeded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoResult {
    pub beam: BeamVector,
    pub phases: PhaseVector,
    /// Weighted objective `weight * rate`.
    pub objective: f64,
    /// Frame rate in bit/s/Hz at `power`.
    pub rate: f64,
    /// Total effective gain `sum_i g_i` of the final design.
    pub gain: f64,
    /// Rate of the last continuous relaxation, with the final beamformer.
    pub continuous_rate: f64,
    pub iterations: usize,
    /// `trace[0]` is the starting point; one row per iteration after it.
    pub trace: Vec<AoStep>,
    pub converged: bool,
    /// Some branch-and-bound call ran out of nodes.
    pub budget_exceeded: bool,
    /// The effective channel vanished; the beamformer is arbitrary.
    pub degenerate: bool,
}

impl AoResult {
    /// Writes the trace as `iteration,objective,bb_nodes,budget_exceeded`.
    pub fn write_trace(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "iteration,objective,bb_nodes,budget_exceeded")?;
        for s in &self.trace {
            writeln!(
                out,
                "{},{:.8e},{},{}",
                s.iteration, s.objective, s.bb_nodes, s.budget_exceeded
            )?;
        }
        Ok(())
    }
}

/// Alternates beamformer and discrete-phase updates on one frame.
///
/// Starts from all-zero phases and the matching optimal beamformer. Each
/// iteration recomputes the beamformer, relaxes the phases to the unit circle,
/// and snaps them with branch and bound seeded by the better of nearest-level
/// rounding and the current phases, so the objective never decreases.
pub fn alternating_optimize(ch: &ChannelRealization, cfg: &ScenarioConfig) -> Result<AoResult> {
    alternating_optimize_with(ch, &AoSettings::from_config(cfg)?)
}

pub fn alternating_optimize_with(ch: &ChannelRealization, s: &AoSettings) -> Result<AoResult> {
    let score = |gain: f64| s.weight * rate_from_total(gain, s.power, ch.noise_var);

    let mut phases = PhaseVector::zeros(ch.irs_elements(), s.codebook);
    let mut beam_out = optimal_beamformer(phases.coeffs(), ch);
    let mut gain = beam_out.gain;
    let mut objective = score(gain);
    let mut trace = vec![AoStep {
        iteration: 0,
        objective,
        bb_nodes: 0,
        budget_exceeded: false,
    }];
    let mut continuous_gain = gain;
    let mut converged = false;
    let mut budget_exceeded = false;
    let mut iterations = 0;

    while iterations < s.max_iter {
        iterations += 1;
        if iterations > 1 {
            beam_out = optimal_beamformer(phases.coeffs(), ch);
        }
        let c = coupling(ch, beam_out.beam.as_slice());
        let relaxed = continuous_phase_opt(&c, phases.coeffs(), s.sca_max_iter, s.sca_tol);
        continuous_gain = relaxed.gain;
        let phi = relaxed.phases.phases();

        let rounded = PhaseVector::rounded(&phi, s.codebook);
        let seed = if gain_sum(&c, rounded.coeffs()) >= gain_sum(&c, phases.coeffs()) {
            rounded
        } else {
            phases.clone()
        };
        let bb = bb_discrete_search(&phi, s.codebook, &c, &seed, s.node_budget)?;
        budget_exceeded |= bb.budget_exceeded;
        phases = bb.phases;
        gain = bb.gain;

        let next = score(gain);
        let delta = next - objective;
        objective = next;
        trace.push(AoStep {
            iteration: iterations,
            objective,
            bb_nodes: bb.nodes,
            budget_exceeded: bb.budget_exceeded,
        });
        if delta.abs() < s.tol {
            converged = true;
            break;
        }
    }

    Ok(AoResult {
        beam: beam_out.beam,
        rate: rate_from_total(gain, s.power, ch.noise_var),
        continuous_rate: rate_from_total(continuous_gain, s.power, ch.noise_var),
        objective,
        gain,
        phases,
        iterations,
        trace,
        converged,
        budget_exceeded,
        degenerate: beam_out.degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::synthesize_frame;
    use crate::numerics::{cis, ComplexMatrix, RngStream, C64};
    use crate::scenario::{build_schedule, Point3};

    fn small_cfg() -> ScenarioConfig {
        ScenarioConfig {
            irs_elements: 16,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn trace_is_monotone_on_random_frames() {
        let cfg = small_cfg();
        let sched = build_schedule(&cfg).unwrap();
        let k = sched.center_frame();
        for t in 0..20 {
            let ch = synthesize_frame(&cfg, &sched, k, &mut RngStream::for_trial(3, t, k as u64, 0)).unwrap();
            let out = alternating_optimize(&ch, &cfg).unwrap();
            for w in out.trace.windows(2) {
                assert!(w[1].objective >= w[0].objective - 1e-10, "{:?}", out.trace);
            }
            assert!(out.converged);
            assert!(out.objective.is_finite());
            assert!(out.rate <= out.continuous_rate * (1.0 + 1e-9) + 1e-12);
            assert!((out.objective - out.rate * s_weight(&cfg)).abs() < 1e-12);
        }
    }

    fn s_weight(cfg: &ScenarioConfig) -> f64 {
        1.0 / cfg.served_clusters() as f64
    }

    #[test]
    fn scalar_case_reaches_aligned_optimum() {
        let cb = Codebook::new(2).unwrap();
        let g = ComplexMatrix::from_vec(1, 1, vec![cis(0.4) * 2.0]).unwrap();
        let ch = ChannelRealization {
            frame: 1,
            g,
            v: vec![vec![cis(-1.3) * 0.5]],
            direct: vec![vec![C64::new(0.0, 0.0)]],
            noise_var: 0.1,
            irs_position: Point3::new(0.0, 0.0, 1.0),
            user_positions: vec![Point3::new(-1.0, 0.0, 1.0)],
        };
        let s = AoSettings {
            tol: 1e-3,
            max_iter: 50,
            sca_max_iter: 100,
            sca_tol: 1e-12,
            node_budget: 1000,
            codebook: cb,
            power: 1.0,
            weight: 1.0,
        };
        let out = alternating_optimize_with(&ch, &s).unwrap();
        // With a single antenna the beamformer absorbs any phase, so the
        // quantized element loses nothing.
        assert!((out.rate - (1.0f64 + 1.0 / 0.1).log2()).abs() < 1e-12);
    }

    #[test]
    fn trace_csv_shape() {
        let cfg = small_cfg();
        let sched = build_schedule(&cfg).unwrap();
        let k = sched.center_frame();
        let ch = synthesize_frame(&cfg, &sched, k, &mut RngStream::new(1, 1)).unwrap();
        let out = alternating_optimize(&ch, &cfg).unwrap();
        let mut buf = Vec::new();
        out.write_trace(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), out.trace.len() + 1);
        assert!(text.starts_with("iteration,objective,bb_nodes,budget_exceeded\n0,"));
    }
}
