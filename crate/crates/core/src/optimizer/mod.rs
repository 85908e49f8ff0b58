//! Stage one: per-frame joint design of the transmit beamformer and the
//! discrete surface phases.
//!
//! With the phases fixed, the best beamformer is a dominant eigenvector
//! ([`optimal_beamformer`]). With the beamformer fixed, every passenger's gain
//! is a quadratic form `|theta^H c_i|^2` in the phase vector, which is relaxed
//! and improved by successive linearization ([`continuous_phase_opt`]) and then
//! snapped to the codebook by branch and bound ([`bb_discrete_search`]).
//! [`alternating_optimize`] alternates the two until the objective settles.

mod ao;
mod bb;
mod beamformer;
mod sca;

pub use ao::{alternating_optimize, alternating_optimize_with, AoResult, AoSettings, AoStep};
pub use bb::{bb_discrete_search, bb_upper_bound, quantization_bounds, BbOutcome};
pub use beamformer::{effective_channels, eigen_beamformer, optimal_beamformer, BeamOutcome};
pub use sca::{continuous_phase_opt, sca_surrogate, ScaOutcome};

use std::f64::consts::TAU;

use crate::error::{invalid_input, Result};
use crate::numerics::{cis, norm, C64};

/// The `2^bits`-level phase codebook `{2 pi a / (2^bits - 1)}`.
///
/// The first and last levels are both the zero phase (`0` and `2 pi`), exactly
/// as the codebook is defined; with one bit it degenerates to a single point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Codebook {
    bits: u32,
}

impl Codebook {
    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 || bits > 16 {
            return Err(invalid_input(format!(
                "phase resolution must be 1..=16 bits, got {bits}"
            )));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Number of levels, `2^bits`.
    pub fn size(&self) -> u32 {
        1 << self.bits
    }

    /// Spacing between adjacent levels, `2 pi / (2^bits - 1)`.
    pub fn step(&self) -> f64 {
        TAU / (self.size() - 1) as f64
    }

    pub fn phase(&self, level: u32) -> f64 {
        level as f64 * self.step()
    }

    /// `e^{j phase}`; the last level is exactly 1, like level 0.
    pub fn coeff(&self, level: u32) -> C64 {
        if level == self.size() - 1 {
            C64::new(1.0, 0.0)
        } else {
            cis(self.phase(level))
        }
    }

    /// Level nearest to `phase`, which is first wrapped into `[0, 2 pi)`.
    pub fn nearest(&self, phase: f64) -> u32 {
        let idx = (wrap_phase(phase) / self.step()).round() as u32;
        idx.min(self.size() - 1)
    }

    /// The two levels bracketing `phase` (wrapped into `[0, 2 pi)`), lower first.
    pub fn bracket(&self, phase: f64) -> (u32, u32) {
        let lower = ((wrap_phase(phase) / self.step() + 1e-12).floor() as u32).min(self.size() - 2);
        (lower, lower + 1)
    }
}

/// Wraps a phase into `[0, 2 pi)`.
pub fn wrap_phase(phase: f64) -> f64 {
    let p = phase.rem_euclid(TAU);
    if p >= TAU {
        0.0
    } else {
        p
    }
}

/// Surface coefficients, either free (the relaxation used by the continuous
/// step) or drawn from a codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    coeffs: Vec<C64>,
    levels: Option<(Codebook, Vec<u32>)>,
}

impl PhaseVector {
    /// Unit-modulus coefficients with the given phases.
    pub fn continuous(phases: &[f64]) -> Self {
        Self {
            coeffs: phases.iter().map(|&p| cis(p)).collect(),
            levels: None,
        }
    }

    /// Free coefficients with `|theta_m| <= 1`.
    pub fn relaxed(coeffs: Vec<C64>) -> Result<Self> {
        if let Some(m) = coeffs.iter().position(|z| !(z.norm() <= 1.0 + 1e-12)) {
            return Err(invalid_input(format!(
                "coefficient {m} has modulus {} > 1",
                coeffs[m].norm()
            )));
        }
        Ok(Self { coeffs, levels: None })
    }

    pub fn discrete(levels: Vec<u32>, codebook: Codebook) -> Result<Self> {
        if let Some(m) = levels.iter().position(|&a| a >= codebook.size()) {
            return Err(invalid_input(format!(
                "level {} of element {m} is outside the {}-level codebook",
                levels[m],
                codebook.size()
            )));
        }
        Ok(Self {
            coeffs: levels.iter().map(|&a| codebook.coeff(a)).collect(),
            levels: Some((codebook, levels)),
        })
    }

    /// All elements at level 0 (no phase shift).
    pub fn zeros(elements: usize, codebook: Codebook) -> Self {
        Self::discrete(vec![0; elements], codebook).expect("level 0 is always valid")
    }

    /// Nearest-level rounding of `phases`.
    pub fn rounded(phases: &[f64], codebook: Codebook) -> Self {
        let levels = phases.iter().map(|&p| codebook.nearest(p)).collect();
        Self::discrete(levels, codebook).expect("rounded levels are in range")
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Phases in `[0, 2 pi)`.
    pub fn phases(&self) -> Vec<f64> {
        self.coeffs.iter().map(|z| wrap_phase(z.arg())).collect()
    }

    /// Codebook levels, for discrete vectors.
    pub fn levels(&self) -> Option<&[u32]> {
        self.levels.as_ref().map(|(_, l)| l.as_slice())
    }

    pub fn codebook(&self) -> Option<Codebook> {
        self.levels.as_ref().map(|(c, _)| *c)
    }

    pub fn is_discrete(&self) -> bool {
        self.levels.is_some()
    }
}

/// Transmit beamformer, unit norm unless built from a zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamVector {
    coeffs: Vec<C64>,
}

impl BeamVector {
    /// Normalizes `coeffs` to unit norm; falls back to the first unit vector
    /// when `coeffs` is zero.
    pub fn unit(mut coeffs: Vec<C64>) -> Self {
        let n = norm(&coeffs);
        if n > 0.0 && n.is_finite() {
            coeffs.iter_mut().for_each(|z| *z /= n);
        } else {
            coeffs.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            if let Some(first) = coeffs.first_mut() {
                *first = C64::new(1.0, 0.0);
            }
        }
        Self { coeffs }
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coeffs)
    }
}
