//! Effective gains and NOMA rates of one frame.
//!
//! Every passenger of a frame receives the same superposed signal at power `P`,
//! so with SIC the per-user rates telescope: the frame rate depends only on the
//! total effective gain, `log2(1 + P * sum(g) / sigma^2)`.

use crate::channel::ChannelRealization;
use crate::error::{invalid_input, Result};
use crate::numerics::{cdot, ComplexMatrix, C64};

/// Per-passenger effective gains with their decoding order.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveGains {
    pub g: Vec<f64>,
    /// `order[0]` is decoded first.
    pub order: Vec<usize>,
}

impl EffectiveGains {
    pub fn new(g: Vec<f64>) -> Self {
        let order = sic_order(&g);
        Self { g, order }
    }

    pub fn total(&self) -> f64 {
        self.g.iter().sum()
    }
}

/// Strongest first; equal gains keep index order.
pub fn sic_order(g: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|&a, &b| g[b].total_cmp(&g[a]).then(a.cmp(&b)));
    order
}

/// `|v^H diag(theta) G f|^2` by direct evaluation.
pub fn effective_gain(v: &[C64], theta: &[C64], g: &ComplexMatrix, f: &[C64]) -> Result<f64> {
    if v.len() != g.rows() || theta.len() != g.rows() || f.len() != g.cols() {
        return Err(invalid_input(format!(
            "dimension mismatch: v {}, theta {}, G {}x{}, f {}",
            v.len(),
            theta.len(),
            g.rows(),
            g.cols(),
            f.len()
        )));
    }
    let gf = g.mul_vec(f);
    let s: C64 = v
        .iter()
        .zip(theta)
        .zip(&gf)
        .map(|((vm, tm), x)| vm.conj() * tm * x)
        .sum();
    Ok(s.norm_sqr())
}

/// Per-element coupling vectors for a fixed beamformer.
///
/// `c[i][m] = v_i[m] * conj((G f)[m])`, so that the effective gain of passenger
/// `i` is `|theta^H c_i|^2` and every phase design problem becomes a quadratic
/// form in `theta`.
pub fn coupling(ch: &ChannelRealization, f: &[C64]) -> Vec<Vec<C64>> {
    let gf = ch.g.mul_vec(f);
    ch.v.iter()
        .map(|v| v.iter().zip(&gf).map(|(a, b)| a * b.conj()).collect())
        .collect()
}

/// `sum_i |theta^H c_i|^2`, evaluated in element order.
pub fn gain_sum(c: &[Vec<C64>], theta: &[C64]) -> f64 {
    c.iter().map(|ci| cdot(theta, ci).norm_sqr()).sum()
}

pub fn gains_from_coupling(c: &[Vec<C64>], theta: &[C64]) -> EffectiveGains {
    EffectiveGains::new(c.iter().map(|ci| cdot(theta, ci).norm_sqr()).collect())
}

/// Effective gains of every passenger in `ch` under `(theta, f)`.
pub fn frame_gains(ch: &ChannelRealization, theta: &[C64], f: &[C64]) -> EffectiveGains {
    gains_from_coupling(&coupling(ch, f), theta)
}

/// SINR of the passenger decoded at position `i` of the SIC order.
pub fn sinr(i: usize, gains: &EffectiveGains, power: f64, noise_var: f64) -> f64 {
    let own = gains.g[gains.order[i]];
    let interference: f64 = gains.order[i + 1..].iter().map(|&j| gains.g[j]).sum();
    power * own / (power * interference + noise_var)
}

/// Sum of the per-user SIC rates, `sum_i log2(1 + sinr_i)`.
pub fn sic_sum_rate(gains: &EffectiveGains, power: f64, noise_var: f64) -> f64 {
    (0..gains.g.len())
        .map(|i| (1.0 + sinr(i, gains, power, noise_var)).log2())
        .sum()
}

/// Frame rate `log2(1 + P * sum(g) / sigma^2)` in bit/s/Hz.
pub fn aggregate_rate(gains: &EffectiveGains, power: f64, noise_var: f64) -> f64 {
    rate_from_total(gains.total(), power, noise_var)
}

#[inline]
pub fn rate_from_total(total_gain: f64, power: f64, noise_var: f64) -> f64 {
    (power * total_gain / noise_var).ln_1p() / std::f64::consts::LN_2
}
