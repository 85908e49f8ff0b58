use super::PhaseVector;
use crate::numerics::{cdot, C64};
use crate::rate::gain_sum;

/// First-order expansion of `sum_i |theta^H c_i|^2` around `theta_s`:
/// `2 Re{sum_i theta_s^H c_i c_i^H theta} - sum_i |theta_s^H c_i|^2`.
///
/// The objective is convex in `theta`, so this tangent plane never exceeds it
/// and touches it at `theta_s`.
pub fn sca_surrogate(theta: &[C64], theta_s: &[C64], c: &[Vec<C64>]) -> f64 {
    c.iter()
        .map(|ci| {
            let at_s = cdot(theta_s, ci);
            let at_theta = cdot(ci, theta);
            2.0 * (at_s * at_theta).re - at_s.norm_sqr()
        })
        .sum()
}

/// Result of the continuous phase step.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaOutcome {
    pub phases: PhaseVector,
    /// `sum_i |theta^H c_i|^2` at the returned phases.
    pub gain: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximizes `sum_i |theta^H c_i|^2` over unit-modulus `theta` by successive
/// linearization.
///
/// Each step maximizes the linear surrogate over the unit disks; the maximizer
/// puts every element on the unit circle along `d = sum_i c_i c_i^H theta_s`.
/// Elements with `d_m = 0` keep their current value. Stops once the relative
/// improvement drops below `tol`.
pub fn continuous_phase_opt(c: &[Vec<C64>], theta_init: &[C64], max_iter: usize, tol: f64) -> ScaOutcome {
    let mut theta = theta_init.to_vec();
    let mut gain = gain_sum(c, &theta);
    let mut iterations = 0;
    let mut converged = false;
    let mut d = vec![C64::new(0.0, 0.0); theta.len()];
    while iterations < max_iter {
        iterations += 1;
        d.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for ci in c {
            let w = cdot(ci, &theta);
            for (dm, cm) in d.iter_mut().zip(ci) {
                *dm += cm * w;
            }
        }
        let next: Vec<C64> = d
            .iter()
            .zip(&theta)
            .map(|(dm, tm)| {
                let r = dm.norm();
                if r > 0.0 {
                    dm / r
                } else {
                    *tm
                }
            })
            .collect();
        let next_gain = gain_sum(c, &next);
        if next_gain < gain {
            // Only rounding can get here; the step is an ascent step.
            converged = true;
            break;
        }
        let improvement = next_gain - gain;
        theta = next;
        gain = next_gain;
        if improvement <= tol * gain.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    let phases = PhaseVector::continuous(&theta.iter().map(|z| z.arg()).collect::<Vec<_>>());
    ScaOutcome {
        gain: gain_sum(c, phases.coeffs()),
        phases,
        iterations,
        converged,
    }
}
