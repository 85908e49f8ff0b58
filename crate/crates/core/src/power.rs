//! Stage two: sharing the power budget of a window of frames.
//!
//! Given each frame's total effective gain over noise `Gamma_k`, the window
//! problem `max sum_k log2(1 + P_k Gamma_k)` subject to `sum_k P_k = l P_bar`
//! and `0 <= P_k <= l P_bar` is a water-filling program. [`allocate_window`]
//! runs the Lagrangian multiplier iteration on it and finishes with a
//! Euclidean projection onto the budget simplex; [`waterfill_oracle`] solves
//! the same program independently by bisection on the water level.
//!
//! The multiplier iteration works in units of `P_bar`: powers `x_k = P_k / P_bar`
//! and per-frame SNRs `s_k = Gamma_k P_bar`, so the budget is `l` and the
//! multiplier initial values are dimensionless.

use std::f64::consts::LN_2;
use std::io::Write;

use crate::error::{invalid_input, Result};
use crate::scenario::ScenarioConfig;

/// Iteration settings of the multiplier method.
#[derive(Debug, Clone, PartialEq)]
pub struct PaSettings {
    pub max_iter: usize,
    pub tol: f64,
    pub mu0: f64,
    pub mu_step: f64,
    pub lambda0: f64,
    pub beta0: f64,
    pub lambda_step: f64,
    pub beta_step: f64,
    /// Clip `lambda` and `beta` at zero after each update.
    pub project_duals: bool,
}

impl Default for PaSettings {
    fn default() -> Self {
        Self::from_config(&ScenarioConfig::default())
    }
}

impl PaSettings {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            max_iter: cfg.pa_max_iter,
            tol: cfg.pa_tol,
            mu0: cfg.pa_mu0,
            mu_step: cfg.pa_mu_step,
            lambda0: cfg.pa_lambda0,
            beta0: cfg.pa_beta0,
            lambda_step: cfg.pa_lambda_step,
            beta_step: cfg.pa_beta_step,
            project_duals: cfg.pa_project_duals,
        }
    }
}

/// Lagrange multipliers with their step sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierState {
    /// Multipliers of `x_k >= 0`.
    pub lambda: Vec<f64>,
    /// Multipliers of `x_k <= l`.
    pub beta: Vec<f64>,
    /// Multiplier of the budget `sum_k x_k = l`.
    pub mu: f64,
    pub lambda_step: Vec<f64>,
    pub beta_step: Vec<f64>,
    pub mu_step: f64,
}

impl MultiplierState {
    pub fn initial(frames: usize, s: &PaSettings) -> Self {
        Self {
            lambda: vec![s.lambda0; frames],
            beta: vec![s.beta0; frames],
            mu: s.mu0,
            lambda_step: vec![s.lambda_step; frames],
            beta_step: vec![s.beta_step; frames],
            mu_step: s.mu_step,
        }
    }
}

/// Stationary-point powers `x_k = 1 / (ln2 (beta_k - lambda_k - mu)) - 1 / s_k`,
/// clipped to `[0, cap]`.
///
/// A non-positive denominator means an unbounded water level, so the frame
/// gets `cap`. Frames with `s_k = 0` get nothing.
pub fn kkt_power(mult: &MultiplierState, snr: &[f64], cap: f64) -> Vec<f64> {
    snr.iter()
        .enumerate()
        .map(|(k, &s)| {
            if s <= 0.0 {
                return 0.0;
            }
            let denom = mult.beta[k] - mult.lambda[k] - mult.mu;
            if denom <= 0.0 {
                cap
            } else {
                (1.0 / (LN_2 * denom) - 1.0 / s).clamp(0.0, cap)
            }
        })
        .collect()
}

/// One subgradient step on the multipliers for powers `x` and budget `l`.
///
/// Any step size above one is halved for the next iteration.
pub fn update_multipliers(mult: &MultiplierState, x: &[f64], budget: f64, project: bool) -> MultiplierState {
    let clip = |v: f64| if project { v.max(0.0) } else { v };
    let halve = |step: f64| if step > 1.0 { step / 2.0 } else { step };
    let total: f64 = x.iter().sum();
    MultiplierState {
        lambda: mult
            .lambda
            .iter()
            .zip(&mult.lambda_step)
            .zip(x)
            .map(|((l, c), p)| clip(l - c * p))
            .collect(),
        beta: mult
            .beta
            .iter()
            .zip(&mult.beta_step)
            .zip(x)
            .map(|((b, d), p)| clip(b - d * (budget - p)))
            .collect(),
        mu: mult.mu - mult.mu_step * (total - budget),
        lambda_step: mult.lambda_step.iter().map(|&c| halve(c)).collect(),
        beta_step: mult.beta_step.iter().map(|&d| halve(d)).collect(),
        mu_step: halve(mult.mu_step),
    }
}

/// Euclidean projection of `y` onto `{x >= 0, sum x = total}`; entries that
/// are `-inf` stay at zero.
pub fn project_simplex(y: &[f64], total: f64) -> Vec<f64> {
    let mut sorted: Vec<f64> = y.iter().copied().filter(|v| v.is_finite()).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - total) / (j + 1) as f64;
        if u - candidate > 0.0 {
            shift = candidate;
        }
    }
    y.iter()
        .map(|&v| if v.is_finite() { (v - shift).max(0.0) } else { 0.0 })
        .collect()
}

/// One row of the multiplier trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaStep {
    pub iteration: usize,
    pub mu: f64,
    pub max_dlambda: f64,
    pub max_dbeta: f64,
    /// `sum_k log2(1 + x_k s_k)` at the clipped stationary powers.
    pub objective: f64,
}

/// Allocated powers of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerWindow {
    /// Index of the first frame of the window within the served window.
    pub start: usize,
    /// Per-frame average power, watts.
    pub avg_power: f64,
    /// Aggregate gain over noise `Gamma_k`, 1/watts.
    pub gains: Vec<f64>,
    /// Final powers, watts, summing to `len * avg_power`.
    pub powers: Vec<f64>,
    /// Clipped stationary powers of the last iterate, before projection.
    pub raw_powers: Vec<f64>,
    pub multipliers: MultiplierState,
    pub iterations: usize,
    pub converged: bool,
    /// Frames with zero gain, which receive no power.
    pub dead_frames: Vec<usize>,
    /// Every frame had zero gain; the budget is split equally.
    pub all_dead: bool,
    pub trace: Vec<PaStep>,
}

impl PowerWindow {
    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }

    /// `sum_k log2(1 + P_k Gamma_k)` at the final powers.
    pub fn sum_rate(&self) -> f64 {
        sum_rate(&self.powers, &self.gains)
    }

    /// The same at the pre-projection powers.
    pub fn raw_sum_rate(&self) -> f64 {
        sum_rate(&self.raw_powers, &self.gains)
    }

    /// Writes the trace as `iteration,mu,max_dlambda,max_dbeta,objective`.
    pub fn write_trace(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "iteration,mu,max_dlambda,max_dbeta,objective")?;
        for s in &self.trace {
            writeln!(
                out,
                "{},{:.8e},{:.8e},{:.8e},{:.8e}",
                s.iteration, s.mu, s.max_dlambda, s.max_dbeta, s.objective
            )?;
        }
        Ok(())
    }
}

fn sum_rate(powers: &[f64], gains: &[f64]) -> f64 {
    powers.iter().zip(gains).map(|(p, g)| (p * g).ln_1p() / LN_2).sum()
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Splits `gains.len() * avg_power` watts across the frames of one window.
pub fn allocate_window(gains: &[f64], avg_power: f64, settings: &PaSettings) -> Result<PowerWindow> {
    if gains.is_empty() {
        return Err(invalid_input("an allocation window needs at least one frame"));
    }
    if !(avg_power > 0.0 && avg_power.is_finite()) {
        return Err(invalid_input(format!(
            "average power must be positive, got {avg_power}"
        )));
    }
    if let Some(g) = gains.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
        return Err(invalid_input(format!(
            "frame gains must be finite and non-negative, got {g}"
        )));
    }
    let frames = gains.len();
    let budget = frames as f64;
    let snr: Vec<f64> = gains.iter().map(|g| g * avg_power).collect();
    let dead_frames: Vec<usize> = (0..frames).filter(|&k| snr[k] == 0.0).collect();
    let objective = |x: &[f64]| sum_rate(x, &snr);

    if dead_frames.len() == frames {
        let equal = vec![avg_power; frames];
        return Ok(PowerWindow {
            start: 0,
            avg_power,
            gains: gains.to_vec(),
            powers: equal.clone(),
            raw_powers: equal,
            multipliers: MultiplierState::initial(frames, settings),
            iterations: 0,
            converged: true,
            dead_frames,
            all_dead: true,
            trace: Vec::new(),
        });
    }

    let mut mult = MultiplierState::initial(frames, settings);
    let mut x = kkt_power(&mult, &snr, budget);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < settings.max_iter {
        iterations += 1;
        let next = update_multipliers(&mult, &x, budget, settings.project_duals);
        let dl = max_change(&next.lambda, &mult.lambda);
        let db = max_change(&next.beta, &mult.beta);
        let dm = (next.mu - mult.mu).abs();
        mult = next;
        x = kkt_power(&mult, &snr, budget);
        trace.push(PaStep {
            iteration: iterations,
            mu: mult.mu,
            max_dlambda: dl,
            max_dbeta: db,
            objective: objective(&x),
        });
        if dl.max(db).max(dm) < settings.tol {
            converged = true;
            break;
        }
    }

    // Unclipped stationary powers; a common undefined water level drops out of
    // the projection, which is invariant to a common shift.
    let unclipped: Vec<f64> = (0..frames)
        .map(|k| {
            if snr[k] == 0.0 {
                return f64::NEG_INFINITY;
            }
            let denom = mult.beta[k] - mult.lambda[k] - mult.mu;
            let level = if denom > 0.0 { 1.0 / (LN_2 * denom) } else { 0.0 };
            level - 1.0 / snr[k]
        })
        .collect();
    let projected = project_simplex(&unclipped, budget);

    Ok(PowerWindow {
        start: 0,
        avg_power,
        gains: gains.to_vec(),
        powers: projected.iter().map(|p| p * avg_power).collect(),
        raw_powers: x.iter().map(|p| p * avg_power).collect(),
        multipliers: mult,
        iterations,
        converged,
        dead_frames,
        all_dead: false,
        trace,
    })
}

/// Allocates power over consecutive windows of `window` frames; a shorter
/// final window gets a proportionally smaller budget.
pub fn allocate_all(gains: &[f64], window: usize, avg_power: f64, settings: &PaSettings) -> Result<Vec<PowerWindow>> {
    if window == 0 {
        return Err(invalid_input("window length must be at least one frame"));
    }
    gains
        .chunks(window)
        .enumerate()
        .map(|(i, chunk)| {
            let mut w = allocate_window(chunk, avg_power, settings)?;
            w.start = i * window;
            Ok(w)
        })
        .collect()
}

/// Water-filling by bisection on the water level `1 / (ln2 nu)`.
///
/// Returns `p_k = max(0, level - 1 / Gamma_k)` with `sum p_k = budget`.
pub fn waterfill_oracle(gains: &[f64], budget: f64) -> Vec<f64> {
    let inv: Vec<Option<f64>> = gains
        .iter()
        .map(|&g| if g > 0.0 { Some(1.0 / g) } else { None })
        .collect();
    let Some(floor) = inv.iter().flatten().copied().reduce(f64::min) else {
        return vec![budget / gains.len() as f64; gains.len()];
    };
    let fill = |level: f64| -> f64 { inv.iter().flatten().map(|&i| (level - i).max(0.0)).sum() };
    let (mut lo, mut hi) = (floor, floor + budget);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if fill(mid) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let level = 0.5 * (lo + hi);
    inv.iter()
        .map(|i| i.map_or(0.0, |i| (level - i).clamp(0.0, budget)))
        .collect()
}

/// Duration-weighted window throughput `sum_k (tau / t) log2(1 + P_k Gamma_k)`.
pub fn window_throughput(powers: &[f64], gains: &[f64], frame_duration: f64, horizon: f64) -> f64 {
    frame_duration / horizon * sum_rate(powers, gains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs())
    }

    #[test]
    fn kkt_examples() {
        let s = PaSettings::default();
        let mut m = MultiplierState::initial(1, &s);
        m.mu = -1.0 / LN_2;
        assert!(kkt_power(&m, &[1.0], 10.0)[0].abs() < 1e-15);
        assert!(rel_close(kkt_power(&m, &[1e300], 10.0)[0], 1.0, 1e-12));
        let m3 = MultiplierState::initial(3, &s);
        let p = kkt_power(&MultiplierState { mu: -0.2, ..m3 }, &[2.0, 2.0, 2.0], 3.0);
        assert!(p[0] == p[1] && p[1] == p[2]);
        let dead = kkt_power(&MultiplierState::initial(2, &s), &[0.0, 1.0], 2.0);
        assert_eq!(dead, vec![0.0, 2.0]);
    }

    #[test]
    fn multiplier_update_by_hand() {
        let s = PaSettings::default();
        let m = MultiplierState::initial(2, &s);
        // Every denominator starts at -50, so both frames take the cap l = 2.
        let x = kkt_power(&m, &[1.0, 4.0], 2.0);
        assert_eq!(x, vec![2.0, 2.0]);
        let next = update_multipliers(&m, &x, 2.0, true);
        assert_eq!(next.mu, 50.0 - 10.0 * (4.0 - 2.0));
        assert_eq!(next.mu_step, 5.0);
        assert_eq!(next.lambda, vec![0.0, 0.0]);
        assert_eq!(next.beta, vec![0.0, 0.0]);
        assert_eq!(next.lambda_step, vec![1.0, 1.0]);
        let raw = update_multipliers(&m, &x, 2.0, false);
        assert_eq!(raw.lambda, vec![-2.0, -2.0]);

        let balanced = update_multipliers(&next, &[1.5, 0.5], 2.0, true);
        assert_eq!(balanced.mu, next.mu);
        let zero = update_multipliers(&m, &[0.0, 2.0], 2.0, false);
        assert_eq!(zero.lambda[0], m.lambda[0]);
    }

    #[test]
    fn simplex_projection() {
        assert_eq!(project_simplex(&[0.5, 0.5], 1.0), vec![0.5, 0.5]);
        assert_eq!(project_simplex(&[3.0, 0.0], 1.0), vec![1.0, 0.0]);
        let p = project_simplex(&[f64::NEG_INFINITY, -1.0, -2.0], 2.0);
        assert_eq!(p, vec![0.0, 1.5, 0.5]);
    }

    #[test]
    fn oracle_hand_example() {
        let p = waterfill_oracle(&[4.0, 1.0], 1.0);
        assert!((p[0] - 0.875).abs() < 1e-12 && (p[1] - 0.125).abs() < 1e-12);
        assert!((p[0] + 0.25 - (p[1] + 1.0)).abs() < 1e-12);
        assert!((waterfill_oracle(&[3.0], 2.0)[0] - 2.0).abs() < 1e-12);
        let eq = waterfill_oracle(&[2.0; 4], 4.0);
        assert!(eq.iter().all(|p| (p - 1.0).abs() < 1e-12));
    }

    #[test]
    fn window_examples() {
        let s = PaSettings::default();
        let w = allocate_window(&[5.0; 4], 0.1, &s).unwrap();
        assert!(w.powers.iter().all(|p| rel_close(*p, 0.1, 1e-12)));
        let w = allocate_window(&[7.0], 0.1, &s).unwrap();
        assert!(rel_close(w.powers[0], 0.1, 1e-12));

        let w = allocate_window(&[10.0, 1.0], 1.0, &s).unwrap();
        let oracle = waterfill_oracle(&[10.0, 1.0], 2.0);
        for (a, b) in w.powers.iter().zip(&oracle) {
            assert!(rel_close(*a, *b, 1e-4));
        }
        assert!(oracle.iter().all(|p| *p > 0.0));

        let dead = allocate_window(&[0.0, 0.0], 1.0, &s).unwrap();
        assert!(dead.all_dead);
        assert_eq!(dead.powers, vec![1.0, 1.0]);
        assert!(allocate_window(&[], 1.0, &s).is_err());
        assert!(allocate_window(&[-1.0], 1.0, &s).is_err());
    }

    #[test]
    fn random_windows_agree_with_oracle() {
        let s = PaSettings::default();
        let mut rng = RngStream::new(17, 0);
        for _ in 0..500 {
            let l = 2 + rng.below(9) as usize;
            let gains: Vec<f64> = (0..l).map(|_| 10f64.powf(rng.uniform_in(-3.0, 3.0))).collect();
            let avg = 10f64.powf(rng.uniform_in(-2.0, 1.0));
            let w = allocate_window(&gains, avg, &s).unwrap();
            let oracle = waterfill_oracle(&gains, l as f64 * avg);
            let total: f64 = w.powers.iter().sum();
            assert!(rel_close(total, l as f64 * avg, 1e-6));
            assert!((w.sum_rate() - sum_rate(&oracle, &gains)).abs() <= 1e-8);
            let equal = sum_rate(&vec![avg; l], &gains);
            assert!(w.sum_rate() >= equal - 1e-9);
            for k in 0..l {
                if w.powers[k] > 0.0 {
                    assert!(w.multipliers.lambda[k].abs() <= 1e-3);
                }
                assert!(w.powers[k] <= l as f64 * avg * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn partial_final_window() {
        let s = PaSettings::default();
        let gains: Vec<f64> = (1..=23).map(|k| k as f64).collect();
        let windows = allocate_all(&gains, 10, 0.1, &s).unwrap();
        assert_eq!(
            windows.iter().map(PowerWindow::len).collect::<Vec<_>>(),
            vec![10, 10, 3]
        );
        assert_eq!(windows[2].start, 20);
        let last: f64 = windows[2].powers.iter().sum();
        assert!(rel_close(last, 0.3, 1e-12));
    }

    #[test]
    fn throughput_examples() {
        assert_eq!(window_throughput(&[0.0, 0.0], &[1.0, 2.0], 1.0, 1.0), 0.0);
        assert_eq!(window_throughput(&[3.0], &[1.0], 1.0, 1.0), 2.0);
        let mut rng = RngStream::new(18, 0);
        for _ in 0..100 {
            let g: Vec<f64> = (0..5).map(|_| rng.uniform_in(0.1, 10.0)).collect();
            let a = project_simplex(&(0..5).map(|_| rng.uniform()).collect::<Vec<_>>(), 5.0);
            let b = project_simplex(&(0..5).map(|_| rng.uniform()).collect::<Vec<_>>(), 5.0);
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let f = |p: &[f64]| window_throughput(p, &g, 0.036, 0.828);
            assert!(f(&mid) >= 0.5 * (f(&a) + f(&b)) - 1e-15);
        }
    }
}
