use std::f64::consts::{PI, TAU};

use super::{wrap_phase, Codebook, PhaseVector};
use crate::error::{invalid_input, Result};
use crate::numerics::{cis, C64};
use crate::rate::gain_sum;

/// Directions used by the support-function bound.
const DIRECTIONS: usize = 64;
/// Relative inflation applied to every bound before a pruning test, covering
/// rounding in the incrementally accumulated partial sums.
const BOUND_SLACK: f64 = 1e-10;

/// For each element, the lower and upper codebook phases around `phases[m]`.
pub fn quantization_bounds(phases: &[f64], codebook: Codebook) -> Vec<(f64, f64)> {
    phases
        .iter()
        .map(|&p| {
            let (lo, hi) = codebook.bracket(p);
            (codebook.phase(lo), codebook.phase(hi))
        })
        .collect()
}

/// Upper bound on `sum_i |theta^H c_i|^2` over all completions of a partial
/// assignment (`None` = undecided, any unit-modulus value).
///
/// Per passenger, `|theta^H c_i| <= |sum_fixed conj(theta_j) c_ij| + sum_free |c_ij|`.
pub fn bb_upper_bound(c: &[Vec<C64>], fixed: &[Option<C64>]) -> f64 {
    c.iter()
        .map(|ci| {
            let mut partial = C64::new(0.0, 0.0);
            let mut tail = 0.0;
            for (cij, t) in ci.iter().zip(fixed) {
                match t {
                    Some(t) => partial += t.conj() * cij,
                    None => tail += cij.norm(),
                }
            }
            (partial.norm() + tail).powi(2)
        })
        .sum()
}

/// Result of the discrete search.
#[derive(Debug, Clone, PartialEq)]
pub struct BbOutcome {
    pub phases: PhaseVector,
    /// `sum_i |theta^H c_i|^2` at `phases`.
    pub gain: f64,
    /// Tree nodes visited, root included.
    pub nodes: u64,
    /// The node budget ran out; `phases` is the best assignment found so far.
    pub budget_exceeded: bool,
}

/// Depth-first branch and bound over the two codebook levels bracketing each
/// continuous phase `phi[m]`, maximizing `sum_i |theta^H c_i|^2`.
///
/// `seed` is the initial incumbent and need not lie in the bracketed set; the
/// result is never worse than it. Elements are branched in order of decreasing
/// total coupling `sum_i |c_im|`, nearer level first. A node is pruned when its
/// upper bound, the smaller of the per-passenger triangle bound and a
/// support-function bound over the remaining bracketed choices, cannot beat
/// the incumbent.
pub fn bb_discrete_search(
    phi: &[f64],
    codebook: Codebook,
    c: &[Vec<C64>],
    seed: &PhaseVector,
    node_budget: u64,
) -> Result<BbOutcome> {
    let m = phi.len();
    let seed_levels = match (seed.levels(), seed.codebook()) {
        (Some(l), Some(cb)) if cb == codebook && l.len() == m => l.to_vec(),
        _ => {
            return Err(invalid_input(format!(
                "seed must be a {m}-element vector on the {}-bit codebook",
                codebook.bits()
            )))
        }
    };
    if c.iter().any(|ci| ci.len() != m) {
        return Err(invalid_input("coupling vectors must match the phase count"));
    }

    let mut search = Search::new(phi, codebook, c, seed_levels, node_budget);
    search.descend(0);
    let phases = PhaseVector::discrete(search.best_levels, codebook)?;
    Ok(BbOutcome {
        gain: search.best,
        phases,
        nodes: search.nodes,
        budget_exceeded: search.exhausted,
    })
}

struct Search<'a> {
    c: &'a [Vec<C64>],
    codebook: Codebook,
    users: usize,
    /// Element branched at each depth.
    order: Vec<usize>,
    /// Levels to try at each depth, preferred first.
    choices: Vec<Vec<u32>>,
    /// `tail[d * users + i]`: sum of `|c_i,j|` over elements at depth >= d.
    tail: Vec<f64>,
    /// `support[(d * users + i) * DIRECTIONS + k]`: best projection onto
    /// direction `k` of the remaining choices of passenger `i`.
    support: Vec<f64>,
    directions: Vec<C64>,
    direction_slack: f64,
    /// Partial sums `sum conj(theta_j) c_ij` over decided elements, per depth.
    partial: Vec<C64>,
    levels: Vec<u32>,
    best_levels: Vec<u32>,
    best: f64,
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

impl<'a> Search<'a> {
    fn new(phi: &[f64], codebook: Codebook, c: &'a [Vec<C64>], seed: Vec<u32>, budget: u64) -> Self {
        let m = phi.len();
        let users = c.len();
        let weight = |j: usize| c.iter().map(|ci| ci[j].norm()).sum::<f64>();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| weight(b).total_cmp(&weight(a)).then(a.cmp(&b)));

        let choices: Vec<Vec<u32>> = order
            .iter()
            .map(|&j| {
                if codebook.size() == 2 {
                    // Both one-bit levels are the zero phase.
                    return vec![0];
                }
                let (lo, hi) = codebook.bracket(phi[j]);
                let p = wrap_phase(phi[j]);
                if p - codebook.phase(lo) <= codebook.phase(hi) - p {
                    vec![lo, hi]
                } else {
                    vec![hi, lo]
                }
            })
            .collect();

        let directions: Vec<C64> = (0..DIRECTIONS)
            .map(|k| cis(TAU * k as f64 / DIRECTIONS as f64))
            .collect();
        let mut tail = vec![0.0; (m + 1) * users];
        let mut support = vec![0.0; (m + 1) * users * DIRECTIONS];
        for d in (0..m).rev() {
            let j = order[d];
            for (i, ci) in c.iter().enumerate() {
                tail[d * users + i] = tail[(d + 1) * users + i] + ci[j].norm();
                for (k, u) in directions.iter().enumerate() {
                    let best = choices[d]
                        .iter()
                        .map(|&a| (u.conj() * codebook.coeff(a).conj() * ci[j]).re)
                        .fold(f64::NEG_INFINITY, f64::max);
                    support[(d * users + i) * DIRECTIONS + k] = support[((d + 1) * users + i) * DIRECTIONS + k] + best;
                }
            }
        }

        let best = gain_sum(c, &levels_to_coeffs(&seed, codebook));
        Self {
            c,
            codebook,
            users,
            order,
            choices,
            tail,
            support,
            directions,
            direction_slack: 1.0 / (PI / DIRECTIONS as f64).cos(),
            partial: vec![C64::new(0.0, 0.0); (m + 1) * users],
            levels: seed.clone(),
            best_levels: seed,
            best,
            nodes: 0,
            budget,
            exhausted: false,
        }
    }

    fn bound(&self, depth: usize) -> f64 {
        let mut total = 0.0;
        for i in 0..self.users {
            let p = self.partial[depth * self.users + i];
            let triangle = p.norm() + self.tail[depth * self.users + i];
            let base = (depth * self.users + i) * DIRECTIONS;
            let support = self
                .directions
                .iter()
                .zip(&self.support[base..base + DIRECTIONS])
                .map(|(u, s)| (u.conj() * p).re + s)
                .fold(f64::NEG_INFINITY, f64::max)
                * self.direction_slack;
            let b = triangle.min(support.max(0.0));
            total += b * b;
        }
        total
    }

    fn descend(&mut self, depth: usize) {
        if self.exhausted {
            return;
        }
        if self.nodes >= self.budget {
            self.exhausted = true;
            return;
        }
        self.nodes += 1;
        let m = self.order.len();
        if depth == m {
            let value = gain_sum(self.c, &levels_to_coeffs(&self.levels, self.codebook));
            if value > self.best {
                self.best = value;
                self.best_levels.clone_from(&self.levels);
            }
            return;
        }
        if self.bound(depth) * (1.0 + BOUND_SLACK) <= self.best {
            return;
        }
        let j = self.order[depth];
        for idx in 0..self.choices[depth].len() {
            let level = self.choices[depth][idx];
            self.levels[j] = level;
            let t = self.codebook.coeff(level).conj();
            for i in 0..self.users {
                self.partial[(depth + 1) * self.users + i] = self.partial[depth * self.users + i] + t * self.c[i][j];
            }
            self.descend(depth + 1);
            if self.exhausted {
                return;
            }
        }
    }
}

fn levels_to_coeffs(levels: &[u32], codebook: Codebook) -> Vec<C64> {
    levels.iter().map(|&a| codebook.coeff(a)).collect()
}
