//! Comparison schemes: random phases, successive refinement with zero-forcing,
//! neighbor-based cross-entropy search, and transmission without the surface.

use crate::channel::ChannelRealization;
use crate::error::{invalid_config, Result};
use crate::numerics::{cdot, ComplexMatrix, RngStream, C64};
use crate::optimizer::{effective_channels, eigen_beamformer, optimal_beamformer, BeamVector, Codebook, PhaseVector};
use crate::rate::{coupling, gain_sum, rate_from_total};
use crate::scenario::ScenarioConfig;

/// A complete frame design from one of the schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub beam: BeamVector,
    pub phases: PhaseVector,
    /// Total effective gain `sum_i g_i`.
    pub gain: f64,
    /// Frame rate at the configured average power, bit/s/Hz.
    pub rate: f64,
    /// The scheme could not run as designed and used its fallback.
    pub fallback: bool,
}

fn design(
    ch: &ChannelRealization,
    cfg: &ScenarioConfig,
    beam: BeamVector,
    phases: PhaseVector,
    fallback: bool,
) -> Design {
    let gain = gain_sum(&coupling(ch, beam.as_slice()), phases.coeffs());
    Design {
        rate: rate_from_total(gain, cfg.avg_power_watts(), ch.noise_var),
        beam,
        phases,
        gain,
        fallback,
    }
}

/// Independent uniformly drawn codebook levels.
pub fn rps_phases(rng: &mut RngStream, elements: usize, codebook: Codebook) -> PhaseVector {
    let levels = (0..elements).map(|_| rng.below(codebook.size())).collect();
    PhaseVector::discrete(levels, codebook).expect("levels drawn inside the codebook")
}

/// Random phases with the optimal beamformer for them.
pub fn rps_optimize(ch: &ChannelRealization, cfg: &ScenarioConfig, rng: &mut RngStream) -> Result<Design> {
    let phases = rps_phases(rng, ch.irs_elements(), Codebook::new(cfg.quant_bits)?);
    let beam = optimal_beamformer(phases.coeffs(), ch);
    Ok(design(ch, cfg, beam.beam, phases, beam.degenerate))
}

/// Solves the Hermitian system `a y = b` by Gaussian elimination with partial
/// pivoting; `None` when a pivot falls below `1e-10 * max|a|`.
fn solve(a: &ComplexMatrix, b: &[C64]) -> Option<Vec<C64>> {
    let n = b.len();
    let floor = 1e-10 * a.max_abs();
    if !(floor > 0.0) {
        return None;
    }
    let mut m: Vec<Vec<C64>> = (0..n)
        .map(|r| {
            let mut row = a.row(r).to_vec();
            row.push(b[r]);
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))?;
        if m[pivot][col].norm() < floor {
            return None;
        }
        m.swap(col, pivot);
        for r in col + 1..n {
            let factor = m[r][col] / m[col][col];
            let (upper, lower) = m.split_at_mut(r);
            for (x, y) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x -= factor * y;
            }
        }
    }
    let mut y = vec![C64::new(0.0, 0.0); n];
    for r in (0..n).rev() {
        let tail: C64 = (r + 1..n).map(|c| m[r][c] * y[c]).sum();
        y[r] = (m[r][n] - tail) / m[r][r];
    }
    Some(y)
}

/// Unit-norm zero-forcing direction `B^+ 1` for effective channels `b_i`
/// (`B` stacks `b_i^H`), or maximum-ratio toward the strongest passenger when
/// the channels are rank-deficient. The flag marks the fallback.
pub fn zero_forcing(channels: &[Vec<C64>]) -> (BeamVector, bool) {
    let n = channels.len();
    let len = channels.first().map_or(0, Vec::len);
    if n <= len {
        let gram = ComplexMatrix::from_fn(n, n, |i, j| cdot(&channels[i], &channels[j]));
        if let Some(y) = solve(&gram, &vec![C64::new(1.0, 0.0); n]) {
            let mut f = vec![C64::new(0.0, 0.0); len];
            for (b, yi) in channels.iter().zip(&y) {
                for (fl, bl) in f.iter_mut().zip(b) {
                    *fl += bl * yi;
                }
            }
            if f.iter().all(|z| z.is_finite()) {
                return (BeamVector::unit(f), false);
            }
        }
    }
    let strongest = channels
        .iter()
        .max_by(|a, b| cdot(a, a).re.total_cmp(&cdot(b, b).re))
        .cloned()
        .unwrap_or_default();
    (BeamVector::unit(strongest), true)
}

/// Progress of the successive refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct SrOutcome {
    pub design: Design,
    /// Total gain after each full sweep; `sweeps[0]` is the starting point.
    pub sweeps: Vec<f64>,
}

/// Element-wise sweeps over the codebook for fixed couplings `c`, until a
/// sweep changes nothing. Pushes the total gain after each sweep.
fn coordinate_sweeps(c: &[Vec<C64>], levels: &mut [u32], codebook: Codebook, sweeps: &mut Vec<f64>) {
    const MAX_SWEEPS: usize = 1000;
    let coeffs: Vec<C64> = (0..codebook.size()).map(|l| codebook.coeff(l)).collect();
    let theta: Vec<C64> = levels.iter().map(|&l| coeffs[l as usize]).collect();
    // s_i = theta^H c_i, updated in place as elements change.
    let mut s: Vec<C64> = c.iter().map(|ci| cdot(&theta, ci)).collect();
    let total = |s: &[C64]| s.iter().map(|z| z.norm_sqr()).sum::<f64>();
    for _ in 0..MAX_SWEEPS {
        let mut changed = false;
        for el in 0..levels.len() {
            let current = coeffs[levels[el] as usize];
            let mut best = (levels[el], total(&s));
            for (level, &cand) in coeffs.iter().enumerate() {
                let delta = (cand - current).conj();
                let value: f64 = s.iter().zip(c).map(|(si, ci)| (si + delta * ci[el]).norm_sqr()).sum();
                if value > best.1 * (1.0 + 1e-12) {
                    best = (level as u32, value);
                }
            }
            if best.0 != levels[el] {
                let delta = (coeffs[best.0 as usize] - current).conj();
                for (si, ci) in s.iter_mut().zip(c) {
                    *si += delta * ci[el];
                }
                levels[el] = best.0;
                changed = true;
            }
        }
        sweeps.push(total(&s));
        if !changed {
            break;
        }
    }
}

/// Successive refinement: zero-forcing toward the all-zero-phase channels,
/// then element-wise codebook sweeps with the beamformer fixed.
pub fn sr_optimize(ch: &ChannelRealization, cfg: &ScenarioConfig) -> Result<SrOutcome> {
    let codebook = Codebook::new(cfg.quant_bits)?;
    let mut levels = vec![0u32; ch.irs_elements()];
    let start = PhaseVector::discrete(levels.clone(), codebook)?;
    let (beam, fallback) = zero_forcing(&effective_channels(start.coeffs(), ch));
    let c = coupling(ch, beam.as_slice());
    let mut sweeps = vec![gain_sum(&c, start.coeffs())];
    coordinate_sweeps(&c, &mut levels, codebook, &mut sweeps);
    let phases = PhaseVector::discrete(levels, codebook)?;
    Ok(SrOutcome {
        design: design(ch, cfg, beam, phases, fallback),
        sweeps,
    })
}

/// Cross-entropy search settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CeParams {
    pub population: usize,
    pub elite_fraction: f64,
    /// Weight of the elite frequencies in each distribution update.
    pub smoothing: f64,
    pub max_generations: usize,
    /// Single-element mutations of the incumbent added per generation.
    pub neighbor_radius: usize,
}

impl CeParams {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            population: cfg.nce_population,
            elite_fraction: cfg.nce_elite_fraction,
            smoothing: cfg.nce_smoothing,
            max_generations: cfg.nce_generations,
            neighbor_radius: cfg.nce_neighbors.unwrap_or(cfg.irs_elements),
        }
    }

    pub fn elite_count(&self) -> usize {
        ((self.population as f64 * self.elite_fraction).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.population == 0 || self.max_generations == 0 {
            return Err(invalid_config(
                "cross-entropy population and generations must be at least 1",
            ));
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction < 1.0) {
            return Err(invalid_config(format!(
                "elite fraction must lie in (0, 1), got {}",
                self.elite_fraction
            )));
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(invalid_config(format!(
                "smoothing must lie in (0, 1], got {}",
                self.smoothing
            )));
        }
        Ok(())
    }
}

/// Result of the cross-entropy search.
#[derive(Debug, Clone, PartialEq)]
pub struct NceOutcome {
    pub design: Design,
    /// Best total gain seen after each generation.
    pub best_per_generation: Vec<f64>,
}

fn sample_level(rng: &mut RngStream, probs: &[f64]) -> u32 {
    let u = rng.uniform();
    let mut acc = 0.0;
    for (level, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return level as u32;
        }
    }
    // Rounding left the cumulative sum short of one; take the last supported level.
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0) as u32
}

/// Cross-entropy search from uniform level distributions.
pub fn nce_optimize(
    ch: &ChannelRealization,
    cfg: &ScenarioConfig,
    params: &CeParams,
    rng: &mut RngStream,
) -> Result<NceOutcome> {
    let codebook = Codebook::new(cfg.quant_bits)?;
    let size = codebook.size() as usize;
    let probs = vec![vec![1.0 / size as f64; size]; ch.irs_elements()];
    nce_search(ch, cfg, params, codebook, probs, rng)
}

/// Cross-entropy search from the given per-element level distributions.
///
/// Every candidate is scored with its optimal beamformer. Each generation
/// samples the population, adds `neighbor_radius` single-element mutations of
/// the incumbent, refits the distributions to the elite, and keeps the best
/// candidate ever seen.
pub fn nce_search(
    ch: &ChannelRealization,
    cfg: &ScenarioConfig,
    params: &CeParams,
    codebook: Codebook,
    mut probs: Vec<Vec<f64>>,
    rng: &mut RngStream,
) -> Result<NceOutcome> {
    params.validate()?;
    let m = ch.irs_elements();
    let size = codebook.size();
    if probs.len() != m || probs.iter().any(|p| p.len() != size as usize) {
        return Err(invalid_config("one level distribution per element is required"));
    }
    let score = |levels: &[u32]| -> f64 {
        let theta: Vec<C64> = levels.iter().map(|&l| codebook.coeff(l)).collect();
        optimal_beamformer(&theta, ch).gain
    };
    let elite = params.elite_count();
    let mut best: Option<(Vec<u32>, f64)> = None;
    let mut history = Vec::with_capacity(params.max_generations);

    for _ in 0..params.max_generations {
        let mut pool: Vec<(Vec<u32>, f64)> = Vec::with_capacity(params.population + params.neighbor_radius);
        for _ in 0..params.population {
            let levels: Vec<u32> = probs.iter().map(|p| sample_level(rng, p)).collect();
            let value = score(&levels);
            pool.push((levels, value));
        }
        let incumbent = match &best {
            Some(b) => b.0.clone(),
            None => pool
                .iter()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .map(|c| c.0.clone())
                .unwrap_or_default(),
        };
        if size > 1 {
            for j in 0..params.neighbor_radius {
                let el = j % m;
                let mut levels = incumbent.clone();
                levels[el] = (levels[el] + 1 + rng.below(size - 1)) % size;
                let value = score(&levels);
                pool.push((levels, value));
            }
        }
        // Stable sort keeps sampling order among ties, so runs are reproducible.
        pool.sort_by(|a, b| b.1.total_cmp(&a.1));
        if best.as_ref().is_none_or(|b| pool[0].1 > b.1) {
            best = Some(pool[0].clone());
        }
        history.push(best.as_ref().map_or(0.0, |b| b.1));

        let top = &pool[..elite.min(pool.len())];
        for (el, p) in probs.iter_mut().enumerate() {
            let mut freq = vec![0.0; size as usize];
            for cand in top {
                freq[cand.0[el] as usize] += 1.0 / top.len() as f64;
            }
            for (pl, fl) in p.iter_mut().zip(&freq) {
                *pl = params.smoothing * fl + (1.0 - params.smoothing) * *pl;
            }
        }
    }

    let (levels, _) = best.expect("at least one generation ran");
    let phases = PhaseVector::discrete(levels, codebook)?;
    let beam = optimal_beamformer(phases.coeffs(), ch);
    Ok(NceOutcome {
        design: design(ch, cfg, beam.beam, phases, beam.degenerate),
        best_per_generation: history,
    })
}

/// Total gain and rate over the direct channels alone, with the optimal
/// beamformer for them.
pub fn no_irs_design(ch: &ChannelRealization, cfg: &ScenarioConfig) -> (BeamVector, f64, f64) {
    let out = eigen_beamformer(&ch.direct);
    let gain: f64 = ch.direct.iter().map(|h| cdot(h, out.beam.as_slice()).norm_sqr()).sum();
    (
        out.beam,
        gain,
        rate_from_total(gain, cfg.avg_power_watts(), ch.noise_var),
    )
}

/// Frame rate without the surface, bit/s/Hz.
pub fn no_irs_rate(ch: &ChannelRealization, cfg: &ScenarioConfig) -> f64 {
    no_irs_design(ch, cfg).2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::synthesize_frame;
    use crate::scenario::{build_schedule, Point3};

    fn synthetic(rng: &mut RngStream, m: usize, l: usize, n: usize) -> ChannelRealization {
        ChannelRealization {
            frame: 1,
            g: rng.sample_cn01(m, l),
            v: (0..n).map(|_| rng.cn01_vec(m)).collect(),
            direct: (0..n).map(|_| rng.cn01_vec(l)).collect(),
            noise_var: 1.0,
            irs_position: Point3::new(0.0, 0.0, 1.0),
            user_positions: vec![Point3::new(-1.0, 0.0, 1.0); n],
        }
    }

    fn small_cfg(m: usize, bits: u32) -> ScenarioConfig {
        ScenarioConfig {
            irs_elements: m,
            quant_bits: bits,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn rps_levels_are_uniform() {
        let cb = Codebook::new(2).unwrap();
        let mut rng = RngStream::new(1, 0);
        let v = rps_phases(&mut rng, 100_000, cb);
        let mut counts = [0usize; 4];
        for &l in v.levels().unwrap() {
            counts[l as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 / 1e5 - 0.25).abs() < 0.01, "{counts:?}");
        }
        let one = rps_phases(&mut rng, 32, Codebook::new(1).unwrap());
        assert!(one.phases().iter().all(|p| *p == 0.0));
        let a = rps_phases(&mut RngStream::new(4, 4), 16, cb);
        let b = rps_phases(&mut RngStream::new(4, 4), 16, cb);
        assert_eq!(a, b);
    }

    #[test]
    fn zero_forcing_equalizes_gains() {
        let mut rng = RngStream::new(2, 0);
        for _ in 0..50 {
            let b: Vec<Vec<C64>> = (0..4).map(|_| rng.cn01_vec(16)).collect();
            let (f, fallback) = zero_forcing(&b);
            assert!(!fallback);
            let resp: Vec<C64> = b.iter().map(|bi| cdot(bi, f.as_slice())).collect();
            for r in &resp {
                assert!((r - resp[0]).norm() < 1e-9 * resp[0].norm());
            }
        }
        let row = rng.cn01_vec(8);
        let (f, fallback) = zero_forcing(&[row.clone(), row.iter().map(|z| z * 2.0).collect()]);
        assert!(fallback);
        assert!((cdot(&row, f.as_slice()).norm() - crate::numerics::norm(&row)).abs() < 1e-9);
        assert!(zero_forcing(&(0..3).map(|_| rng.cn01_vec(2)).collect::<Vec<_>>()).1);
    }

    #[test]
    fn sr_is_monotone_and_exhaustive_for_one_element() {
        let mut rng = RngStream::new(3, 0);
        let cfg = small_cfg(16, 2);
        for _ in 0..20 {
            let ch = synthetic(&mut rng, 16, 4, 3);
            let out = sr_optimize(&ch, &cfg).unwrap();
            for w in out.sweeps.windows(2) {
                assert!(w[1] >= w[0] * (1.0 - 1e-12));
            }
            assert!(out.design.gain >= out.sweeps[0] * (1.0 - 1e-12));
        }
        let cfg1 = small_cfg(1, 3);
        let cb = Codebook::new(3).unwrap();
        for _ in 0..20 {
            let ch = synthetic(&mut rng, 1, 4, 3);
            let out = sr_optimize(&ch, &cfg1).unwrap();
            let c = coupling(&ch, out.design.beam.as_slice());
            let best = (0..cb.size()).map(|l| gain_sum(&c, &[cb.coeff(l)])).fold(0.0, f64::max);
            assert!((out.design.gain - best).abs() <= 1e-12 * best);
        }
    }

    #[test]
    fn nce_degenerate_distribution_is_a_fixed_point() {
        let mut rng = RngStream::new(5, 0);
        let cfg = small_cfg(8, 2);
        let cb = Codebook::new(2).unwrap();
        let ch = synthetic(&mut rng, 8, 4, 2);
        let target = [3u32, 0, 1, 2, 2, 1, 0, 3];
        let probs = target
            .iter()
            .map(|&l| (0..4).map(|j| if j == l { 1.0 } else { 0.0 }).collect())
            .collect();
        let params = CeParams {
            population: 20,
            elite_fraction: 0.1,
            smoothing: 0.7,
            max_generations: 5,
            neighbor_radius: 0,
        };
        let out = nce_search(&ch, &cfg, &params, cb, probs, &mut rng).unwrap();
        assert_eq!(out.design.phases.levels().unwrap(), &target);
    }

    fn lambda_max_2x2(b: &[Vec<C64>]) -> f64 {
        let a = cdot(&b[0], &b[0]).re;
        let d = cdot(&b[1], &b[1]).re;
        let off = cdot(&b[0], &b[1]).norm_sqr();
        0.5 * (a + d) + (0.25 * (a - d) * (a - d) + off).sqrt()
    }

    #[test]
    fn nce_matches_exhaustive_search_at_small_scale() {
        let cfg = small_cfg(8, 2);
        let cb = Codebook::new(2).unwrap();
        let params = CeParams::from_config(&cfg);
        let mut hits = 0;
        for t in 0..100 {
            let mut rng = RngStream::new(6, t);
            let ch = synthetic(&mut rng, 8, 4, 2);
            let mut best = 0.0f64;
            for code in 0..(1u32 << 16) {
                let theta: Vec<C64> = (0..8).map(|m| cb.coeff((code >> (2 * m)) & 3)).collect();
                best = best.max(lambda_max_2x2(&effective_channels(&theta, &ch)));
            }
            let out = nce_optimize(&ch, &cfg, &params, &mut rng).unwrap();
            assert!(out.design.gain <= best * (1.0 + 1e-9));
            for w in out.best_per_generation.windows(2) {
                assert!(w[1] >= w[0]);
            }
            if out.design.gain >= best * (1.0 - 1e-9) {
                hits += 1;
            }
        }
        assert!(hits >= 95, "{hits} of 100");
    }

    #[test]
    fn no_irs_consistency() {
        let base = ScenarioConfig {
            irs_elements: 16,
            penetration_loss: 0.0,
            ..ScenarioConfig::default()
        };
        let sched = build_schedule(&base).unwrap();
        let k = sched.center_frame();
        let ch = synthesize_frame(&base, &sched, k, &mut RngStream::new(7, 0)).unwrap();
        let identity = vec![C64::new(1.0, 0.0); 16];
        let irs = optimal_beamformer(&identity, &ch);
        let irs_rate = rate_from_total(irs.gain, base.avg_power_watts(), ch.noise_var);
        assert!((no_irs_rate(&ch, &base) - irs_rate).abs() <= 1e-9 * irs_rate.max(1.0));

        let lossy = ScenarioConfig {
            penetration_loss: 10.0,
            ..base.clone()
        };
        let ch10 = synthesize_frame(&lossy, &sched, k, &mut RngStream::new(7, 0)).unwrap();
        let g0 = no_irs_design(&ch, &base).1;
        let g10 = no_irs_design(&ch10, &lossy).1;
        assert!((g10 - 0.1 * g0).abs() <= 1e-9 * g0);
    }
}
