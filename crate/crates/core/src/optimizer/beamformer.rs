use super::BeamVector;
use crate::channel::ChannelRealization;
use crate::error::Error;
use crate::numerics::{cdot, dominant_eigpair, ComplexMatrix, C64, EIG_MAX_ITER, EIG_TOL};

/// A beamformer with the sum of effective gains it achieves.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamOutcome {
    pub beam: BeamVector,
    /// `sum_i |b_i^H f|^2`, the dominant eigenvalue.
    pub gain: f64,
    /// Every effective channel was zero (or non-finite); `beam` is arbitrary.
    pub degenerate: bool,
}

/// Unit vector maximizing `sum_i |b_i^H f|^2` over effective channels `b_i`.
///
/// The optimum is the dominant eigenvector of `sum_i b_i b_i^H`. That matrix
/// has rank at most `N`, so the eigenproblem is solved on the `N x N` Gram
/// matrix `B^H B` and the eigenvector is mapped back through `B`.
pub fn eigen_beamformer(channels: &[Vec<C64>]) -> BeamOutcome {
    let len = channels.first().map_or(0, Vec::len);
    let n = channels.len();
    let mut gram = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let z = cdot(&channels[i], &channels[j]);
            gram[(i, j)] = z;
            gram[(j, i)] = z.conj();
        }
        gram[(i, i)] = C64::new(gram[(i, i)].re, 0.0);
    }
    let scale = gram.max_abs();
    if !(scale > 0.0 && scale.is_finite()) {
        return BeamOutcome {
            beam: BeamVector::unit(vec![C64::new(0.0, 0.0); len]),
            gain: 0.0,
            degenerate: true,
        };
    }
    let pair = match dominant_eigpair(&gram.scale(1.0 / scale), EIG_TOL, EIG_MAX_ITER) {
        Ok(p) => p,
        Err(Error::NotConverged { last, .. }) => *last,
        Err(e) => unreachable!("Gram matrices are Hermitian by construction: {e}"),
    };
    let mut f = vec![C64::new(0.0, 0.0); len];
    for (b, y) in channels.iter().zip(&pair.vector) {
        for (fl, bl) in f.iter_mut().zip(b) {
            *fl += bl * y;
        }
    }
    let beam = BeamVector::unit(f);
    let gain = channels.iter().map(|b| cdot(b, beam.as_slice()).norm_sqr()).sum();
    BeamOutcome {
        beam,
        gain,
        degenerate: false,
    }
}

/// Effective BS-side channels `G^H diag(theta)^H v_i` of every passenger.
pub fn effective_channels(theta: &[C64], ch: &ChannelRealization) -> Vec<Vec<C64>> {
    ch.v.iter()
        .map(|v| {
            let rotated: Vec<C64> = v.iter().zip(theta).map(|(a, t)| t.conj() * a).collect();
            ch.g.adjoint_mul_vec(&rotated)
        })
        .collect()
}

/// Beamformer maximizing the frame's total effective gain for fixed phases.
pub fn optimal_beamformer(theta: &[C64], ch: &ChannelRealization) -> BeamOutcome {
    eigen_beamformer(&effective_channels(theta, ch))
}
