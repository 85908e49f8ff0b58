use super::matrix::{cdot, norm, normalize, ComplexMatrix};
use super::C64;
use crate::error::{invalid_input, Error, Result};

/// Relative residual tolerance used by default for power iteration.
pub const EIG_TOL: f64 = 1e-10;
/// Default iteration cap for power iteration.
pub const EIG_MAX_ITER: usize = 10_000;

/// Largest-eigenvalue pair of a Hermitian PSD matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigPair {
    pub value: f64,
    pub vector: Vec<C64>,
    pub iterations: usize,
}

/// Full eigendecomposition, eigenvalues sorted in descending order and the
/// matching eigenvectors stored as columns of `vectors`.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigen {
    /// Rebuilds `X diag(values) X^H`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.values.len();
        ComplexMatrix::from_fn(n, n, |r, c| {
            (0..n)
                .map(|k| self.vectors[(r, k)] * self.values[k] * self.vectors[(c, k)].conj())
                .sum()
        })
    }
}

fn check_hermitian(h: &ComplexMatrix) -> Result<()> {
    if !h.is_square() || h.rows() == 0 {
        return Err(invalid_input(format!(
            "expected a non-empty square matrix, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let scale = h.max_abs();
    let defect = h.hermitian_defect();
    if defect > 1e-10 * scale {
        return Err(invalid_input(format!(
            "matrix is not Hermitian (defect {defect:.3e}, scale {scale:.3e})"
        )));
    }
    Ok(())
}

/// Dominant eigenpair of a Hermitian nonnegative-definite matrix by power
/// iteration.
///
/// Iteration stops once the Rayleigh-quotient residual `||Hx - rho x||` drops
/// below `tol * rho`. Degenerate top eigenvalues are fine: any vector of the
/// dominant eigenspace is a valid answer.
pub fn dominant_eigpair(h: &ComplexMatrix, tol: f64, max_iter: usize) -> Result<EigPair> {
    check_hermitian(h)?;
    let n = h.rows();

    // Start from the heaviest column; it lies in the range of H and is only
    // orthogonal to the top eigenvector in contrived cases.
    let start = (0..n)
        .map(|c| (c, norm(&h.column(c))))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(c, _)| c)
        .unwrap_or(0);
    let mut x = h.column(start);
    if normalize(&mut x) == 0.0 {
        let mut e = vec![C64::new(0.0, 0.0); n];
        e[0] = C64::new(1.0, 0.0);
        return Ok(EigPair {
            value: 0.0,
            vector: e,
            iterations: 0,
        });
    }

    let floor = f64::MIN_POSITIVE.sqrt() * h.max_abs();
    let mut rho = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let mut y = h.mul_vec(&x);
        rho = cdot(&x, &y).re;
        residual = y
            .iter()
            .zip(&x)
            .map(|(yi, xi)| (yi - xi * rho).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual <= tol * rho.abs().max(floor) {
            return Ok(EigPair {
                value: rho.max(0.0),
                vector: x,
                iterations: it,
            });
        }
        if normalize(&mut y) == 0.0 {
            return Ok(EigPair {
                value: 0.0,
                vector: x,
                iterations: it,
            });
        }
        x = y;
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual,
        last: Box::new(EigPair {
            value: rho.max(0.0),
            vector: x,
            iterations: max_iter,
        }),
    })
}

/// Full Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Used as an independent check on [`dominant_eigpair`]; cubic cost per
/// sweep, so it is capped at 64x64.
pub fn jacobi_eig_oracle(h: &ComplexMatrix) -> Result<Eigen> {
    check_hermitian(h)?;
    let n = h.rows();
    if n > 64 {
        return Err(invalid_input(format!(
            "Jacobi oracle supports at most 64x64, got {n}x{n}"
        )));
    }
    let mut a = h.clone();
    // Symmetrize exactly so the rotations see a Hermitian matrix.
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                // Rotate the phase of coordinate q so that a[p][q] becomes real.
                let phase = apq / mag;
                for r in 0..n {
                    a[(r, q)] *= phase.conj();
                }
                for c in 0..n {
                    a[(q, c)] *= phase;
                }
                for r in 0..n {
                    v[(r, q)] *= phase.conj();
                }

                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;

                for r in 0..n {
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    a[(r, p)] = arp * cs - arq * sn;
                    a[(r, q)] = arp * sn + arq * cs;
                }
                for c in 0..n {
                    let apc = a[(p, c)];
                    let aqc = a[(q, c)];
                    a[(p, c)] = apc * cs - aqc * sn;
                    a[(q, c)] = apc * sn + aqc * cs;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = vrp * cs - vrq * sn;
                    v[(r, q)] = vrp * sn + vrq * cs;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(Eigen { values, vectors })
}
