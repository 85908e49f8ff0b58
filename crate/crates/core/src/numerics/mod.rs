//! Dense complex linear algebra, dominant eigenpairs and seeded sampling.
//!
//! Everything here is deliberately small: the simulator only ever touches
//! matrices of a few hundred entries (an `M x L` BS-to-surface channel and
//! `L x L` or `N x N` Gram matrices), so a row-major `Vec` is all we need.

mod eigen;
mod matrix;
mod rng;

pub use eigen::{dominant_eigpair, jacobi_eig_oracle, EigPair, Eigen, EIG_MAX_ITER, EIG_TOL};
pub use matrix::{cdot, norm, normalize, ComplexMatrix};
pub use rng::RngStream;

pub use num_complex::Complex64 as C64;

/// Unit-modulus complex number `e^{j phase}`.
#[inline]
pub fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

/// Converts decibels to a linear power ratio.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts dBm to watts.
#[inline]
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}
