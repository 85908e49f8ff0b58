use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ComplexMatrix, C64};

/// Deterministic random stream keyed by `(seed, stream id)`.
///
/// Backed by ChaCha8, whose 64-bit stream selector gives independent,
/// counter-addressed sequences: the draws for one `(trial, frame)` never depend
/// on which thread produced them or in which order.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    /// Stream id for one `(trial, frame, purpose)` triple.
    pub fn for_trial(seed: u64, trial: u64, frame: u64, purpose: u8) -> Self {
        debug_assert!(frame < 1 << 24);
        Self::new(seed, (trial << 32) | (frame << 8) | purpose as u64)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform on `[lo, hi)`.
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer on `0..n`.
    #[inline]
    pub fn below(&mut self, n: u32) -> u32 {
        self.rng.random_range(0..n)
    }

    /// One circularly-symmetric complex Gaussian with unit variance, via Box-Muller.
    #[inline]
    pub fn cn01(&mut self) -> C64 {
        // 1 - U lies in (0, 1], keeping the logarithm finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-u1.ln()).sqrt();
        C64::from_polar(r, std::f64::consts::TAU * u2)
    }

    pub fn cn01_vec(&mut self, n: usize) -> Vec<C64> {
        (0..n).map(|_| self.cn01()).collect()
    }

    /// `rows x cols` matrix of i.i.d. CN(0, 1) entries.
    pub fn sample_cn01(&mut self, rows: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| self.cn01())
    }
}
