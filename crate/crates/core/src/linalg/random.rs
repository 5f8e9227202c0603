//! Seeded randomness.
//!
//! Bits come from ChaCha8 (`rand_chacha`), keyed by `seed_from_u64(seed)` and
//! switched to stream `stream` so independent restarts never share draws.
//! Normal deviates use the Box–Muller transform on two 53-bit uniforms:
//!
//! ```text
//! u1 = ((x1 >> 11) + 1) * 2^-53      in (0, 1]
//! u2 = (x2 >> 11) * 2^-53            in [0, 1)
//! z0 = sqrt(-2 ln u1) cos(2 pi u2),  z1 = sqrt(-2 ln u1) sin(2 pi u2)
//! ```
//!
//! A standard complex Gaussian is `(z0 + i z1) / sqrt(2)`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::{norm, ComplexMatrix, HermOp, C64};

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

/// Deterministic stream of uniform and Gaussian deviates.
#[derive(Clone, Debug)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl GaussianStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        GaussianStream { rng }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_M53
    }

    /// Uniform integer in `0..n` (rejection sampling, no modulo bias).
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    /// A pair of independent standard normal deviates.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * TWO_POW_M53;
        let u2 = (self.next_u64() >> 11) as f64 * TWO_POW_M53;
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        (r * theta.cos(), r * theta.sin())
    }

    /// Standard complex Gaussian, `E|z|^2 = 1`.
    pub fn complex(&mut self) -> C64 {
        let (a, b) = self.normal_pair();
        C64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// Haar-random unitary determined by `seed` alone.
pub fn random_unitary(dim: usize, seed: u64) -> ComplexMatrix {
    random_unitary_from(dim, &mut GaussianStream::new(seed, 0))
}

/// Gram–Schmidt orthonormalization of the columns of an i.i.d. complex
/// Gaussian matrix filled in row-major order.
pub fn random_unitary_from(dim: usize, g: &mut GaussianStream) -> ComplexMatrix {
    assert!(dim >= 1);
    loop {
        let z = ComplexMatrix::from_fn(dim, dim, |_, _| g.complex());
        if let Some(q) = orthonormalize_columns(&z) {
            return q;
        }
    }
}

/// Random Hermitian matrix `(G + G^dagger) / 2` with Gaussian `G`.
pub fn random_hermitian(dim: usize, g: &mut GaussianStream) -> HermOp {
    let z = ComplexMatrix::from_fn(dim, dim, |_, _| g.complex());
    HermOp::symmetrized(&z)
}

/// Random density operator of full rank (`G G^dagger / Tr`).
pub fn random_density(dim: usize, g: &mut GaussianStream) -> HermOp {
    let z = ComplexMatrix::from_fn(dim, dim, |_, _| g.complex());
    let p = HermOp::symmetrized(&(&z * &z.adjoint()));
    let t = p.trace();
    p.scale(1.0 / t)
}

/// Modified Gram–Schmidt with one reorthogonalization pass; `None` if the
/// columns are numerically dependent.
fn orthonormalize_columns(z: &ComplexMatrix) -> Option<ComplexMatrix> {
    let n = z.cols();
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| z.column(j)).collect();
    for j in 0..n {
        for _ in 0..2 {
            for k in 0..j {
                let (done, cur) = cols.split_at_mut(j);
                let proj: C64 = done[k]
                    .iter()
                    .zip(cur[0].iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                for (c, q) in cur[0].iter_mut().zip(&done[k]) {
                    *c -= proj * q;
                }
            }
        }
        let nrm = norm(&cols[j]);
        if nrm < 1e-10 {
            return None;
        }
        for c in cols[j].iter_mut() {
            *c /= nrm;
        }
    }
    let mut q = ComplexMatrix::zeros(z.rows(), n);
    for (j, c) in cols.iter().enumerate() {
        q.set_column(j, c);
    }
    Some(q)
}
