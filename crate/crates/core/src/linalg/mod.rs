//! Dense complex linear algebra for operators of dimension at most 100.

mod eig;
mod matrix;
mod ops;
mod random;

pub use eig::{
    cholesky, cholesky_solve, hermitian_eig, hermitian_eig_with, inverse_sqrt,
    is_positive_definite, log_det_pd, max_eigenvalue, min_eigenvalue, psd_projection, Eigen,
    JacobiOptions,
};
pub use matrix::{dot, norm, ComplexMatrix, HermOp, Ket, C64};
pub use ops::{
    gram_schmidt, kron, kron_herm, partial_trace_a, partial_trace_b, span_projector,
    MAX_OPERATOR_DIM,
};
pub use random::{
    random_density, random_hermitian, random_unitary, random_unitary_from, GaussianStream,
};

pub(crate) use matrix::ZERO;

/// Numerical tolerances shared across the crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Hermitian operators: `max |H - H^dagger|`.
    pub hermiticity: f64,
    /// Eigendecomposition reconstruction residual (max-norm).
    pub eig_residual: f64,
    /// Density operators and POVM elements: smallest allowed eigenvalue.
    pub psd: f64,
    /// Density operators: `|Tr rho - 1|`.
    pub trace: f64,
    /// POVMs: `max |sum_g M_g - I|`.
    pub completeness: f64,
    /// Conditional distributions: row sums.
    pub normalization: f64,
}

impl Tolerances {
    pub const STRICT: Tolerances = Tolerances {
        hermiticity: 1e-12,
        eig_residual: 1e-10,
        psd: 1e-9,
        trace: 1e-9,
        completeness: 1e-8,
        normalization: 1e-9,
    };

    /// Used only while loading two-decimal transcriptions, before repair.
    pub const LENIENT: Tolerances = Tolerances {
        hermiticity: 1e-12,
        eig_residual: 1e-10,
        psd: 5e-2,
        trace: 5e-2,
        completeness: 0.15,
        normalization: 1e-9,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::STRICT
    }
}
