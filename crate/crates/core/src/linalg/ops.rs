use super::matrix::{dot, norm, ComplexMatrix, HermOp, Ket, C64, ZERO};
use crate::error::{Error, Result};

/// Largest operator dimension the library will build.
pub const MAX_OPERATOR_DIM: usize = 100;

/// Kronecker product `A ⊗ B`; entry `(i*p + k, j*q + l)` is `A(i,j) B(k,l)`
/// where `B` is `p x q`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.rows() * b.rows();
    let cols = a.cols() * b.cols();
    if rows > MAX_OPERATOR_DIM || cols > MAX_OPERATOR_DIM {
        return Err(Error::domain(format!(
            "Kronecker product {rows}x{cols} exceeds the cap of {MAX_OPERATOR_DIM}"
        )));
    }
    let (p, q) = (b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..p {
                for l in 0..q {
                    out[(i * p + k, j * q + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// `A ⊗ B` for Hermitian factors.
pub fn kron_herm(a: &HermOp, b: &HermOp) -> Result<HermOp> {
    Ok(HermOp::symmetrized(&kron(a.matrix(), b.matrix())?))
}

/// `Tr_B M` for `M` on `C^d ⊗ C^d`: `(Tr_B M)(i,j) = sum_k M(i d + k, j d + k)`.
pub fn partial_trace_b(m: &HermOp, d: usize) -> Result<HermOp> {
    check_bipartite(m, d)?;
    let mm = m.matrix();
    let out = ComplexMatrix::from_fn(d, d, |i, j| (0..d).map(|k| mm[(i * d + k, j * d + k)]).sum());
    Ok(HermOp::symmetrized(&out))
}

/// `Tr_A M` for `M` on `C^d ⊗ C^d`: `(Tr_A M)(k,l) = sum_i M(i d + k, i d + l)`.
pub fn partial_trace_a(m: &HermOp, d: usize) -> Result<HermOp> {
    check_bipartite(m, d)?;
    let mm = m.matrix();
    let out = ComplexMatrix::from_fn(d, d, |k, l| (0..d).map(|i| mm[(i * d + k, i * d + l)]).sum());
    Ok(HermOp::symmetrized(&out))
}

fn check_bipartite(m: &HermOp, d: usize) -> Result<()> {
    if d == 0 || m.dim() != d * d {
        return Err(Error::domain(format!(
            "operator of dimension {} is not on C^{d} ⊗ C^{d}",
            m.dim()
        )));
    }
    Ok(())
}

/// Orthonormalizes `vectors` in order, preserving their span.
///
/// Fails when the set is numerically dependent: a vector whose component
/// orthogonal to its predecessors has norm below `1e-6` of its own norm.
pub fn gram_schmidt(vectors: &[Ket]) -> Result<Vec<Ket>> {
    let Some(first) = vectors.first() else {
        return Ok(Vec::new());
    };
    let dim = first.dim();
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(vectors.len());
    for (idx, v) in vectors.iter().enumerate() {
        if v.dim() != dim {
            return Err(Error::domain("vectors of different dimension"));
        }
        let mut w = v.amplitudes().to_vec();
        let original = norm(&w);
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for q in &out {
                let c = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let n = norm(&w);
        if n < 1e-6 * original {
            return Err(Error::validation(format!(
                "vector {idx} is numerically dependent on its predecessors (residual {n:.3e})"
            )));
        }
        out.push(w.into_iter().map(|z| z / n).collect());
    }
    Ok(out.into_iter().map(Ket::from_normalized).collect())
}

/// Orthogonal projector onto the span of `vectors`.
pub fn span_projector(vectors: &[Ket]) -> Result<HermOp> {
    let basis = gram_schmidt(vectors)?;
    let dim = vectors.first().map(Ket::dim).unwrap_or(1);
    let mut p = HermOp::zeros(dim);
    for b in &basis {
        p += &b.projector();
    }
    Ok(p)
}
