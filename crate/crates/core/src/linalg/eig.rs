//! Cyclic Jacobi eigensolver for dense Hermitian matrices, plus the
//! spectral helpers built on it.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary, then applies the classical real symmetric Jacobi rotation. Sweeps
//! stop once the off-diagonal Frobenius mass drops below
//! `rel_tol * ||H||_F`.

use super::matrix::{ComplexMatrix, HermOp, Ket, C64, ZERO};
use crate::error::{Error, Result};

/// Spectral decomposition `H = sum_i values[i] |v_i><v_i|`, values descending.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Eigenvectors as the columns of a unitary matrix.
    pub vectors: ComplexMatrix,
}

/// Convergence controls for [`hermitian_eig_with`].
#[derive(Clone, Copy, Debug)]
pub struct JacobiOptions {
    pub rel_tol: f64,
    pub max_sweeps: usize,
}

impl Default for JacobiOptions {
    fn default() -> Self {
        JacobiOptions {
            rel_tol: 1e-14,
            max_sweeps: 100,
        }
    }
}

impl Eigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.vectors.column(i)
    }

    pub fn kets(&self) -> Vec<Ket> {
        (0..self.dim())
            .map(|i| Ket::from_normalized(self.vector(i)))
            .collect()
    }

    /// `V diag(f(lambda)) V^dagger`
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermOp {
        let n = self.dim();
        let v = &self.vectors;
        let fl: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let m = ComplexMatrix::from_fn(n, n, |i, j| {
            let mut acc = ZERO;
            for (k, &w) in fl.iter().enumerate() {
                if w != 0.0 {
                    acc += v[(i, k)] * v[(j, k)].conj() * w;
                }
            }
            acc
        });
        HermOp::symmetrized(&m)
    }

    pub fn reconstruct(&self) -> HermOp {
        self.map(|x| x)
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Eigenvector of the largest eigenvalue. Within a (numerically)
    /// degenerate top eigenspace the candidate whose moduli are
    /// lexicographically largest wins, so the choice is reproducible.
    pub fn top_vector(&self) -> Vec<C64> {
        let scale = self.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-12 * scale;
        let lead = self.values[0];
        let mut best = 0;
        for i in 1..self.dim() {
            if lead - self.values[i] > tol {
                break;
            }
            if lex_greater_moduli(&self.vectors, i, best) {
                best = i;
            }
        }
        self.vector(best)
    }
}

fn lex_greater_moduli(v: &ComplexMatrix, a: usize, b: usize) -> bool {
    for r in 0..v.rows() {
        let (x, y) = (v[(r, a)].norm(), v[(r, b)].norm());
        if (x - y).abs() > 1e-12 {
            return x > y;
        }
    }
    false
}

pub fn hermitian_eig(h: &HermOp) -> Result<Eigen> {
    hermitian_eig_with(h, JacobiOptions::default())
}

pub fn hermitian_eig_with(h: &HermOp, opts: JacobiOptions) -> Result<Eigen> {
    let n = h.dim();
    let mut a = h.matrix().clone();
    let mut v = ComplexMatrix::identity(n);
    let fro = a.frobenius_norm();
    let target = opts.rel_tol * fro;

    let mut converged = off_diagonal_norm(&a) <= target;
    let mut sweeps = 0;
    while !converged && sweeps < opts.max_sweeps {
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
        converged = off_diagonal_norm(&a) <= target;
    }
    if !converged {
        let residual = off_diagonal_norm(&a);
        return Err(Error::numeric(
            format!("Jacobi eigensolver did not converge in {} sweeps", opts.max_sweeps),
            residual,
        ));
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps equal eigenvalues in pivot order
    order.sort_by(|&i, &j| a[(j, j)].re.partial_cmp(&a[(i, i)].re).unwrap());
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, dst)] = v[(r, src)];
        }
    }
    Ok(Eigen { values, vectors })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // pivots this small no longer change either diagonal entry
    let g = 100.0 * mag;
    if app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
        a[(p, q)] = ZERO;
        a[(q, p)] = ZERO;
        return;
    }
    let phase = apq / mag; // e^{i phi}
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let ph_conj = phase.conj();
    let n = a.rows();

    // A <- A V with V = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] on columns p, q
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * ph_conj * s;
        a[(k, q)] = akp * s + akq * ph_conj * c;
    }
    // A <- V^dagger A on rows p, q
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * phase * s;
        a[(q, k)] = apk * s + aqk * phase * c;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * ph_conj * s;
        v[(k, q)] = vkp * s + vkq * ph_conj * c;
    }
}

pub fn max_eigenvalue(h: &HermOp) -> Result<f64> {
    Ok(hermitian_eig(h)?.max())
}

pub fn min_eigenvalue(h: &HermOp) -> Result<f64> {
    Ok(hermitian_eig(h)?.min())
}

/// Nearest PSD operator in Frobenius norm (negative eigenvalues clipped).
pub fn psd_projection(h: &HermOp) -> Result<HermOp> {
    Ok(hermitian_eig(h)?.map(|x| x.max(0.0)))
}

/// `H^{-1/2}` for positive definite `H`.
pub fn inverse_sqrt(h: &HermOp) -> Result<HermOp> {
    let e = hermitian_eig(h)?;
    if e.min() <= 0.0 {
        return Err(Error::numeric(
            "inverse square root of a non-positive-definite operator",
            e.min(),
        ));
    }
    Ok(e.map(|x| 1.0 / x.sqrt()))
}

/// Solves `A x = b` for Hermitian positive definite `A` by Cholesky.
/// Returns `None` when `A` is not numerically positive definite.
pub fn cholesky_solve(a: &ComplexMatrix, b: &[C64]) -> Option<Vec<C64>> {
    let l = cholesky(a)?;
    let n = a.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i].re;
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i].conj() * y[k];
        }
        y[i] = s / l[i * n + i].re;
    }
    Some(y)
}

/// Lower-triangular Cholesky factor (row-major), or `None` if `a` is not
/// positive definite.
pub fn cholesky(a: &ComplexMatrix) -> Option<Vec<C64>> {
    let n = a.rows();
    let mut l = vec![ZERO; n * n];
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[j * n + j] = C64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / djj;
        }
    }
    Some(l)
}

/// True when `h` admits a Cholesky factorization.
pub fn is_positive_definite(h: &HermOp) -> bool {
    cholesky(h.matrix()).is_some()
}

/// `log det` of a positive definite matrix from its Cholesky factor.
pub fn log_det_pd(h: &HermOp) -> Option<f64> {
    let n = h.dim();
    let l = cholesky(h.matrix())?;
    Some((0..n).map(|i| 2.0 * l[i * n + i].re.ln()).sum())
}
