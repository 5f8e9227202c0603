//! Newton refinement of the POVM program once the rank of every optimal
//! element is known.
//!
//! With `M_g = A_g A_g^dagger` (`A_g` of size `n x r_g`) the optimality
//! conditions read
//!
//! ```text
//! (Y - B_g) A_g = 0   for every g,
//! Σ_g A_g A_g^dagger = I,
//! ```
//!
//! a square polynomial system up to the gauge `A_g -> A_g U_g`. It is solved
//! by damped Gauss-Newton started from a nearby interior point.

use crate::linalg::{cholesky_solve, hermitian_eig, ComplexMatrix, HermOp, C64, ZERO};

const SQRT2: f64 = std::f64::consts::SQRT_2;

struct Layout {
    n: usize,
    ranks: Vec<usize>,
    /// start of each `A_g` block in the unknown vector
    offsets: Vec<usize>,
    unknowns: usize,
    equations: usize,
}

impl Layout {
    fn new(n: usize, ranks: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(ranks.len());
        let mut at = n * n;
        for &r in ranks {
            offsets.push(at);
            at += 2 * n * r;
        }
        Layout {
            n,
            ranks: ranks.to_vec(),
            offsets,
            unknowns: at,
            equations: at,
        }
    }

    fn unpack(&self, z: &[f64]) -> (ComplexMatrix, Vec<ComplexMatrix>) {
        let y = herm_from_params(self.n, &z[..self.n * self.n]);
        let a = self
            .ranks
            .iter()
            .zip(&self.offsets)
            .map(|(&r, &o)| {
                ComplexMatrix::from_fn(self.n, r, |i, k| {
                    let p = o + 2 * (i * r + k);
                    C64::new(z[p], z[p + 1])
                })
            })
            .collect();
        (y, a)
    }

    fn pack(&self, y: &ComplexMatrix, a: &[ComplexMatrix]) -> Vec<f64> {
        let mut z = herm_params(y);
        for ag in a {
            for v in ag.as_slice() {
                z.push(v.re);
                z.push(v.im);
            }
        }
        z
    }
}

/// Real coordinates of a Hermitian matrix, off-diagonal pairs weighted by
/// `sqrt 2` so that the Euclidean norm matches the Frobenius norm.
fn herm_params(h: &ComplexMatrix) -> Vec<f64> {
    let n = h.rows();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(h[(i, i)].re);
        for j in (i + 1)..n {
            out.push(SQRT2 * h[(i, j)].re);
            out.push(SQRT2 * h[(i, j)].im);
        }
    }
    out
}

fn herm_from_params(n: usize, p: &[f64]) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(n, n);
    let mut at = 0;
    for i in 0..n {
        h[(i, i)] = C64::new(p[at], 0.0);
        at += 1;
        for j in (i + 1)..n {
            let v = C64::new(p[at], p[at + 1]) / SQRT2;
            h[(i, j)] = v;
            h[(j, i)] = v.conj();
            at += 2;
        }
    }
    h
}

fn push_complex(out: &mut Vec<f64>, m: &ComplexMatrix) {
    for v in m.as_slice() {
        out.push(v.re);
        out.push(v.im);
    }
}

fn residual(layout: &Layout, b: &[ComplexMatrix], y: &ComplexMatrix, a: &[ComplexMatrix]) -> Vec<f64> {
    let n = layout.n;
    let mut out = Vec::with_capacity(layout.equations);
    let mut total = ComplexMatrix::identity(n).scale(-1.0);
    for (bg, ag) in b.iter().zip(a) {
        push_complex(&mut out, &(&(y - bg) * ag));
        total += &(ag * &ag.adjoint());
    }
    out.extend(herm_params(&total));
    out
}

/// Derivative of [`residual`] at `(y, a)` in the direction `(dy, da)`.
fn linearized(
    layout: &Layout,
    b: &[ComplexMatrix],
    y: &ComplexMatrix,
    a: &[ComplexMatrix],
    dy: &ComplexMatrix,
    da: &[ComplexMatrix],
) -> Vec<f64> {
    let n = layout.n;
    let mut out = Vec::with_capacity(layout.equations);
    let mut total = ComplexMatrix::zeros(n, n);
    for ((bg, ag), dag) in b.iter().zip(a).zip(da) {
        let mut d = dy * ag;
        d += &(&(y - bg) * dag);
        push_complex(&mut out, &d);
        let cross = dag * &ag.adjoint();
        total += &cross;
        total += &cross.adjoint();
    }
    out.extend(herm_params(&total));
    out
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>()
}

/// Runs Levenberg-Marquardt on the optimality system. `m0` fixes the
/// starting factors through its top `ranks[g]` eigenpairs and `y0` the
/// starting dual point. Returns the refined elements `A_g A_g^dagger`, or
/// `None` when the residual does not reach rounding level. Outcomes of rank
/// zero get the zero element.
pub(crate) fn refine(b: &[HermOp], y0: &HermOp, m0: &[HermOp], ranks: &[usize]) -> Option<Vec<HermOp>> {
    let n = y0.dim();
    let active: Vec<usize> = (0..ranks.len()).filter(|&g| ranks[g] > 0).collect();
    let pick = |v: &[HermOp]| -> Vec<HermOp> { active.iter().map(|&g| v[g].clone()).collect() };
    let ranks_active: Vec<usize> = active.iter().map(|&g| ranks[g]).collect();
    let solved = refine_active(&pick(b), y0, &pick(m0), &ranks_active)?;
    let mut out = vec![HermOp::zeros(n); ranks.len()];
    for (g, mg) in active.into_iter().zip(solved) {
        out[g] = mg;
    }
    Some(out)
}

fn refine_active(b: &[HermOp], y0: &HermOp, m0: &[HermOp], ranks: &[usize]) -> Option<Vec<HermOp>> {
    let n = y0.dim();
    let layout = Layout::new(n, ranks);
    let bm: Vec<ComplexMatrix> = b.iter().map(|x| x.matrix().clone()).collect();
    let mut a0 = Vec::with_capacity(m0.len());
    for (mg, &r) in m0.iter().zip(ranks) {
        let e = hermitian_eig(mg).ok()?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| e.values[j].total_cmp(&e.values[i]));
        let ag = ComplexMatrix::from_fn(n, r, |i, k| {
            let col = order[k];
            e.vectors[(i, col)] * e.values[col].max(0.0).sqrt()
        });
        a0.push(ag);
    }
    let mut z = layout.pack(y0.matrix(), &a0);
    let scale = bm.iter().map(|x| x.max_abs()).fold(1.0f64, f64::max);
    let target = (1e-14 * scale).powi(2) * layout.equations as f64;

    let (y, a) = layout.unpack(&z);
    let mut f = residual(&layout, &bm, &y, &a);
    let mut cost = norm2(&f);
    let mut mu = 1e-10;
    for _ in 0..40 {
        if cost <= target {
            break;
        }
        let (y, a) = layout.unpack(&z);
        // Jacobian column by column
        let cols: Vec<Vec<f64>> = (0..layout.unknowns)
            .map(|j| {
                let mut e = vec![0.0; layout.unknowns];
                e[j] = 1.0;
                let (dy, da) = layout.unpack(&e);
                linearized(&layout, &bm, &y, &a, &dy, &da)
            })
            .collect();
        let nu = layout.unknowns;
        let mut jtj = ComplexMatrix::zeros(nu, nu);
        let mut jtf = vec![ZERO; nu];
        for p in 0..nu {
            for q in p..nu {
                let v: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                jtj[(p, q)] = C64::new(v, 0.0);
                jtj[(q, p)] = C64::new(v, 0.0);
            }
            jtf[p] = C64::new(-cols[p].iter().zip(&f).map(|(x, y)| x * y).sum::<f64>(), 0.0);
        }
        let diag_max = (0..nu).map(|p| jtj[(p, p)].re).fold(0.0f64, f64::max);
        let mut improved = false;
        while mu < 1e6 {
            let mut damped = jtj.clone();
            for p in 0..nu {
                damped[(p, p)] += C64::new(mu * diag_max, 0.0);
            }
            let Some(step) = cholesky_solve(&damped, &jtf) else {
                mu *= 10.0;
                continue;
            };
            let trial: Vec<f64> = z.iter().zip(&step).map(|(v, s)| v + s.re).collect();
            let (ty, ta) = layout.unpack(&trial);
            let tf = residual(&layout, &bm, &ty, &ta);
            let tc = norm2(&tf);
            if tc < cost {
                z = trial;
                f = tf;
                cost = tc;
                mu = (mu * 0.1).max(1e-16);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if !(cost <= 1e4 * target) {
        return None;
    }
    let (_, a) = layout.unpack(&z);
    Some(a.iter().map(|ag| HermOp::symmetrized(&(ag * &ag.adjoint()))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_coordinates_round_trip() {
        let h = ComplexMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                C64::new(i as f64, 0.0)
            } else if i < j {
                C64::new(1.0 + j as f64, -(i as f64))
            } else {
                C64::new(1.0 + i as f64, j as f64)
            }
        });
        let p = herm_params(&h);
        assert_eq!(p.len(), 9);
        assert!(herm_from_params(3, &p).max_abs_diff(&h) < 1e-15);
        let fro = h.frobenius_norm();
        assert!((norm2(&p).sqrt() - fro).abs() < 1e-12);
    }

    #[test]
    fn recovers_diagonal_optimum_from_a_rough_start() {
        // B_0 = diag(1, 0), B_1 = diag(0, 2): M_0 = |0><0|, M_1 = |1><1|, Y = diag(1, 2)
        let b = vec![
            HermOp::from_real_diagonal(&[1.0, 0.0]),
            HermOp::from_real_diagonal(&[0.0, 2.0]),
        ];
        let y0 = HermOp::from_real_diagonal(&[1.01, 2.02]);
        let m0 = vec![
            HermOp::from_real_diagonal(&[0.97, 0.02]),
            HermOp::from_real_diagonal(&[0.03, 0.98]),
        ];
        let m = refine(&b, &y0, &m0, &[1, 1]).unwrap();
        assert!(m[0].max_abs_diff(&HermOp::from_real_diagonal(&[1.0, 0.0])) < 1e-12);
        assert!(m[1].max_abs_diff(&HermOp::from_real_diagonal(&[0.0, 1.0])) < 1e-12);
    }
}
