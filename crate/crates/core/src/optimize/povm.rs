//! The measurement half of the see-saw: maximize `Σ_g Tr(B_g M_g)` over
//! POVMs `{M_g}`, optionally restricted to unit-trace elements or to
//! rank-one projective measurements.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    cholesky_solve, hermitian_eig, inverse_sqrt, log_det_pd, ComplexMatrix, HermOp, C64, ZERO,
};
use crate::strategies::Povm;

use super::kkt;

/// Feasible set for the measurement subproblem.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    /// Any POVM.
    #[default]
    Unconstrained,
    /// POVMs with `Tr M_g = 1` for every outcome.
    TraceOne,
    /// `M_g = |u_g><u_g|` for an orthonormal basis `{u_g}`.
    RankOneProjective,
}

/// Result of a measurement subproblem.
#[derive(Clone, Debug)]
pub struct PovmSolution {
    pub povm: Povm,
    /// `Σ_g Tr(B_g M_g)`
    pub value: f64,
    /// Duality gap of the returned point, when a certificate exists for
    /// the feasible set.
    pub gap: Option<f64>,
}

/// Default certification threshold for [`povm_update`].
pub const CERTIFICATE_EPS: f64 = 1e-7;

/// Unit-trace solutions are accepted with gaps up to this multiple of the
/// certification threshold.
pub const TRACE_ONE_GAP_FACTOR: f64 = 1e3;

fn check_operators(b: &[HermOp]) -> Result<usize> {
    let Some(first) = b.first() else {
        return Err(Error::domain("no outcome operators given"));
    };
    let n = first.dim();
    if n == 0 || b.iter().any(|x| x.dim() != n) {
        return Err(Error::domain("outcome operators differ in dimension"));
    }
    Ok(n)
}

fn objective(b: &[HermOp], m: &[HermOp]) -> f64 {
    b.iter().zip(m).map(|(b, m)| b.inner(m)).sum()
}

fn spectral_scale(b: &[HermOp]) -> Result<f64> {
    let mut s = 0.0f64;
    for x in b {
        let e = hermitian_eig(x)?;
        s = s.max(e.max().abs()).max(e.min().abs());
    }
    Ok(s)
}

fn max_eig(h: &HermOp) -> f64 {
    hermitian_eig(h).map(|e| e.max()).unwrap_or(f64::INFINITY)
}

/// Weak-duality gap of a feasible POVM.
///
/// The dual of the POVM program is `min Tr Y` subject to `Y ⪰ B_g` for all
/// `g`. The candidate `Y = Herm(Σ_g B_g M_g)` is lifted by the smallest
/// multiple of the identity that makes it dual feasible; the returned gap
/// bounds how far `povm` is from optimal.
pub fn povm_certificate(b: &[HermOp], povm: &Povm) -> f64 {
    let n = povm.dim();
    let mut acc = ComplexMatrix::zeros(n, n);
    for (bg, mg) in b.iter().zip(povm.elements()) {
        acc += &(bg.matrix() * mg.matrix());
    }
    let y = HermOp::symmetrized(&acc);
    let mut lift = 0.0f64;
    for bg in b {
        lift = lift.max(max_eig(&(bg - &y)));
    }
    y.trace() + n as f64 * lift - povm.objective(b)
}

/// Gap of a unit-trace POVM against the dual point `(Y, z)` of
/// `min Tr Y + Σ_g z_g` subject to `Y + z_g I ⪰ B_g`, lifted to feasibility.
fn trace_one_certificate(b: &[HermOp], m: &[HermOp], y: &HermOp, z: &[f64]) -> f64 {
    let n = y.dim();
    let mut lift = 0.0f64;
    for (bg, &zg) in b.iter().zip(z) {
        let mut s = bg - y;
        s.add_scaled(-zg, &HermOp::identity(n));
        lift = lift.max(max_eig(&s));
    }
    y.trace() + z.iter().sum::<f64>() + n as f64 * lift - objective(b, m)
}

/// Solves the POVM program to the default certification threshold.
pub fn povm_update(b: &[HermOp]) -> Result<(Povm, f64)> {
    let sol = solve_povm(b, None, CERTIFICATE_EPS)?;
    Ok((sol.povm, sol.value))
}

/// Solves the POVM program and certifies the answer.
///
/// A fixed-point iteration started from `start` (or `I/n`) is tried first;
/// if its certificate does not reach `certificate_eps`, a dual log-barrier
/// interior-point method takes over.
pub fn solve_povm(b: &[HermOp], start: Option<&Povm>, certificate_eps: f64) -> Result<PovmSolution> {
    let n = check_operators(b)?;
    let outcomes = b.len();
    if spectral_scale(b)? == 0.0 {
        let povm = Povm::uniform(n, outcomes);
        return Ok(PovmSolution {
            povm,
            value: 0.0,
            gap: Some(0.0),
        });
    }

    let init = match start {
        Some(p) if p.dim() == n && p.outcomes() == outcomes => p.elements().to_vec(),
        _ => vec![HermOp::identity(n).scale(1.0 / outcomes as f64); outcomes],
    };
    let (m, _) = fixed_point_steps(b, init, 200)?;
    let povm = Povm::from_elements_unchecked(m);
    let gap = povm_certificate(b, &povm);
    if gap <= certificate_eps {
        let value = povm.objective(b);
        return Ok(PovmSolution {
            povm,
            value,
            gap: Some(gap),
        });
    }

    let mut best = Best::new();
    best.offer(povm.into_elements(), gap, 0.0);
    let target = 0.01 * certificate_eps;
    dual_barrier(b, false, |point| {
        let recovered = normalize_povm(point.primal.clone())?;
        let g0 = povm_certificate(b, &Povm::from_elements_unchecked(recovered.clone()));
        if let Some(refined) = refine_on_support(b, point, &recovered) {
            let g = povm_certificate(b, &Povm::from_elements_unchecked(refined.clone()));
            if g < g0 && best.offer(refined, g, target) {
                return Ok(true);
            }
        }
        let (polished, _) = fixed_point_steps(b, recovered.clone(), 50)?;
        let g1 = povm_certificate(b, &Povm::from_elements_unchecked(polished.clone()));
        Ok(if g1 < g0 {
            best.offer(polished, g1, target)
        } else {
            best.offer(recovered, g0, target)
        })
    })?;
    let gap = best.gap;
    let povm = Povm::from_elements_unchecked(best.m.take().unwrap());
    if !(gap <= certificate_eps) {
        return Err(Error::numeric(
            "POVM subproblem could not be certified",
            gap,
        ));
    }
    let value = povm.objective(b);
    Ok(PovmSolution {
        povm,
        value,
        gap: Some(gap),
    })
}

/// Reads the rank of every element off a barrier point and hands it to the
/// Newton refinement. Eigenvalues that vanish along the path scale like
/// `1/t`, the surviving ones stay bounded.
fn refine_on_support(b: &[HermOp], point: &DualPoint, m: &[HermOp]) -> Option<Vec<HermOp>> {
    let n = m[0].dim();
    let cut = point.t.sqrt().recip();
    let mut ranks = Vec::with_capacity(m.len());
    for mg in m {
        let e = hermitian_eig(mg).ok()?;
        ranks.push(e.values.iter().filter(|&&v| v > cut).count());
    }
    if ranks.iter().sum::<usize>() < n {
        return None;
    }
    let refined = kkt::refine(b, &point.y, m, &ranks)?;
    normalize_povm(refined).ok()
}

/// `M_g ← T^{-1/2} M_g T^{-1/2}` with `T = Σ_g M_g`.
pub(crate) fn normalize_povm(m: Vec<HermOp>) -> Result<Vec<HermOp>> {
    let n = m[0].dim();
    let mut total = HermOp::zeros(n);
    for x in &m {
        total += x;
    }
    let r = inverse_sqrt(&total)?;
    Ok(m.iter().map(|x| x.conjugate_by(r.matrix())).collect())
}

/// Iterates `M_g ← L^{-1/2} B'_g M_g B'_g L^{-1/2}` with `L = Σ_g B'_g M_g B'_g`
/// and `B'_g = B_g + c I` shifted to be positive definite. Every iterate is
/// a POVM; iteration stops at the first step that does not increase the
/// objective. Returns the last accepted point and its objective.
pub(crate) fn fixed_point_steps(
    b: &[HermOp],
    start: Vec<HermOp>,
    steps: usize,
) -> Result<(Vec<HermOp>, f64)> {
    let n = b[0].dim();
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    for x in b {
        let e = hermitian_eig(x)?;
        lo = lo.min(e.min());
        hi = hi.max(e.max().abs());
    }
    let shift = -lo + 1e-3 * hi.max(-lo).max(f64::MIN_POSITIVE);
    let shifted: Vec<ComplexMatrix> = b
        .iter()
        .map(|x| {
            let mut s = x.matrix().clone();
            s.add_scaled(shift, &ComplexMatrix::identity(n));
            s
        })
        .collect();

    let mut m = start;
    let mut f = objective(b, &m);
    for _ in 0..steps {
        let parts: Vec<ComplexMatrix> = shifted
            .iter()
            .zip(&m)
            .map(|(s, mg)| &(s * mg.matrix()) * s)
            .collect();
        let mut l = ComplexMatrix::zeros(n, n);
        for p in &parts {
            l += p;
        }
        let Ok(r) = inverse_sqrt(&HermOp::symmetrized(&l)) else {
            break;
        };
        let next: Vec<HermOp> = parts
            .iter()
            .map(|p| HermOp::symmetrized(&(&(r.matrix() * p) * r.matrix())))
            .collect();
        let fn_ = objective(b, &next);
        if !(fn_ >= f) {
            break;
        }
        let stalled = fn_ - f <= 1e-15 * f.abs().max(1.0);
        m = next;
        f = fn_;
        if stalled {
            break;
        }
    }
    Ok((m, f))
}

/// A centered point of the dual barrier path, in the caller's units.
struct DualPoint {
    /// `W_g / t`, the unnormalized primal estimate.
    primal: Vec<HermOp>,
    y: HermOp,
    z: Vec<f64>,
    /// barrier parameter in scaled units
    t: f64,
}

/// Row-major vectorization, `vec(X)[i n + j] = X(i, j)`.
fn vec_of(m: &ComplexMatrix) -> Vec<C64> {
    m.as_slice().to_vec()
}

/// Dual log-barrier path following for
///
/// `min Tr Y (+ Σ_g z_g)  s.t.  Y (+ z_g I) − B_g ⪰ 0`,
///
/// the `z` block present only for the unit-trace program (with the last
/// `z` pinned to zero, since shifting `Y` by `αI` and every `z_g` by `−α`
/// leaves the program unchanged). After each centering stage whose barrier
/// gap `n m / t` is below `1e-3` the point is handed to `on_center`, which
/// returns `true` to stop. Recovered primal points lose accuracy once the
/// slack eigenvalues approach rounding level, so the caller decides when
/// the path has gone far enough.
fn dual_barrier(
    b: &[HermOp],
    trace_one: bool,
    mut on_center: impl FnMut(&DualPoint) -> Result<bool>,
) -> Result<()> {
    let n = b[0].dim();
    let m = b.len();
    let free = if trace_one { m - 1 } else { 0 };
    let sigma = spectral_scale(b)?;
    let bs: Vec<HermOp> = b.iter().map(|x| x.scale(1.0 / sigma)).collect();
    let eye = HermOp::identity(n);

    let top = bs.iter().map(max_eig).fold(f64::NEG_INFINITY, f64::max);
    let mut y = eye.scale(top + 1.0);
    let mut z = vec![0.0; m];
    let mut t = m as f64;

    let slacks = |y: &HermOp, z: &[f64]| -> Vec<HermOp> {
        bs.iter()
            .zip(z)
            .map(|(bg, &zg)| {
                let mut s = y - bg;
                if zg != 0.0 {
                    s.add_scaled(zg, &eye);
                }
                s
            })
            .collect()
    };

    let nn = n * n;
    let mut offered = false;
    while t < 1e14 {
        for _ in 0..100 {
            let s = slacks(&y, &z);
            let mut w = Vec::with_capacity(m);
            for sg in &s {
                w.push(hermitian_eig(sg)?.map(|x| 1.0 / x));
            }
            let mut grad = eye.scale(t);
            for wg in &w {
                grad.add_scaled(-1.0, wg);
            }
            let r: Vec<f64> = w.iter().take(free).map(|wg| t - wg.trace()).collect();

            // Hessian of the Y block: X -> Σ_g W_g X W_g
            let mut k = ComplexMatrix::zeros(nn, nn);
            for wg in &w {
                let wm = wg.matrix();
                for i in 0..n {
                    for kk in 0..n {
                        let wik = wm[(i, kk)];
                        for j in 0..n {
                            let row = i * n + j;
                            for l in 0..n {
                                k[(row, kk * n + l)] += wik * wm[(l, j)];
                            }
                        }
                    }
                }
            }
            let mut rhs: Vec<C64> = vec_of(grad.matrix()).iter().map(|v| -v).collect();
            // eliminate the z block through its Schur complement
            let mut w2s = Vec::with_capacity(free);
            for (wg, &rg) in w.iter().zip(&r) {
                let w2 = HermOp::symmetrized(&(wg.matrix() * wg.matrix()));
                let h = w2.trace();
                let v = vec_of(w2.matrix());
                for p in 0..nn {
                    for q in 0..nn {
                        k[(p, q)] -= v[p] * v[q].conj() / h;
                    }
                    rhs[p] += v[p] * (rg / h);
                }
                w2s.push((w2, h));
            }
            let Some(sol) = cholesky_solve(&k, &rhs) else {
                if offered {
                    // rounding has caught up with the path; keep what we have
                    return Ok(());
                }
                return Err(Error::numeric("barrier Newton system is singular", t));
            };
            let dy = HermOp::symmetrized(&ComplexMatrix::from_row_major(n, n, sol)?);
            let mut dz = vec![0.0; m];
            for (g, ((w2, h), &rg)) in w2s.iter().zip(&r).enumerate() {
                dz[g] = (-rg - w2.inner(&dy)) / h;
            }
            let dec = -(grad.inner(&dy) + r.iter().zip(&dz).map(|(a, b)| a * b).sum::<f64>());
            if !(dec > 1e-10) {
                break;
            }

            // compare barrier values through differences; the absolute
            // values are dominated by t Tr Y
            let logdet0: Vec<f64> = s.iter().map(|x| log_det_pd(x).unwrap_or(f64::NAN)).collect();
            let dtr = dy.trace() + dz.iter().sum::<f64>();
            let mut step = 1.0;
            let mut accepted = false;
            while step > 1e-14 {
                let mut y1 = y.clone();
                y1.add_scaled(step, &dy);
                let z1: Vec<f64> = z.iter().zip(&dz).map(|(a, b)| a + step * b).collect();
                let mut change = t * step * dtr;
                let mut feasible = true;
                for (x, l0) in slacks(&y1, &z1).iter().zip(&logdet0) {
                    match log_det_pd(x) {
                        Some(l1) => change -= l1 - l0,
                        None => {
                            feasible = false;
                            break;
                        }
                    }
                }
                if feasible && change <= -0.25 * step * dec {
                    y = y1;
                    z = z1;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if (n * m) as f64 / t < 1e-3 {
            let mut primal = Vec::with_capacity(m);
            for sg in &slacks(&y, &z) {
                primal.push(hermitian_eig(sg)?.map(|x| 1.0 / (t * x)));
            }
            let point = DualPoint {
                primal,
                y: y.scale(sigma),
                z: z.iter().map(|v| v * sigma).collect(),
                t,
            };
            offered = true;
            if on_center(&point)? {
                return Ok(());
            }
        }
        t *= 20.0;
    }
    Ok(())
}

/// Keeps the candidate with the smallest gap.
struct Best {
    m: Option<Vec<HermOp>>,
    gap: f64,
    worse_in_a_row: usize,
}

impl Best {
    fn new() -> Self {
        Best {
            m: None,
            gap: f64::INFINITY,
            worse_in_a_row: 0,
        }
    }

    /// Records a candidate; returns `true` once searching further is
    /// pointless (target met, or two consecutive stages without progress).
    fn offer(&mut self, m: Vec<HermOp>, gap: f64, target: f64) -> bool {
        if gap < self.gap {
            self.m = Some(m);
            self.gap = gap;
            self.worse_in_a_row = 0;
        } else {
            self.worse_in_a_row += 1;
        }
        self.gap <= target || self.worse_in_a_row >= 2
    }
}

/// Euclidean projection onto `{Σ_g M_g = I, Tr M_g = 1}` (requires as many
/// outcomes as dimensions).
fn project_affine(x: &[HermOp]) -> Vec<HermOp> {
    let n = x[0].dim();
    let m = x.len() as f64;
    let eye = HermOp::identity(n);
    let mut lambda = HermOp::zeros(n);
    for xg in x {
        lambda += xg;
    }
    lambda.add_scaled(-1.0, &eye);
    let lambda = lambda.scale(1.0 / m);
    let tl = lambda.trace();
    x.iter()
        .map(|xg| {
            let nu = (xg.trace() - tl - 1.0) / n as f64;
            let mut out = xg - &lambda;
            out.add_scaled(-nu, &eye);
            out
        })
        .collect()
}

fn min_eig_all(x: &[HermOp]) -> Result<f64> {
    let mut lo = f64::INFINITY;
    for xg in x {
        lo = lo.min(hermitian_eig(xg)?.min());
    }
    Ok(lo)
}

/// Dykstra's alternating projections onto the PSD cone and the unit-trace
/// POVM affine set, stopping once the affine iterate is PSD to `1e-11`.
fn dykstra_trace_one(x: Vec<HermOp>) -> Result<Vec<HermOp>> {
    let mut cur = project_affine(&x);
    if min_eig_all(&cur)? >= -1e-11 {
        return Ok(cur);
    }
    let n = x[0].dim();
    let mut p = vec![HermOp::zeros(n); x.len()];
    for _ in 0..10_000 {
        let mut psd = Vec::with_capacity(cur.len());
        for (c, pg) in cur.iter().zip(&p) {
            psd.push(hermitian_eig(&(c + pg))?.map(|v| v.max(0.0)));
        }
        for ((pg, c), y) in p.iter_mut().zip(&cur).zip(&psd) {
            *pg = &(&*pg + c) - y;
        }
        cur = project_affine(&psd);
        if min_eig_all(&cur)? >= -1e-11 {
            return Ok(cur);
        }
    }
    Err(Error::numeric(
        "alternating projections did not reach the unit-trace POVM set",
        -min_eig_all(&cur)?,
    ))
}

/// Solves the unit-trace POVM program with a certificate.
fn solve_trace_one(b: &[HermOp], certificate_eps: f64) -> Result<PovmSolution> {
    let n = check_operators(b)?;
    if b.len() != n {
        return Err(Error::domain(format!(
            "unit-trace measurements need as many outcomes as dimensions ({} vs {n})",
            b.len()
        )));
    }
    if spectral_scale(b)? == 0.0 {
        return Ok(PovmSolution {
            povm: Povm::uniform(n, n),
            value: 0.0,
            gap: Some(0.0),
        });
    }
    let mut best = Best::new();
    let target = 0.01 * certificate_eps;
    dual_barrier(b, true, |point| {
        let m = dykstra_trace_one(point.primal.clone())?;
        let gap = trace_one_certificate(b, &m, &point.y, &point.z);
        // second dual candidate: keep z, rebuild Y from complementary slackness
        let n = m[0].dim();
        let mut acc = ComplexMatrix::zeros(n, n);
        for ((bg, mg), &zg) in b.iter().zip(&m).zip(&point.z) {
            let mut sh = bg.clone();
            sh.add_scaled(-zg, &HermOp::identity(n));
            acc += &(sh.matrix() * mg.matrix());
        }
        let y2 = HermOp::symmetrized(&acc);
        let gap2 = trace_one_certificate(b, &m, &y2, &point.z);
        let gap = gap.min(gap2);
        Ok(best.offer(m, gap, target))
    })?;
    let gap = best.gap;
    let Some(m) = best.m.take() else {
        return Err(Error::numeric("unit-trace barrier produced no point", f64::INFINITY));
    };
    // the recovered primal point is only as accurate as the smallest slack
    // eigenvalues allow, so the unit-trace program is held to a looser bar
    if !(gap <= TRACE_ONE_GAP_FACTOR * certificate_eps) {
        return Err(Error::numeric(
            "unit-trace subproblem could not be certified",
            gap,
        ));
    }
    let value = objective(b, &m);
    Ok(PovmSolution {
        povm: Povm::from_elements_unchecked(m),
        value,
        gap: Some(gap),
    })
}

/// Maximum-weight perfect matching on a square score matrix
/// (`score[r][c]`); returns the column assigned to each row.
pub(crate) fn best_assignment(score: &[Vec<f64>]) -> Vec<usize> {
    // Hungarian method with potentials on costs −score, 1-based sentinels
    let n = score.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r = owner[col0];
            let mut delta = inf;
            let mut col1 = 0;
            for c in 1..=n {
                if !used[c] {
                    let cur = -score[r - 1][c - 1] - u[r] - v[c];
                    if cur < minv[c] {
                        minv[c] = cur;
                        way[c] = col0;
                    }
                    if minv[c] < delta {
                        delta = minv[c];
                        col1 = c;
                    }
                }
            }
            for c in 0..=n {
                if used[c] {
                    u[owner[c]] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for c in 1..=n {
        assign[owner[c] - 1] = c - 1;
    }
    assign
}

/// `Σ_g <u_g|B_g|u_g>` for the columns `u_g` of `u`.
fn projective_value(b: &[HermOp], u: &ComplexMatrix) -> f64 {
    b.iter()
        .enumerate()
        .map(|(g, bg)| bg.expectation(&u.column(g)))
        .sum()
}

/// Reorders the columns of `u` so that the assignment of basis vectors to
/// outcomes maximizes the objective.
pub(crate) fn reassign_columns(b: &[HermOp], u: &ComplexMatrix) -> ComplexMatrix {
    let n = u.rows();
    let cols: Vec<Vec<C64>> = (0..n).map(|j| u.column(j)).collect();
    let score: Vec<Vec<f64>> = b
        .iter()
        .map(|bg| cols.iter().map(|c| bg.expectation(c)).collect())
        .collect();
    let assign = best_assignment(&score);
    let mut out = ComplexMatrix::zeros(n, n);
    for (g, &j) in assign.iter().enumerate() {
        out.set_column(g, &cols[j]);
    }
    out
}

/// Riemannian gradient ascent of `Σ_g <u_g|B_g|u_g>` over unitaries with
/// the polar retraction. Returns the final value and whether the gradient
/// norm fell below `tol`.
pub(crate) fn projective_ascent(
    b: &[HermOp],
    u: &mut ComplexMatrix,
    max_steps: usize,
    tol: f64,
) -> Result<(f64, bool)> {
    let n = u.rows();
    let mut f = projective_value(b, u);
    let mut eta = 1.0 / spectral_scale(b)?.max(f64::MIN_POSITIVE);
    for _ in 0..max_steps {
        // G = [B_g u_g], Omega = skew(U^dagger G)
        let mut g = ComplexMatrix::zeros(n, n);
        for (k, bg) in b.iter().enumerate() {
            g.set_column(k, &bg.matrix().matvec(&u.column(k)));
        }
        let x = &u.adjoint() * &g;
        let omega = ComplexMatrix::from_fn(n, n, |i, j| (x[(i, j)] - x[(j, i)].conj()) * 0.5);
        let norm2 = omega.frobenius_norm().powi(2);
        if norm2.sqrt() < tol {
            return Ok((f, true));
        }
        // i Omega is Hermitian; the polar factor of I + eta Omega is diagonal
        // in its eigenbasis
        let e = hermitian_eig(&HermOp::symmetrized(&omega.scale_complex(C64::new(0.0, 1.0))))?;
        let mut accepted = false;
        while eta > 1e-16 {
            let phases: Vec<C64> = e
                .values
                .iter()
                .map(|&l| {
                    let z = C64::new(1.0, -eta * l);
                    z / z.norm()
                })
                .collect();
            let v = &e.vectors;
            let r = ComplexMatrix::from_fn(n, n, |i, j| {
                let mut acc = ZERO;
                for (k, p) in phases.iter().enumerate() {
                    acc += v[(i, k)] * p * v[(j, k)].conj();
                }
                acc
            });
            let cand = &*u * &r;
            let fc = projective_value(b, &cand);
            if fc >= f + 1e-4 * eta * 2.0 * norm2 {
                *u = cand;
                f = fc;
                eta *= 2.0;
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            // no measurable ascent remains at working precision
            return Ok((f, true));
        }
    }
    Ok((f, false))
}

pub(crate) fn projective_povm(u: &ComplexMatrix) -> Povm {
    let n = u.rows();
    Povm::from_elements_unchecked((0..n).map(|g| HermOp::projector(&u.column(g))).collect())
}

/// Solves the measurement subproblem under `constraint`.
pub fn povm_update_constrained(b: &[HermOp], constraint: Constraint) -> Result<(Povm, f64)> {
    let sol = solve_constrained(b, constraint, None, CERTIFICATE_EPS)?;
    Ok((sol.povm, sol.value))
}

pub(crate) fn solve_constrained(
    b: &[HermOp],
    constraint: Constraint,
    start: Option<&Povm>,
    certificate_eps: f64,
) -> Result<PovmSolution> {
    match constraint {
        Constraint::Unconstrained => solve_povm(b, start, certificate_eps),
        Constraint::TraceOne => solve_trace_one(b, certificate_eps),
        Constraint::RankOneProjective => {
            let n = check_operators(b)?;
            if b.len() != n {
                return Err(Error::domain(format!(
                    "a basis measurement needs as many outcomes as dimensions ({} vs {n})",
                    b.len()
                )));
            }
            let mut total = HermOp::zeros(n);
            for x in b {
                total += x;
            }
            let basis = hermitian_eig(&total)?.vectors;
            let mut u = reassign_columns(b, &basis);
            let (value, converged) = projective_ascent(b, &mut u, 20_000, 1e-10)?;
            if !converged {
                return Err(Error::numeric(
                    "Riemannian ascent did not converge",
                    value,
                ));
            }
            Ok(PovmSolution {
                povm: projective_povm(&u),
                value,
                gap: None,
            })
        }
    }
}
