//! A measurement as a see-saw block, with cheap ascent moves and exact
//! updates under each constraint.

use super::povm::{
    fixed_point_steps, projective_ascent, projective_povm, reassign_columns, solve_constrained,
    Constraint,
};
use crate::error::Result;
use crate::linalg::{hermitian_eig, ComplexMatrix, GaussianStream, HermOp};
use crate::strategies::Povm;

/// Weight of `I/n` mixed into the measurement before each block of
/// fixed-point steps, so that outcomes can change rank.
const DAMPING: f64 = 0.02;

#[derive(Clone, Debug)]
pub(crate) struct MeasVar {
    pub elements: Vec<HermOp>,
    /// Orthonormal basis, column `g` for outcome `g`, while the measurement
    /// is rank-one projective.
    pub basis: Option<ComplexMatrix>,
}

impl MeasVar {
    /// Projective measurement in the columns of `u`, column `j` assigned to
    /// outcome `labels[j]`.
    pub fn coarse_grained(u: &ComplexMatrix, labels: &[usize], outcomes: usize) -> Self {
        let elements = Povm::coarse_grained_basis(u, labels, outcomes).into_elements();
        let identity = outcomes == u.cols() && labels.iter().enumerate().all(|(j, &g)| j == g);
        MeasVar {
            elements,
            basis: identity.then(|| u.clone()),
        }
    }

    pub fn from_basis(u: ComplexMatrix) -> Self {
        let elements = projective_povm(&u).into_elements();
        MeasVar {
            elements,
            basis: Some(u),
        }
    }

    pub fn povm(&self) -> Povm {
        Povm::from_elements_unchecked(self.elements.clone())
    }

    pub fn objective(&self, b: &[HermOp]) -> f64 {
        self.elements.iter().zip(b).map(|(m, b)| m.inner(b)).sum()
    }

    /// A few cheap improvement steps.
    pub fn ascent(&mut self, b: &[HermOp], constraint: Constraint, steps: usize) -> Result<()> {
        match (constraint, self.basis.as_mut()) {
            (Constraint::Unconstrained, _) => {
                let n = self.elements[0].dim();
                let mix = HermOp::identity(n).scale(DAMPING / self.elements.len() as f64);
                let start = self
                    .elements
                    .iter()
                    .map(|m| {
                        let mut x = m.scale(1.0 - DAMPING);
                        x += &mix;
                        x
                    })
                    .collect();
                let (m, _) = fixed_point_steps(b, start, steps)?;
                self.elements = m;
                self.basis = None;
            }
            (_, Some(u)) => {
                let mut v = reassign_columns(b, u);
                projective_ascent(b, &mut v, steps, 1e-12)?;
                *self = MeasVar::from_basis(v);
            }
            (_, None) => {
                self.exact(b, constraint, super::CERTIFICATE_EPS)?;
            }
        }
        Ok(())
    }

    /// Exact block update; returns the certificate gap when one exists.
    pub fn exact(
        &mut self,
        b: &[HermOp],
        constraint: Constraint,
        certificate_eps: f64,
    ) -> Result<Option<f64>> {
        match (constraint, self.basis.as_mut()) {
            (Constraint::RankOneProjective, Some(u)) => {
                let mut v = reassign_columns(b, u);
                projective_ascent(b, &mut v, 20_000, 1e-10)?;
                *self = MeasVar::from_basis(v);
                Ok(None)
            }
            _ => {
                let start = self.povm();
                let sol = solve_constrained(b, constraint, Some(&start), certificate_eps)?;
                let basis = match constraint {
                    Constraint::RankOneProjective => Some(eigenbasis_of_projectors(&sol.povm)?),
                    _ => None,
                };
                self.elements = sol.povm.into_elements();
                self.basis = basis;
                Ok(sol.gap)
            }
        }
    }
}

/// Column `g` spans the range of the rank-one projector `M_g`.
fn eigenbasis_of_projectors(p: &Povm) -> Result<ComplexMatrix> {
    let n = p.dim();
    let mut u = ComplexMatrix::zeros(n, n);
    for (g, m) in p.elements().iter().enumerate() {
        u.set_column(g, &hermitian_eig(m)?.top_vector());
    }
    Ok(u)
}

/// `exp(i eps H) u` for a random Hermitian `H` with unit-variance entries.
pub(crate) fn perturb_basis(u: &ComplexMatrix, eps: f64, g: &mut GaussianStream) -> Result<ComplexMatrix> {
    let n = u.rows();
    let h = crate::linalg::random_hermitian(n, g);
    let e = hermitian_eig(&h)?;
    let v = &e.vectors;
    let r = ComplexMatrix::from_fn(n, n, |i, j| {
        let mut acc = crate::linalg::C64::new(0.0, 0.0);
        for (k, &l) in e.values.iter().enumerate() {
            acc += v[(i, k)] * crate::linalg::C64::from_polar(1.0, eps * l) * v[(j, k)].conj();
        }
        acc
    });
    Ok(&r * u)
}
