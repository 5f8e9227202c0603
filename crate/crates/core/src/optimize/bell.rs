//! See-saw over entanglement-assisted strategies.
//!
//! The Bell payoff is `Σ w(a,b,x,y) <psi| A_x^a ⊗ B_y^b |psi>` with weights
//! obtained by averaging the score over `x0` through the encoding
//! `m = x0 + a`, `g = m − b`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::measure::MeasVar;
use super::{drive, OptimizationReport, SeesawConfig, SeesawPoint, StartKind};
use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::linalg::{
    hermitian_eig, kron, random_unitary_from, ComplexMatrix, GaussianStream, HermOp, Ket, C64,
};
use crate::strategies::{behavior_from_bell, evaluate_bell, maximally_entangled, BellStrategy};

/// Which party's measurement operators to reduce to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

/// `w[((x * 2 + y) * d + a) * d + b] = (1/4d) Σ_{x0} s(x0 + a − b | x0, x, y)`.
pub fn bell_weights(game: &GameSpec) -> Vec<f64> {
    let d = game.dim();
    let mut w = vec![0.0; 4 * d * d];
    let norm = 1.0 / (4 * d) as f64;
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..d {
                for b in 0..d {
                    let mut acc = 0.0;
                    for x0 in 0..d {
                        let g = (x0 + a + d - b) % d;
                        acc += game.score(g, x0, x, y);
                    }
                    w[((x * 2 + y) * d + a) * d + b] = acc * norm;
                }
            }
        }
    }
    w
}

fn weight(w: &[f64], d: usize, a: usize, b: usize, x: usize, y: usize) -> f64 {
    w[((x * 2 + y) * d + a) * d + b]
}

fn psi_matrix(psi: &[C64], d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |i, k| psi[i * d + k])
}

/// Alice's operators `R_x^a = Σ_{y,b} w(a,b,x,y) Psi conj(B_y^b) Psi^dagger`,
/// indexed `[x][a]`, so the payoff is `Σ Tr(A_x^a R_x^a)`.
fn alice_operators(w: &[f64], d: usize, psi: &ComplexMatrix, bob: [&[HermOp]; 2]) -> Vec<Vec<HermOp>> {
    let psi_adj = psi.adjoint();
    let reduced: Vec<Vec<HermOp>> = bob
        .iter()
        .map(|elems| {
            elems
                .iter()
                .map(|e| {
                    let conj = ComplexMatrix::from_fn(d, d, |i, j| e.matrix()[(i, j)].conj());
                    HermOp::symmetrized(&(&(psi * &conj) * &psi_adj))
                })
                .collect()
        })
        .collect();
    (0..2)
        .map(|x| {
            (0..d)
                .map(|a| {
                    let mut r = HermOp::zeros(d);
                    for (y, ops) in reduced.iter().enumerate() {
                        for (b, op) in ops.iter().enumerate() {
                            let c = weight(w, d, a, b, x, y);
                            if c != 0.0 {
                                r.add_scaled(c, op);
                            }
                        }
                    }
                    r
                })
                .collect()
        })
        .collect()
}

/// Bob's operators `R_y^b = Σ_{x,a} w(a,b,x,y) (Psi^dagger A_x^a Psi)^T`,
/// indexed `[y][b]`.
fn bob_operators(w: &[f64], d: usize, psi: &ComplexMatrix, alice: [&[HermOp]; 2]) -> Vec<Vec<HermOp>> {
    let psi_adj = psi.adjoint();
    let reduced: Vec<Vec<HermOp>> = alice
        .iter()
        .map(|elems| {
            elems
                .iter()
                .map(|e| HermOp::symmetrized(&(&(&psi_adj * e.matrix()) * psi).transpose()))
                .collect()
        })
        .collect();
    (0..2)
        .map(|y| {
            (0..d)
                .map(|b| {
                    let mut r = HermOp::zeros(d);
                    for (x, ops) in reduced.iter().enumerate() {
                        for (a, op) in ops.iter().enumerate() {
                            let c = weight(w, d, a, b, x, y);
                            if c != 0.0 {
                                r.add_scaled(c, op);
                            }
                        }
                    }
                    r
                })
                .collect()
        })
        .collect()
}

/// Operators `R` such that the Bell payoff equals `Σ Tr(E · R)` over the
/// chosen party's measurement elements `E`, indexed `[setting][outcome]`.
pub fn bell_reduced_operators(
    game: &GameSpec,
    strat: &BellStrategy,
    party: Party,
) -> Result<Vec<Vec<HermOp>>> {
    let d = game.dim();
    if strat.dim() != d {
        return Err(Error::domain(format!(
            "strategy has dimension {}, game has {d}",
            strat.dim()
        )));
    }
    let w = bell_weights(game);
    let psi = psi_matrix(strat.psi().amplitudes(), d);
    Ok(match party {
        Party::Alice => {
            let bob = strat.bob_measurements();
            alice_operators(&w, d, &psi, [bob[0].elements(), bob[1].elements()])
        }
        Party::Bob => {
            let alice = strat.alice_measurements();
            bob_operators(&w, d, &psi, [alice[0].elements(), alice[1].elements()])
        }
    })
}

/// `Σ_{x,y,a,b} w(a,b,x,y) A_x^a ⊗ B_y^b`
fn bell_operator(w: &[f64], d: usize, alice: [&[HermOp]; 2], bob: [&[HermOp]; 2]) -> Result<HermOp> {
    let mut total = ComplexMatrix::zeros(d * d, d * d);
    for (x, a_elems) in alice.iter().enumerate() {
        for (y, b_elems) in bob.iter().enumerate() {
            for (a, ea) in a_elems.iter().enumerate() {
                let mut c = HermOp::zeros(d);
                for (b, eb) in b_elems.iter().enumerate() {
                    let wt = weight(w, d, a, b, x, y);
                    if wt != 0.0 {
                        c.add_scaled(wt, eb);
                    }
                }
                total += &kron(ea.matrix(), c.matrix())?;
            }
        }
    }
    Ok(HermOp::symmetrized(&total))
}

#[derive(Clone)]
struct BellPoint {
    w: std::sync::Arc<Vec<f64>>,
    d: usize,
    psi: Vec<C64>,
    alice: [MeasVar; 2],
    bob: [MeasVar; 2],
}

fn elems(m: &[MeasVar; 2]) -> [&[HermOp]; 2] {
    [&m[0].elements, &m[1].elements]
}

impl SeesawPoint for BellPoint {
    fn sweep(&mut self, _game: &GameSpec, cfg: &SeesawConfig, exact: bool) -> Result<(f64, Vec<f64>)> {
        let d = self.d;
        let op = bell_operator(&self.w, d, elems(&self.alice), elems(&self.bob))?;
        self.psi = hermitian_eig(&op)?.top_vector();
        let psi = psi_matrix(&self.psi, d);
        let mut gaps = Vec::new();

        let ra = alice_operators(&self.w, d, &psi, elems(&self.bob));
        for (m, r) in self.alice.iter_mut().zip(&ra) {
            if exact {
                gaps.extend(m.exact(r, cfg.constraint, cfg.certificate_eps)?);
            } else {
                m.ascent(r, cfg.constraint, cfg.ascent_steps)?;
            }
        }
        let rb = bob_operators(&self.w, d, &psi, elems(&self.alice));
        let mut value = 0.0;
        for (m, r) in self.bob.iter_mut().zip(&rb) {
            if exact {
                gaps.extend(m.exact(r, cfg.constraint, cfg.certificate_eps)?);
            } else {
                m.ascent(r, cfg.constraint, cfg.ascent_steps)?;
            }
            value += m.objective(r);
        }
        Ok((value, gaps))
    }
}

impl BellPoint {
    fn strategy(&self) -> Result<BellStrategy> {
        let psi = Ket::new(self.psi.clone())?;
        Ok(BellStrategy::from_parts_unchecked(
            self.d,
            psi,
            [self.alice[0].povm(), self.alice[1].povm()],
            [self.bob[0].povm(), self.bob[1].povm()],
        ))
    }
}

/// Columns `(1/√d) Σ_j exp(2πi j (a + shift) / d) |j>`.
fn fourier_basis(d: usize, shift: f64) -> ComplexMatrix {
    let s = 1.0 / (d as f64).sqrt();
    ComplexMatrix::from_fn(d, d, |j, a| {
        let phase = 2.0 * std::f64::consts::PI * j as f64 * (a as f64 + shift) / d as f64;
        C64::from_polar(s, phase)
    })
}

fn start_kind(r: usize, warm: bool) -> StartKind {
    if warm && r < 2 {
        StartKind::FourierBell
    } else if r % 2 == 1 {
        StartKind::RandomCoarseGrained
    } else {
        StartKind::RandomBasis
    }
}

fn initial_point(
    w: &std::sync::Arc<Vec<f64>>,
    d: usize,
    r: usize,
    kind: StartKind,
    unconstrained: bool,
    rng: &mut GaussianStream,
) -> BellPoint {
    let all: Vec<usize> = (0..d).collect();
    let (alice, bob) = match kind {
        StartKind::FourierBell => {
            // the second Fourier start mirrors Bob's phases
            let sign = if r == 0 { 1.0 } else { -1.0 };
            (
                [0.0, 0.5].map(|s| MeasVar::from_basis(fourier_basis(d, s))),
                [0.25, -0.25].map(|s| MeasVar::from_basis(fourier_basis(d, sign * s))),
            )
        }
        StartKind::RandomCoarseGrained if unconstrained => {
            let mut make = || {
                let u = random_unitary_from(d, rng);
                let labels: Vec<usize> = (0..d).map(|_| rng.below(d)).collect();
                MeasVar::coarse_grained(&u, &labels, d)
            };
            ([make(), make()], [make(), make()])
        }
        _ => {
            let mut make = || MeasVar::coarse_grained(&random_unitary_from(d, rng), &all, d);
            ([make(), make()], [make(), make()])
        }
    };
    BellPoint {
        w: w.clone(),
        d,
        psi: maximally_entangled(d).into_amplitudes(),
        alice,
        bob,
    }
}

/// Multi-restart see-saw for the Bell payoff.
pub fn seesaw_bell(game: &GameSpec, cfg: &SeesawConfig) -> Result<OptimizationReport<BellStrategy>> {
    cfg.validate()?;
    let started = Instant::now();
    let d = game.dim();
    if d * d > crate::linalg::MAX_OPERATOR_DIM {
        return Err(Error::Capability(format!(
            "Bell see-saw needs operators of dimension {} (cap {})",
            d * d,
            crate::linalg::MAX_OPERATOR_DIM
        )));
    }
    let w = std::sync::Arc::new(bell_weights(game));
    let unconstrained = cfg.constraint == super::Constraint::Unconstrained;
    let kinds: Vec<StartKind> = (0..cfg.restarts)
        .map(|r| start_kind(r, cfg.classical_warm_start))
        .collect();
    let (point, best, traces) = drive(
        game,
        cfg,
        |r| kinds[r],
        |r, kind, rng| Ok(initial_point(&w, d, r, kind, unconstrained, rng)),
    )?;
    let strategy = point.strategy()?;
    let best_value = evaluate_bell(game, &behavior_from_bell(&strategy)?)?;
    Ok(OptimizationReport {
        best_value,
        best_strategy: strategy,
        best_restart: best,
        traces,
        seed: cfg.seed,
        wall_time: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{build_game, coefficient_c, mod_d};
    use crate::linalg::Tolerances;
    use crate::strategies::Povm;

    fn closed_form(d: usize, a: usize, b: usize, x: usize, y: usize) -> f64 {
        let sign = if (x + y) % 2 == 0 { 1 } else { -1 };
        let diff = mod_d(a as i64 - b as i64, d);
        let xy = (x * y) as i64;
        let mut acc = 0.0;
        for k in 0..d / 2 {
            let c = coefficient_c(d, k).unwrap();
            if diff == mod_d(-xy - sign * k as i64, d) {
                acc += c;
            }
            if diff == mod_d(-xy + sign * (k as i64 + 1), d) {
                acc -= c;
            }
        }
        acc / 4.0
    }

    fn random_strategy(d: usize, g: &mut GaussianStream) -> BellStrategy {
        let amps: Vec<C64> = (0..d * d).map(|_| g.complex()).collect();
        let n = crate::linalg::norm(&amps);
        let psi = Ket::new(amps.into_iter().map(|z| z / n).collect()).unwrap();
        let mut povm = || {
            let labels: Vec<usize> = (0..d).map(|_| g.below(d)).collect();
            Povm::coarse_grained_basis(&random_unitary_from(d, g), &labels, d)
        };
        let alice = [povm(), povm()];
        let bob = [povm(), povm()];
        BellStrategy::new(d, psi, alice, bob).unwrap()
    }

    #[test]
    fn weights_match_closed_form() {
        for d in 2..=7 {
            let game = build_game(d).unwrap();
            let w = bell_weights(&game);
            for x in 0..2 {
                for y in 0..2 {
                    for a in 0..d {
                        for b in 0..d {
                            let got = weight(&w, d, a, b, x, y);
                            assert!((got - closed_form(d, a, b, x, y)).abs() < 1e-15);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn d2_weights_are_chsh_signs() {
        let game = build_game(2).unwrap();
        let w = bell_weights(&game);
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        let expected = if (a ^ b) == x * y { 0.25 } else { -0.25 };
                        assert_eq!(weight(&w, 2, a, b, x, y), expected);
                    }
                }
            }
        }
    }

    #[test]
    fn reduced_operators_reproduce_payoff() {
        let mut g = GaussianStream::new(17, 0);
        for d in 2..=4 {
            let game = build_game(d).unwrap();
            for _ in 0..5 {
                let strat = random_strategy(d, &mut g);
                let target = evaluate_bell(&game, &behavior_from_bell(&strat).unwrap()).unwrap();
                for party in [Party::Alice, Party::Bob] {
                    let r = bell_reduced_operators(&game, &strat, party).unwrap();
                    let meas = match party {
                        Party::Alice => strat.alice_measurements(),
                        Party::Bob => strat.bob_measurements(),
                    };
                    let value: f64 = meas.iter().zip(&r).map(|(m, r)| m.objective(r)).sum();
                    assert!((value - target).abs() < 1e-12, "{party:?} d={d}");
                }
            }
        }
    }

    #[test]
    fn product_state_against_uniform_party_has_zero_operators() {
        let d = 3;
        let game = build_game(d).unwrap();
        let mut g = GaussianStream::new(2, 0);
        let psi = Ket::basis(d * d, 0);
        let some = Povm::coarse_grained_basis(&random_unitary_from(d, &mut g), &[0, 1, 2], d);
        let uniform = Povm::uniform(d, d);
        let strat = BellStrategy::new(
            d,
            psi,
            [some.clone(), some],
            [uniform.clone(), uniform],
        )
        .unwrap();
        for row in bell_reduced_operators(&game, &strat, Party::Alice).unwrap() {
            for r in row {
                assert!(r.matrix().max_abs() < 1e-15);
            }
        }
    }

    #[test]
    fn reduced_operators_reject_mismatched_dimension() {
        let game = build_game(3).unwrap();
        let mut g = GaussianStream::new(1, 0);
        let strat = random_strategy(2, &mut g);
        assert!(matches!(
            bell_reduced_operators(&game, &strat, Party::Bob),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn seesaw_reaches_cglmp_values() {
        for (d, target) in [(2, 0.7071), (3, 0.7287)] {
            let game = build_game(d).unwrap();
            let cfg = SeesawConfig {
                restarts: 10,
                ..SeesawConfig::default()
            };
            let report = seesaw_bell(&game, &cfg).unwrap();
            assert!((report.best_value - target).abs() < 1e-3, "d={d}: {}", report.best_value);
            let s = &report.best_strategy;
            for m in s.alice_measurements().iter().chain(s.bob_measurements()) {
                m.validate(&Tolerances::STRICT).unwrap();
            }
        }
    }

    #[test]
    fn seesaw_refuses_oversized_operators() {
        let game = build_game(11).unwrap();
        let cfg = SeesawConfig {
            restarts: 1,
            ..SeesawConfig::default()
        };
        assert!(matches!(seesaw_bell(&game, &cfg), Err(Error::Capability(_))));
    }
}
