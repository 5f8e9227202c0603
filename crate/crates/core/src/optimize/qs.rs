//! See-saw over prepare-and-measure strategies.

use std::time::Instant;

use super::measure::{perturb_basis, MeasVar};
use super::{drive, Constraint, OptimizationReport, SeesawConfig, SeesawPoint, StartKind};
use crate::classical::{exact_classical_bound, heuristic_classical_bound, ClassicalStrategy, MAX_EXACT_DIM};
use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::linalg::{hermitian_eig, random_unitary_from, ComplexMatrix, GaussianStream, HermOp};
use crate::strategies::{evaluate_qs, PmStrategy, Povm};

/// Best states for fixed measurements: `rho_{x0,x}` is the projector onto
/// the top eigenvector of `A_{x0,x} = Σ_{y,g} s(g|x0,x,y) M_y^g`.
pub fn state_update(game: &GameSpec, measurements: &[Povm; 2]) -> Result<Vec<HermOp>> {
    let d = game.dim();
    for m in measurements {
        if m.dim() != d || m.outcomes() != d {
            return Err(Error::domain(format!(
                "measurements must have {d} outcomes on C^{d}"
            )));
        }
    }
    states_for(game, [measurements[0].elements(), measurements[1].elements()])
}

fn states_for(game: &GameSpec, meas: [&[HermOp]; 2]) -> Result<Vec<HermOp>> {
    let d = game.dim();
    let mut states = Vec::with_capacity(2 * d);
    for x0 in 0..d {
        for x in 0..2 {
            let mut a = HermOp::zeros(d);
            for (y, m) in meas.iter().enumerate() {
                for (g, &s) in game.score_row(x0, x, y).iter().enumerate() {
                    if s != 0.0 {
                        a.add_scaled(s, &m[g]);
                    }
                }
            }
            states.push(HermOp::projector(&hermitian_eig(&a)?.top_vector()));
        }
    }
    Ok(states)
}

/// `B_y^g = (1/4d) Σ_{x0,x} s(g|x0,x,y) rho_{x0,x}`, so that the payoff is
/// `Σ_{y,g} Tr(B_y^g M_y^g)`.
fn measurement_operators(game: &GameSpec, states: &[HermOp], y: usize) -> Vec<HermOp> {
    let d = game.dim();
    let norm = 1.0 / (4 * d) as f64;
    let mut b = vec![HermOp::zeros(d); d];
    for x0 in 0..d {
        for x in 0..2 {
            let rho = &states[x0 * 2 + x];
            for (g, &s) in game.score_row(x0, x, y).iter().enumerate() {
                if s != 0.0 {
                    b[g].add_scaled(s * norm, rho);
                }
            }
        }
    }
    b
}

#[derive(Clone)]
struct Point {
    states: Vec<HermOp>,
    meas: [MeasVar; 2],
}

impl SeesawPoint for Point {
    fn sweep(
        &mut self,
        game: &GameSpec,
        cfg: &SeesawConfig,
        exact: bool,
    ) -> Result<(f64, Vec<f64>)> {
        self.states = states_for(game, [&self.meas[0].elements, &self.meas[1].elements])?;
        let mut value = 0.0;
        let mut gaps = Vec::new();
        for y in 0..2 {
            let b = measurement_operators(game, &self.states, y);
            if exact {
                gaps.extend(self.meas[y].exact(&b, cfg.constraint, cfg.certificate_eps)?);
            } else {
                self.meas[y].ascent(&b, cfg.constraint, cfg.ascent_steps)?;
            }
            value += self.meas[y].objective(&b);
        }
        Ok((value, gaps))
    }
}

impl Point {
    fn strategy(&self, d: usize) -> PmStrategy {
        PmStrategy::from_parts_unchecked(
            d,
            self.states.clone(),
            [self.meas[0].povm(), self.meas[1].povm()],
        )
    }
}

fn witness_measurement(w: &ClassicalStrategy, basis: &ComplexMatrix, y: usize) -> MeasVar {
    let d = w.dim();
    let labels: Vec<usize> = (0..d).map(|m| w.decode(m, y)).collect();
    MeasVar::coarse_grained(basis, &labels, d)
}

fn start_kind(r: usize, cfg: &SeesawConfig, warm: bool) -> StartKind {
    if warm {
        match r % 4 {
            0 if r == 0 => StartKind::ClassicalWitness,
            1 => StartKind::Hybrid,
            2 => StartKind::PerturbedWitness,
            _ if (r / 4) % 2 == 0 => StartKind::RandomBasis,
            _ => StartKind::RandomCoarseGrained,
        }
    } else if cfg.constraint == Constraint::Unconstrained && r % 2 == 1 {
        StartKind::RandomCoarseGrained
    } else {
        StartKind::RandomBasis
    }
}

fn initial_point(
    d: usize,
    kind: StartKind,
    witness: Option<&ClassicalStrategy>,
    rng: &mut GaussianStream,
) -> Result<Point> {
    let identity = ComplexMatrix::identity(d);
    let all: Vec<usize> = (0..d).collect();
    let meas = match (kind, witness) {
        (StartKind::ClassicalWitness, Some(w)) => {
            [witness_measurement(w, &identity, 0), witness_measurement(w, &identity, 1)]
        }
        (StartKind::Hybrid, Some(w)) => {
            let random_y = rng.below(2);
            let u = random_unitary_from(d, rng);
            let labels: Vec<usize> = (0..d).map(|_| rng.below(d)).collect();
            let random = MeasVar::coarse_grained(&u, &labels, d);
            let kept = witness_measurement(w, &identity, 1 - random_y);
            if random_y == 0 {
                [random, kept]
            } else {
                [kept, random]
            }
        }
        (StartKind::PerturbedWitness, Some(w)) => {
            let eps = 0.05 + 0.45 * rng.uniform();
            let u = perturb_basis(&identity, eps, rng)?;
            [witness_measurement(w, &u, 0), witness_measurement(w, &u, 1)]
        }
        (StartKind::RandomCoarseGrained, _) => [0, 1].map(|_| {
            let u = random_unitary_from(d, rng);
            let labels: Vec<usize> = (0..d).map(|_| rng.below(d)).collect();
            MeasVar::coarse_grained(&u, &labels, d)
        }),
        _ => [0, 1].map(|_| MeasVar::coarse_grained(&random_unitary_from(d, rng), &all, d)),
    };
    Ok(Point {
        states: Vec::new(),
        meas,
    })
}

/// Best classical strategy for warm starts: exhaustive for small `d`.
pub(crate) fn classical_witness(game: &GameSpec, seed: u64) -> Result<ClassicalStrategy> {
    if game.dim() <= MAX_EXACT_DIM {
        Ok(exact_classical_bound(game)?.1)
    } else {
        Ok(heuristic_classical_bound(game, 50, seed)?.1)
    }
}

/// Multi-restart see-saw for the prepare-and-measure payoff.
pub fn seesaw_qs(game: &GameSpec, cfg: &SeesawConfig) -> Result<OptimizationReport<PmStrategy>> {
    cfg.validate()?;
    let started = Instant::now();
    let d = game.dim();
    let witness = if cfg.classical_warm_start && cfg.constraint == Constraint::Unconstrained {
        Some(classical_witness(game, cfg.seed)?)
    } else {
        None
    };

    let kind = |r| start_kind(r, cfg, witness.is_some());
    let (point, best, traces) = drive(game, cfg, kind, |_, kind, rng| {
        initial_point(d, kind, witness.as_ref(), rng)
    })?;
    let strategy = point.strategy(d);
    let best_value = evaluate_qs(game, &strategy)?;
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
    use crate::classical::exact_classical_bound;
    use crate::game::build_game;
    use crate::linalg::{Ket, Tolerances};

    fn small_config(restarts: usize) -> SeesawConfig {
        SeesawConfig {
            restarts,
            ..SeesawConfig::default()
        }
    }

    #[test]
    fn uniform_measurements_give_first_basis_state() {
        let game = build_game(4).unwrap();
        let uniform = [Povm::uniform(4, 4), Povm::uniform(4, 4)];
        let states = state_update(&game, &uniform).unwrap();
        let e0 = Ket::basis(4, 0).projector();
        assert_eq!(states.len(), 8);
        for rho in &states {
            assert!(rho.max_abs_diff(&e0) < 1e-15);
        }
    }

    #[test]
    fn diagonal_measurements_give_best_basis_state() {
        let game = build_game(2).unwrap();
        let z = Povm::coarse_grained_basis(&ComplexMatrix::identity(2), &[0, 1], 2);
        let states = state_update(&game, &[z.clone(), z]).unwrap();
        for x0 in 0..2 {
            for x in 0..2 {
                let score = |g: usize| game.score(g, x0, x, 0) + game.score(g, x0, x, 1);
                let best = if score(1) > score(0) { 1 } else { 0 };
                let expected = Ket::basis(2, best).projector();
                assert!(states[x0 * 2 + x].max_abs_diff(&expected) < 1e-12);
            }
        }
    }

    #[test]
    fn state_update_rejects_wrong_shapes() {
        let game = build_game(3).unwrap();
        let m = [Povm::uniform(2, 2), Povm::uniform(2, 2)];
        assert!(matches!(state_update(&game, &m), Err(Error::Domain(_))));
    }

    #[test]
    fn d2_reaches_tsirelson_value() {
        let game = build_game(2).unwrap();
        let report = seesaw_qs(&game, &small_config(10)).unwrap();
        assert!((report.best_value - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3);
        let strat = &report.best_strategy;
        for m in strat.measurements() {
            m.validate(&Tolerances::STRICT).unwrap();
        }
        assert!(report.certificate_gaps().all(|g| g <= super::super::CERTIFICATE_EPS));
    }

    #[test]
    fn warm_start_dominates_classical_bound() {
        let game = build_game(3).unwrap();
        let (classical, _) = exact_classical_bound(&game).unwrap();
        let report = seesaw_qs(&game, &small_config(4)).unwrap();
        assert!(report.best_value >= classical - 1e-9);
    }

    #[test]
    fn exact_sweeps_are_monotone() {
        let game = build_game(4).unwrap();
        let cfg = SeesawConfig {
            restarts: 3,
            max_iters: 1,
            polish_restarts: 3,
            ..SeesawConfig::default()
        };
        let report = seesaw_qs(&game, &cfg).unwrap();
        for t in report.traces.iter().filter(|t| t.polished && t.error.is_none()) {
            let worst_gap = t.certificate_gaps.iter().fold(0.0f64, |m, &g| m.max(g));
            for w in t.payoffs[1..].windows(2) {
                assert!(w[1] >= w[0] - worst_gap - 1e-12, "{:?}", t.payoffs);
            }
        }
    }

    #[test]
    fn reports_do_not_depend_on_thread_count() {
        let game = build_game(3).unwrap();
        let run = |threads| {
            let cfg = SeesawConfig {
                restarts: 6,
                threads: Some(threads),
                ..SeesawConfig::default()
            };
            seesaw_qs(&game, &cfg).unwrap()
        };
        let (a, b) = (run(1), run(3));
        assert_eq!(a.best_value.to_bits(), b.best_value.to_bits());
        assert_eq!(a.best_restart, b.best_restart);
        for (ta, tb) in a.traces.iter().zip(&b.traces) {
            let bits = |t: &super::super::RestartTrace| -> Vec<u64> {
                t.payoffs.iter().map(|v| v.to_bits()).collect()
            };
            assert_eq!(bits(ta), bits(tb));
        }
    }

    #[test]
    fn trace_one_d3_agrees_with_unconstrained() {
        let game = build_game(3).unwrap();
        let cfg = SeesawConfig {
            restarts: 10,
            constraint: Constraint::TraceOne,
            ..SeesawConfig::default()
        };
        let report = seesaw_qs(&game, &cfg).unwrap();
        assert!((report.best_value - 0.7287).abs() < 2e-3, "{}", report.best_value);
        for m in report.best_strategy.measurements() {
            for e in m.elements() {
                assert!((e.trace() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn projective_d3_yields_rank_one_projectors() {
        let game = build_game(3).unwrap();
        let cfg = SeesawConfig {
            restarts: 10,
            constraint: Constraint::RankOneProjective,
            ..SeesawConfig::default()
        };
        let report = seesaw_qs(&game, &cfg).unwrap();
        assert!((report.best_value - 0.7287).abs() < 2e-3, "{}", report.best_value);
        for m in report.best_strategy.measurements() {
            for e in m.elements() {
                let sq = HermOp::symmetrized(&(e.matrix() * e.matrix()));
                assert!(sq.max_abs_diff(e) < 1e-9);
                assert!((e.trace() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let game = build_game(2).unwrap();
        let cfg = SeesawConfig {
            restarts: 0,
            ..SeesawConfig::default()
        };
        assert!(matches!(seesaw_qs(&game, &cfg), Err(Error::Validation(_))));
    }
}
