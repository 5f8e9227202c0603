//! See-saw maximization of the prepare-and-measure and Bell payoffs.
//!
//! Each restart alternates between blocks of variables. The state block is
//! solved exactly (top eigenvector); the measurement blocks are first
//! improved with cheap ascent steps until the payoff stalls, after which the
//! best restarts are polished with exact, certified measurement updates.
//!
//! Restarts are independent, run on the rayon pool and draw their random
//! numbers from the stream `(seed, restart index)`, so reports do not depend
//! on the number of threads.

mod bell;
mod kkt;
mod measure;
mod povm;
mod qs;

use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::linalg::GaussianStream;

pub use bell::{bell_reduced_operators, bell_weights, seesaw_bell, Party};
pub use povm::{
    povm_certificate, povm_update, povm_update_constrained, solve_povm, Constraint, PovmSolution,
    CERTIFICATE_EPS, TRACE_ONE_GAP_FACTOR,
};
pub use qs::{seesaw_qs, state_update};

/// Controls for [`seesaw_qs`] and [`seesaw_bell`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeesawConfig {
    pub restarts: usize,
    /// Cap on see-saw iterations per restart.
    pub max_iters: usize,
    /// A restart stops once one iteration changes the payoff by less.
    pub convergence_eps: f64,
    /// Largest accepted duality gap of an exact measurement update.
    pub certificate_eps: f64,
    pub seed: u64,
    pub constraint: Constraint,
    /// Seed one restart (and perturbations of it) from the best classical
    /// strategy. Ignored under constraints the classical embedding violates.
    pub classical_warm_start: bool,
    /// Number of best restarts that get exact measurement updates.
    pub polish_restarts: usize,
    /// Cap on exact see-saw iterations per polished restart.
    pub polish_iters: usize,
    /// Ascent steps per measurement block and iteration.
    pub ascent_steps: usize,
    /// Size of a dedicated thread pool; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        SeesawConfig {
            restarts: 200,
            max_iters: 500,
            convergence_eps: 1e-9,
            certificate_eps: CERTIFICATE_EPS,
            seed: 1,
            constraint: Constraint::Unconstrained,
            classical_warm_start: true,
            polish_restarts: 2,
            polish_iters: 40,
            ascent_steps: 5,
            threads: None,
        }
    }
}

impl SeesawConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.restarts == 0 || self.max_iters == 0 || self.ascent_steps == 0 {
            return Err(Error::validation(
                "restarts, max_iters and ascent_steps must be at least 1",
            ));
        }
        if !positive(self.convergence_eps) || !positive(self.certificate_eps) {
            return Err(Error::validation(
                "convergence_eps and certificate_eps must be positive",
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::validation("threads must be at least 1"));
        }
        Ok(())
    }
}

/// How a restart was initialized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartKind {
    /// The best classical strategy, embedded.
    ClassicalWitness,
    /// One measurement from the classical witness, the other random.
    Hybrid,
    /// The classical witness in a randomly rotated basis.
    PerturbedWitness,
    /// Random orthonormal bases, one vector per outcome.
    RandomBasis,
    /// Random orthonormal bases with random outcome labels.
    RandomCoarseGrained,
    /// Maximally entangled state with Fourier-basis measurements.
    FourierBell,
}

/// Record of one restart.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RestartTrace {
    pub restart: usize,
    pub start: StartKind,
    /// Payoff after every see-saw iteration, exact updates included.
    pub payoffs: Vec<f64>,
    /// Final payoff; `None` when the restart failed.
    pub value: Option<f64>,
    pub polished: bool,
    /// Gaps of the exact measurement updates of the polishing phase.
    pub certificate_gaps: Vec<f64>,
    pub error: Option<String>,
}

/// Outcome of a multi-restart see-saw.
#[derive(Clone, Debug)]
pub struct OptimizationReport<S> {
    /// Payoff of `best_strategy`, re-evaluated from scratch.
    pub best_value: f64,
    pub best_strategy: S,
    pub best_restart: usize,
    pub traces: Vec<RestartTrace>,
    pub seed: u64,
    pub wall_time: Duration,
}

impl<S> OptimizationReport<S> {
    /// All certificate gaps recorded across restarts.
    pub fn certificate_gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.traces.iter().flat_map(|t| t.certificate_gaps.iter().copied())
    }
}

/// Runs `f` over `items` in parallel, on a dedicated pool when requested,
/// preserving order.
pub(crate) fn parallel_map<I, T, F>(threads: Option<usize>, items: Vec<I>, f: F) -> Result<Vec<T>>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Sync + Send,
{
    match threads {
        None => Ok(items.into_par_iter().map(f).collect()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Capability(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(|| items.into_par_iter().map(f).collect()))
        }
    }
}

/// Indices of the `k` best values, ties resolved toward lower indices.
pub(crate) fn top_indices(values: &[Option<f64>], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .unwrap()
            .partial_cmp(&values[a].unwrap())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx
}

/// Index of the best value; the lowest index wins ties.
pub(crate) fn best_index(values: &[Option<f64>]) -> Option<usize> {
    top_indices(values, 1).first().copied()
}

/// A see-saw iterate.
pub(crate) trait SeesawPoint: Clone + Send + Sync {
    /// One see-saw iteration, with ascent moves or exact updates on the
    /// measurement blocks; returns the payoff and any certificate gaps.
    fn sweep(&mut self, game: &GameSpec, cfg: &SeesawConfig, exact: bool) -> Result<(f64, Vec<f64>)>;
}

struct Run<P> {
    point: Option<P>,
    trace: RestartTrace,
}

fn ascent_phase<P: SeesawPoint>(
    game: &GameSpec,
    cfg: &SeesawConfig,
    r: usize,
    kind: StartKind,
    init: &(impl Fn(usize, StartKind, &mut GaussianStream) -> Result<P> + Sync),
) -> Run<P> {
    let mut trace = RestartTrace {
        restart: r,
        start: kind,
        payoffs: Vec::new(),
        value: None,
        polished: false,
        certificate_gaps: Vec::new(),
        error: None,
    };
    let mut rng = GaussianStream::new(cfg.seed, r as u64);
    let result = (|| -> Result<P> {
        let mut point = init(r, kind, &mut rng)?;
        let mut prev = f64::NEG_INFINITY;
        for _ in 0..cfg.max_iters {
            let (v, _) = point.sweep(game, cfg, false)?;
            trace.payoffs.push(v);
            if (v - prev).abs() < cfg.convergence_eps {
                break;
            }
            prev = v;
        }
        Ok(point)
    })();
    match result {
        Ok(point) => {
            trace.value = trace.payoffs.last().copied();
            Run {
                point: Some(point),
                trace,
            }
        }
        Err(e) => {
            trace.error = Some(e.to_string());
            Run { point: None, trace }
        }
    }
}

fn polish_phase<P: SeesawPoint>(game: &GameSpec, cfg: &SeesawConfig, mut run: Run<P>) -> Run<P> {
    let Some(mut point) = run.point.take() else {
        return run;
    };
    let before = point.clone();
    let before_value = run.trace.value;
    let trace = &mut run.trace;
    trace.polished = true;
    let mut prev = before_value.unwrap_or(f64::NEG_INFINITY);
    for _ in 0..cfg.polish_iters {
        match point.sweep(game, cfg, true) {
            Ok((v, gaps)) => {
                trace.payoffs.push(v);
                trace.certificate_gaps.extend(gaps);
                let done = (v - prev).abs() < cfg.convergence_eps;
                prev = v;
                if done {
                    break;
                }
            }
            Err(e) => {
                // the unpolished point is still a valid strategy
                trace.error = Some(format!("polishing failed: {e}"));
                trace.value = before_value;
                run.point = Some(before);
                return run;
            }
        }
    }
    trace.value = trace.payoffs.last().copied();
    run.point = Some(point);
    run
}

/// Runs every restart's ascent phase, polishes the best ones and returns
/// the winning point, its restart index and all traces.
pub(crate) fn drive<P: SeesawPoint>(
    game: &GameSpec,
    cfg: &SeesawConfig,
    kind: impl Fn(usize) -> StartKind + Sync,
    init: impl Fn(usize, StartKind, &mut GaussianStream) -> Result<P> + Sync,
) -> Result<(P, usize, Vec<RestartTrace>)> {
    let mut runs = parallel_map(cfg.threads, (0..cfg.restarts).collect(), |r| {
        ascent_phase(game, cfg, r, kind(r), &init)
    })?;

    let values: Vec<Option<f64>> = runs.iter().map(|r| r.trace.value).collect();
    let chosen: Vec<(usize, Run<P>)> = top_indices(&values, cfg.polish_restarts)
        .into_iter()
        .map(|i| {
            let run = Run {
                point: runs[i].point.take(),
                trace: runs[i].trace.clone(),
            };
            (i, run)
        })
        .collect();
    let polished = parallel_map(cfg.threads, chosen, |(i, run)| (i, polish_phase(game, cfg, run)))?;
    for (i, run) in polished {
        runs[i] = run;
    }

    let values: Vec<Option<f64>> = runs.iter().map(|r| r.trace.value).collect();
    let Some(best) = best_index(&values) else {
        let msg = runs
            .iter()
            .find_map(|r| r.trace.error.clone())
            .unwrap_or_else(|| "no restart produced a strategy".into());
        return Err(Error::numeric(format!("every restart failed: {msg}"), f64::NAN));
    };
    let point = runs[best].point.take().expect("best restart keeps its point");
    Ok((point, best, runs.into_iter().map(|r| r.trace).collect()))
}
