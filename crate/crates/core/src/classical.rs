//! Classical strategies: Alice sends `m = e(x0, x) ∈ 0..d`, Bob answers
//! `g(m, y)`.
//!
//! The payoff is linear in the strategy, so mixing deterministic strategies
//! with shared randomness never beats the best deterministic one; the
//! deterministic optimum is the classical bound.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::linalg::{GaussianStream, HermOp, Ket};
use crate::strategies::{PmStrategy, Povm};

/// Largest `d` for which exhaustive enumeration is attempted (`d^{2d}`
/// encodings: about 9.8 million at `d = 5`).
pub const MAX_EXACT_DIM: usize = 5;

/// Values closer than this count as ties; the lower index wins.
const TIE_EPS: f64 = 1e-12;

/// Deterministic classical strategy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassicalStrategy {
    d: usize,
    /// `encoding[x0 * 2 + x] = m`
    encoding: Vec<usize>,
    /// `decoding[m * 2 + y] = g`
    decoding: Vec<usize>,
}

impl ClassicalStrategy {
    pub fn new(d: usize, encoding: Vec<usize>, decoding: Vec<usize>) -> Result<Self> {
        if encoding.len() != 2 * d || decoding.len() != 2 * d {
            return Err(Error::domain(format!(
                "encoding and decoding tables must each have {} entries",
                2 * d
            )));
        }
        if let Some(v) = encoding.iter().chain(&decoding).find(|&&v| v >= d) {
            return Err(Error::domain(format!("table entry {v} outside 0..{d}")));
        }
        Ok(ClassicalStrategy {
            d,
            encoding,
            decoding,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn encode(&self, x0: usize, x: usize) -> usize {
        self.encoding[x0 * 2 + x]
    }

    pub fn decode(&self, m: usize, y: usize) -> usize {
        self.decoding[m * 2 + y]
    }

    pub fn encoding(&self) -> &[usize] {
        &self.encoding
    }

    pub fn decoding(&self) -> &[usize] {
        &self.decoding
    }

    /// Embeds the strategy as basis states and coarse-grained
    /// computational-basis measurements.
    pub fn to_pm_strategy(&self) -> PmStrategy {
        let d = self.d;
        let states = (0..2 * d)
            .map(|i| Ket::basis(d, self.encoding[i]).projector())
            .collect();
        let measurements = [0, 1].map(|y| {
            let mut elements = vec![HermOp::zeros(d); d];
            for m in 0..d {
                elements[self.decode(m, y)] += &Ket::basis(d, m).projector();
            }
            Povm::from_elements_unchecked(elements)
        });
        PmStrategy::from_parts_unchecked(d, states, measurements)
    }
}

fn check_game(game: &GameSpec, d: usize) -> Result<()> {
    if game.dim() != d {
        return Err(Error::domain(format!(
            "strategy has dimension {d}, game has {}",
            game.dim()
        )));
    }
    Ok(())
}

/// Exact payoff of a deterministic strategy.
pub fn evaluate_classical(game: &GameSpec, strat: &ClassicalStrategy) -> Result<f64> {
    let d = strat.dim();
    check_game(game, d)?;
    let mut total = 0.0;
    for x0 in 0..d {
        for x in 0..2 {
            let m = strat.encode(x0, x);
            for y in 0..2 {
                total += game.score(strat.decode(m, y), x0, x, y);
            }
        }
    }
    Ok(total / (4 * d) as f64)
}

/// Per-message score columns `col[(y * d + m) * d + g]` for an encoding.
fn message_columns(game: &GameSpec, encoding: &[usize]) -> Vec<f64> {
    let d = game.dim();
    let mut col = vec![0.0; 2 * d * d];
    for x0 in 0..d {
        for x in 0..2 {
            let m = encoding[x0 * 2 + x];
            for y in 0..2 {
                let dst = &mut col[(y * d + m) * d..(y * d + m + 1) * d];
                for (c, s) in dst.iter_mut().zip(game.score_row(x0, x, y)) {
                    *c += s;
                }
            }
        }
    }
    col
}

/// Index of the largest entry; smallest index among ties.
fn argmax(row: &[f64]) -> (usize, f64) {
    let mut best = (0, row[0]);
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > best.1 + TIE_EPS {
            best = (i, v);
        }
    }
    best
}

fn columns_value(col: &[f64], d: usize) -> f64 {
    col.chunks(d).map(|row| argmax(row).1).sum::<f64>() / (4 * d) as f64
}

/// Best decoding for a fixed encoding: each `(m, y)` independently picks
/// the guess maximizing the summed scores of the inputs mapped to `m`.
pub fn optimal_decoding(game: &GameSpec, encoding: &[usize]) -> Result<(ClassicalStrategy, f64)> {
    let d = game.dim();
    if encoding.len() != 2 * d {
        return Err(Error::domain(format!("encoding must have {} entries", 2 * d)));
    }
    if let Some(v) = encoding.iter().find(|&&v| v >= d) {
        return Err(Error::domain(format!("message {v} outside 0..{d}")));
    }
    let col = message_columns(game, encoding);
    let mut decoding = vec![0; 2 * d];
    let mut total = 0.0;
    for y in 0..2 {
        for m in 0..d {
            let (g, v) = argmax(&col[(y * d + m) * d..(y * d + m + 1) * d]);
            decoding[m * 2 + y] = g;
            total += v;
        }
    }
    let strat = ClassicalStrategy::new(d, encoding.to_vec(), decoding)?;
    Ok((strat, total / (4 * d) as f64))
}

/// Exhaustive optimum over all `d^{2d}` encodings, each with its optimal
/// decoding. Ties go to the encoding with the smallest mixed-radix index
/// (digit `x0 * 2 + x` least significant first).
pub fn exact_classical_bound(game: &GameSpec) -> Result<(f64, ClassicalStrategy)> {
    let d = game.dim();
    if d > MAX_EXACT_DIM {
        return Err(Error::Capability(format!(
            "exhaustive enumeration is limited to d <= {MAX_EXACT_DIM} (d = {d}); \
             use heuristic_classical_bound instead"
        )));
    }
    let digits = 2 * d;
    // the two most significant digits select the chunk
    let chunk_count = d * d;
    let inner_digits = digits - 2;
    let inner_total = d.pow(inner_digits as u32);

    let results: Vec<(f64, Vec<usize>)> = (0..chunk_count)
        .into_par_iter()
        .map(|chunk| {
            let mut enc = vec![0usize; digits];
            enc[digits - 2] = chunk % d;
            enc[digits - 1] = chunk / d;
            let mut col = message_columns(game, &enc);
            let mut best = (columns_value(&col, d), enc.clone());
            for _ in 1..inner_total {
                // increment the inner counter, moving rows between messages
                let mut i = 0;
                loop {
                    let old = enc[i];
                    let new = if old + 1 == d { 0 } else { old + 1 };
                    move_input(game, &mut col, i, old, new);
                    enc[i] = new;
                    if new != 0 {
                        break;
                    }
                    i += 1;
                }
                if i >= 3 {
                    // bound the drift of the incremental sums
                    col = message_columns(game, &enc);
                }
                let v = columns_value(&col, d);
                if v > best.0 + TIE_EPS {
                    best = (v, enc.clone());
                }
            }
            best
        })
        .collect();

    let mut best = &results[0];
    for r in &results[1..] {
        if r.0 > best.0 + TIE_EPS {
            best = r;
        }
    }
    let (witness, value) = optimal_decoding(game, &best.1)?;
    Ok((value, witness))
}

fn move_input(game: &GameSpec, col: &mut [f64], input: usize, from: usize, to: usize) {
    let d = game.dim();
    let (x0, x) = (input / 2, input % 2);
    for y in 0..2 {
        let row = game.score_row(x0, x, y);
        for g in 0..d {
            col[(y * d + from) * d + g] -= row[g];
            col[(y * d + to) * d + g] += row[g];
        }
    }
}

/// Random-restart hill climbing over encodings (single-entry moves, best
/// improvement per sweep), each evaluated with its optimal decoding.
/// Restart `r` draws from stream `r` of `seed`.
pub fn heuristic_classical_bound(
    game: &GameSpec,
    restarts: usize,
    seed: u64,
) -> Result<(f64, ClassicalStrategy)> {
    let d = game.dim();
    let restarts = restarts.max(1);
    let runs: Vec<(f64, Vec<usize>)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = GaussianStream::new(seed, r as u64);
            let mut enc: Vec<usize> = (0..2 * d).map(|_| rng.below(d)).collect();
            let mut value = columns_value(&message_columns(game, &enc), d);
            loop {
                let mut best_move = None;
                let mut best_value = value;
                for i in 0..2 * d {
                    let keep = enc[i];
                    for m in 0..d {
                        if m == keep {
                            continue;
                        }
                        enc[i] = m;
                        let v = columns_value(&message_columns(game, &enc), d);
                        if v > best_value + TIE_EPS {
                            best_value = v;
                            best_move = Some((i, m));
                        }
                    }
                    enc[i] = keep;
                }
                match best_move {
                    Some((i, m)) => {
                        enc[i] = m;
                        value = best_value;
                    }
                    None => break,
                }
            }
            (value, enc)
        })
        .collect();
    let mut best = &runs[0];
    for r in &runs[1..] {
        if r.0 > best.0 + TIE_EPS {
            best = r;
        }
    }
    let (witness, value) = optimal_decoding(game, &best.1)?;
    Ok((value, witness))
}
