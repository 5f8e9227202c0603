//! The d-dimensional communication complexity game.
//!
//! Alice receives `x0 ∈ 0..d` and `x ∈ {0, 1}`, Bob receives `y ∈ {0, 1}`,
//! and Bob outputs a guess `g ∈ 0..d`. Guessing `f_k(x0, x, y)` earns
//! `c_k` points, guessing `h_k(x0, x, y)` loses `c_k`, for
//! `k = 0..⌊d/2⌋`. Everything downstream goes through the score tensor
//!
//! ```text
//! s(g | x0, x, y) = sum_k c_k (δ[g = f_k] − δ[g = h_k])
//! ```
//!
//! and the average payoff `(1/4d) sum s(g|x0,x,y) q(g|x0,x,y)` of a guess
//! distribution `q`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on `d`.
pub const DEFAULT_MAX_DIM: usize = 16;

/// Slack allowed on guess-distribution entries and row sums.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Mathematical modulo: always in `0..d`.
pub fn mod_d(v: i64, d: usize) -> usize {
    v.rem_euclid(d as i64) as usize
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::domain(format!("dimension must be at least 2, got {d}")));
    }
    Ok(())
}

fn check_inputs(d: usize, x0: usize, x: usize, y: usize, k: usize) -> Result<()> {
    check_dim(d)?;
    if x0 >= d {
        return Err(Error::domain(format!("x0 = {x0} outside 0..{d}")));
    }
    if x > 1 || y > 1 {
        return Err(Error::domain(format!("binary inputs out of range: x = {x}, y = {y}")));
    }
    if k >= d / 2 {
        return Err(Error::domain(format!("k = {k} outside 0..{}", d / 2)));
    }
    Ok(())
}

/// `c_k = 1 − 2k/(d−1)`
pub fn coefficient_c(d: usize, k: usize) -> Result<f64> {
    check_dim(d)?;
    if k >= d / 2 {
        return Err(Error::domain(format!("k = {k} outside 0..{}", d / 2)));
    }
    Ok(1.0 - 2.0 * k as f64 / (d as f64 - 1.0))
}

fn sign(x: usize, y: usize) -> i64 {
    if (x + y) % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `f_k = x0 − x·y − (−1)^{x+y} k  (mod d)`
pub fn target_f(d: usize, x0: usize, x: usize, y: usize, k: usize) -> Result<usize> {
    check_inputs(d, x0, x, y, k)?;
    Ok(mod_d(x0 as i64 - (x * y) as i64 - sign(x, y) * k as i64, d))
}

/// `h_k = x0 − x·y + (−1)^{x+y} (k + 1)  (mod d)`
pub fn target_h(d: usize, x0: usize, x: usize, y: usize, k: usize) -> Result<usize> {
    check_inputs(d, x0, x, y, k)?;
    Ok(mod_d(x0 as i64 - (x * y) as i64 + sign(x, y) * (k as i64 + 1), d))
}

/// Immutable description of one member of the game family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    d: usize,
    coeffs: Vec<f64>,
    /// `s[((x0 * 2 + x) * 2 + y) * d + g]`
    scores: Vec<f64>,
}

impl GameSpec {
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of `k` values, `⌊d/2⌋`.
    pub fn k_max(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    #[inline]
    fn offset(&self, x0: usize, x: usize, y: usize) -> usize {
        ((x0 * 2 + x) * 2 + y) * self.d
    }

    /// `s(g | x0, x, y)`
    #[inline]
    pub fn score(&self, g: usize, x0: usize, x: usize, y: usize) -> f64 {
        self.scores[self.offset(x0, x, y) + g]
    }

    /// The `d` scores of one input cell, indexed by guess.
    pub fn score_row(&self, x0: usize, x: usize, y: usize) -> &[f64] {
        let o = self.offset(x0, x, y);
        &self.scores[o..o + self.d]
    }

    /// Copy of this game with Alice's `x0` relabeled as `x0 + shift (mod d)`:
    /// the new game scores input `x0` the way this one scores `x0 + shift`.
    pub fn with_shifted_x0(&self, shift: usize) -> GameSpec {
        let d = self.d;
        let mut scores = vec![0.0; self.scores.len()];
        for x0 in 0..d {
            for x in 0..2 {
                for y in 0..2 {
                    let src = self.score_row((x0 + shift) % d, x, y);
                    let o = self.offset(x0, x, y);
                    scores[o..o + d].copy_from_slice(src);
                }
            }
        }
        GameSpec {
            d,
            coeffs: self.coeffs.clone(),
            scores,
        }
    }
}

pub fn build_game(d: usize) -> Result<GameSpec> {
    build_game_with_cap(d, DEFAULT_MAX_DIM)
}

/// Builds the score tensor by adding `+c_k` at `g = f_k` and `−c_k` at
/// `g = h_k`. Coinciding targets accumulate.
pub fn build_game_with_cap(d: usize, max_dim: usize) -> Result<GameSpec> {
    check_dim(d)?;
    if d > max_dim {
        return Err(Error::domain(format!("dimension {d} exceeds the cap of {max_dim}")));
    }
    let k_max = d / 2;
    let coeffs: Vec<f64> = (0..k_max).map(|k| coefficient_c(d, k)).collect::<Result<_>>()?;
    let mut scores = vec![0.0; d * 4 * d];
    for x0 in 0..d {
        for x in 0..2 {
            for y in 0..2 {
                let o = ((x0 * 2 + x) * 2 + y) * d;
                for (k, &c) in coeffs.iter().enumerate() {
                    scores[o + target_f(d, x0, x, y, k)?] += c;
                    scores[o + target_h(d, x0, x, y, k)?] -= c;
                }
            }
        }
    }
    Ok(GameSpec { d, coeffs, scores })
}

/// Conditional guess distribution `q(g | x0, x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GuessDistribution {
    d: usize,
    q: Vec<f64>,
}

impl GuessDistribution {
    /// Builds from a function of `(g, x0, x, y)`; no validation.
    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut q = vec![0.0; d * 4 * d];
        for x0 in 0..d {
            for x in 0..2 {
                for y in 0..2 {
                    for g in 0..d {
                        q[((x0 * 2 + x) * 2 + y) * d + g] = f(g, x0, x, y);
                    }
                }
            }
        }
        GuessDistribution { d, q }
    }

    pub fn uniform(d: usize) -> Self {
        Self::from_fn(d, |_, _, _, _| 1.0 / d as f64)
    }

    /// Puts all mass on `choice(x0, x, y)`.
    pub fn deterministic(d: usize, choice: impl Fn(usize, usize, usize) -> usize) -> Self {
        Self::from_fn(d, |g, x0, x, y| if choice(x0, x, y) == g { 1.0 } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, g: usize, x0: usize, x: usize, y: usize) -> f64 {
        self.q[((x0 * 2 + x) * 2 + y) * self.d + g]
    }

    /// `αa + (1−α)b`
    pub fn mix(a: &Self, b: &Self, alpha: f64) -> Self {
        assert_eq!(a.d, b.d);
        GuessDistribution {
            d: a.d,
            q: a.q.iter().zip(&b.q).map(|(x, y)| alpha * x + (1.0 - alpha) * y).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        for (cell, row) in self.q.chunks(d).enumerate() {
            if let Some(v) = row.iter().find(|&&v| !(v >= -NORMALIZATION_TOL)) {
                return Err(Error::validation(format!(
                    "guess distribution cell {cell} has entry {v}"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::validation(format!(
                    "guess distribution cell {cell} sums to {s}"
                )));
            }
        }
        Ok(())
    }
}

/// `(1/4d) sum_{x0,x,y,g} s(g|x0,x,y) q(g|x0,x,y)`
pub fn payoff_from_guess_distribution(game: &GameSpec, q: &GuessDistribution) -> Result<f64> {
    if q.dim() != game.dim() {
        return Err(Error::domain(format!(
            "distribution has dimension {}, game has {}",
            q.dim(),
            game.dim()
        )));
    }
    q.validate()?;
    let total: f64 = game.scores.iter().zip(&q.q).map(|(s, p)| s * p).sum();
    Ok(total / (4 * game.dim()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients() {
        assert_eq!(coefficient_c(2, 0).unwrap(), 1.0);
        assert!((coefficient_c(6, 1).unwrap() - 0.6).abs() < 1e-15);
        assert!((coefficient_c(6, 2).unwrap() - 0.2).abs() < 1e-15);
        assert!(coefficient_c(6, 3).is_err());
        assert!(coefficient_c(1, 0).is_err());
    }

    #[test]
    fn targets() {
        assert_eq!(target_f(6, 0, 0, 0, 0).unwrap(), 0);
        assert_eq!(target_f(6, 3, 1, 1, 2).unwrap(), 0);
        assert_eq!(target_f(5, 1, 0, 1, 1).unwrap(), 2);
        assert_eq!(target_h(6, 0, 0, 0, 0).unwrap(), 1);
        assert_eq!(target_h(5, 2, 1, 0, 1).unwrap(), 0);
        assert_eq!(target_h(2, 0, 0, 0, 0).unwrap(), 1);
    }

    #[test]
    fn targets_reject_bad_inputs() {
        assert!(target_f(6, 6, 0, 0, 0).is_err());
        assert!(target_f(6, 0, 2, 0, 0).is_err());
        assert!(target_h(6, 0, 0, 3, 0).is_err());
        assert!(target_h(6, 0, 0, 0, 3).is_err());
    }

    #[test]
    fn negative_offsets_wrap() {
        // 0 − 1·1 − (+1)·2 = −3 ≡ 3 (mod 6)
        assert_eq!(target_f(6, 0, 1, 1, 2).unwrap(), 3);
        assert_eq!(mod_d(-13, 5), 2);
    }

    #[test]
    fn d2_scores() {
        let g = build_game(2).unwrap();
        assert_eq!(g.score(0, 0, 0, 0), 1.0);
        assert_eq!(g.score(1, 0, 0, 0), -1.0);
    }

    #[test]
    fn d6_coefficients() {
        let g = build_game(6).unwrap();
        assert_eq!(g.k_max(), 3);
        let expected = [1.0, 0.6, 0.2];
        for (c, e) in g.coeffs().iter().zip(expected) {
            assert!((c - e).abs() < 1e-15);
        }
    }

    #[test]
    fn cap_is_enforced_and_configurable() {
        assert!(build_game(17).is_err());
        assert!(build_game_with_cap(17, 20).is_ok());
        assert!(build_game(1).is_err());
    }

    #[test]
    fn uniform_guessing_pays_nothing() {
        for d in 2..=10 {
            let g = build_game(d).unwrap();
            let v = payoff_from_guess_distribution(&g, &GuessDistribution::uniform(d)).unwrap();
            assert!(v.abs() < 1e-15, "d = {d}: {v}");
        }
    }

    #[test]
    fn always_guessing_f0_at_d2() {
        let game = build_game(2).unwrap();
        let q = GuessDistribution::deterministic(2, |x0, x, y| target_f(2, x0, x, y, 0).unwrap());
        // f_0 and h_0 never coincide within a cell at d = 2, so every one of
        // the 8 cells scores +c_0.
        let mut hand = 0.0;
        for x0 in 0..2 {
            for x in 0..2 {
                for y in 0..2 {
                    hand += game.score(target_f(2, x0, x, y, 0).unwrap(), x0, x, y);
                }
            }
        }
        assert_eq!(hand, 8.0);
        let v = payoff_from_guess_distribution(&game, &q).unwrap();
        assert_eq!(v, hand / 8.0);
    }

    #[test]
    fn guessing_x0_at_d2() {
        let game = build_game(2).unwrap();
        let q = GuessDistribution::deterministic(2, |x0, _, _| x0);
        let v = payoff_from_guess_distribution(&game, &q).unwrap();
        // +1 in the six cells with x·y = 0, −1 in the two with x = y = 1
        assert_eq!(v, 0.5);
    }

    #[test]
    fn unnormalized_distribution_is_rejected() {
        let game = build_game(3).unwrap();
        let q = GuessDistribution::from_fn(3, |_, _, _, _| 0.5);
        assert!(matches!(
            payoff_from_guess_distribution(&game, &q),
            Err(Error::Validation(_))
        ));
        let neg = GuessDistribution::from_fn(2, |g, _, _, _| if g == 0 { 1.5 } else { -0.5 });
        assert!(payoff_from_guess_distribution(&build_game(2).unwrap(), &neg).is_err());
    }

    #[test]
    fn shifting_x0_permutes_rows() {
        let g = build_game(5).unwrap();
        let s = g.with_shifted_x0(2);
        assert_eq!(s.score_row(0, 1, 0), g.score_row(2, 1, 0));
        assert_eq!(s.score_row(4, 0, 1), g.score_row(1, 0, 1));
    }
}
