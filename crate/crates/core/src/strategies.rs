//! Strategy objects for both quantum implementations of the game and their
//! exact payoffs.
//!
//! * prepare-and-measure: Alice sends `rho_{x0,x}`, Bob measures `{M_y^g}`;
//! * entanglement-assisted: the parties share `|psi>`, measure `{A_x^a}` and
//!   `{B_y^b}`, Alice sends `m = x0 + a (mod d)` and Bob guesses `g = m − b`.

use crate::error::{Error, Result};
use crate::game::{mod_d, payoff_from_guess_distribution, GameSpec, GuessDistribution};
use crate::linalg::{hermitian_eig, ComplexMatrix, HermOp, Ket, Tolerances, C64, ZERO};

/// A measurement: PSD elements summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<HermOp>,
}

impl Povm {
    pub fn new(elements: Vec<HermOp>, tol: &Tolerances) -> Result<Self> {
        let p = Povm { elements };
        p.validate(tol)?;
        Ok(p)
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_elements_unchecked(elements: Vec<HermOp>) -> Self {
        Povm { elements }
    }

    /// Every outcome gets `I / n`.
    pub fn uniform(dim: usize, outcomes: usize) -> Self {
        let e = HermOp::identity(dim).scale(1.0 / outcomes as f64);
        Povm {
            elements: vec![e; outcomes],
        }
    }

    /// Projective measurement in the orthonormal basis given by the columns
    /// of `basis`; basis vector `j` is assigned to outcome `labels[j]`.
    pub fn coarse_grained_basis(basis: &ComplexMatrix, labels: &[usize], outcomes: usize) -> Self {
        let n = basis.rows();
        let mut elements = vec![HermOp::zeros(n); outcomes];
        for (j, &g) in labels.iter().enumerate() {
            elements[g] += &HermOp::projector(&basis.column(j));
        }
        Povm { elements }
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[HermOp] {
        &self.elements
    }

    pub fn element(&self, g: usize) -> &HermOp {
        &self.elements[g]
    }

    pub fn into_elements(self) -> Vec<HermOp> {
        self.elements
    }

    /// `max |sum_g M_g − I|`
    pub fn completeness_defect(&self) -> f64 {
        let mut total = HermOp::zeros(self.dim());
        for e in &self.elements {
            total += e;
        }
        total.max_abs_diff(&HermOp::identity(self.dim()))
    }

    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        if self.elements.is_empty() {
            return Err(Error::validation("measurement has no outcomes"));
        }
        let n = self.dim();
        for (g, e) in self.elements.iter().enumerate() {
            if e.dim() != n {
                return Err(Error::validation(format!(
                    "element {g} has dimension {}, expected {n}",
                    e.dim()
                )));
            }
            let lo = hermitian_eig(e)?.min();
            if lo < -tol.psd {
                return Err(Error::validation(format!(
                    "element {g} is not PSD (min eigenvalue {lo:.3e})"
                )));
            }
        }
        let defect = self.completeness_defect();
        if defect > tol.completeness {
            return Err(Error::validation(format!(
                "elements do not sum to the identity (defect {defect:.3e})"
            )));
        }
        Ok(())
    }

    /// `Σ_g Tr(B_g M_g)`
    pub fn objective(&self, b: &[HermOp]) -> f64 {
        self.elements.iter().zip(b).map(|(m, b)| m.inner(b)).sum()
    }
}

fn validate_density(rho: &HermOp, tol: &Tolerances) -> std::result::Result<(), String> {
    let t = rho.trace();
    if (t - 1.0).abs() > tol.trace {
        return Err(format!("trace {t}"));
    }
    let lo = hermitian_eig(rho).map_err(|e| e.to_string())?.min();
    if lo < -tol.psd {
        return Err(format!("min eigenvalue {lo:.3e}"));
    }
    Ok(())
}

/// Prepare-and-measure strategy: `2d` states and Bob's two measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct PmStrategy {
    d: usize,
    /// `states[x0 * 2 + x]`
    states: Vec<HermOp>,
    measurements: [Povm; 2],
}

impl PmStrategy {
    /// Validates against the strict tolerances.
    pub fn new(d: usize, states: Vec<HermOp>, measurements: [Povm; 2]) -> Result<Self> {
        Self::with_tolerances(d, states, measurements, &Tolerances::STRICT)
    }

    pub fn with_tolerances(
        d: usize,
        states: Vec<HermOp>,
        measurements: [Povm; 2],
        tol: &Tolerances,
    ) -> Result<Self> {
        if states.len() != 2 * d {
            return Err(Error::validation(format!(
                "expected {} states, got {}",
                2 * d,
                states.len()
            )));
        }
        for (i, rho) in states.iter().enumerate() {
            if rho.dim() != d {
                return Err(Error::validation(format!(
                    "state rho[{},{}] has dimension {}, expected {d}",
                    i / 2,
                    i % 2,
                    rho.dim()
                )));
            }
            validate_density(rho, tol)
                .map_err(|m| Error::validation(format!("state rho[{},{}]: {m}", i / 2, i % 2)))?;
        }
        for (y, m) in measurements.iter().enumerate() {
            if m.dim() != d || m.outcomes() != d {
                return Err(Error::validation(format!(
                    "measurement {y} must have {d} outcomes on C^{d}"
                )));
            }
            m.validate(tol)
                .map_err(|e| Error::validation(format!("measurement {y}: {e}")))?;
        }
        Ok(PmStrategy {
            d,
            states,
            measurements,
        })
    }

    pub(crate) fn from_parts_unchecked(d: usize, states: Vec<HermOp>, measurements: [Povm; 2]) -> Self {
        PmStrategy {
            d,
            states,
            measurements,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn state(&self, x0: usize, x: usize) -> &HermOp {
        &self.states[x0 * 2 + x]
    }

    pub fn states(&self) -> &[HermOp] {
        &self.states
    }

    pub fn measurement(&self, y: usize) -> &Povm {
        &self.measurements[y]
    }

    pub fn measurements(&self) -> &[Povm; 2] {
        &self.measurements
    }

    /// `rho -> U rho U^dagger`, `M -> U M U^dagger`.
    pub fn conjugated(&self, u: &ComplexMatrix) -> PmStrategy {
        let states = self.states.iter().map(|r| r.conjugate_by(u)).collect();
        let measurements = [0, 1].map(|y| {
            Povm::from_elements_unchecked(
                self.measurements[y].elements().iter().map(|m| m.conjugate_by(u)).collect(),
            )
        });
        PmStrategy {
            d: self.d,
            states,
            measurements,
        }
    }
}

/// `(1/4d) Σ_{x0,x,y,g} s(g|x0,x,y) Tr(rho_{x0,x} M_y^g)`
pub fn evaluate_qs(game: &GameSpec, strat: &PmStrategy) -> Result<f64> {
    let d = game.dim();
    if strat.dim() != d {
        return Err(Error::domain(format!(
            "strategy has dimension {}, game has {d}",
            strat.dim()
        )));
    }
    let mut total = 0.0;
    for x0 in 0..d {
        for x in 0..2 {
            let rho = strat.state(x0, x);
            for y in 0..2 {
                let row = game.score_row(x0, x, y);
                for (g, m) in strat.measurement(y).elements().iter().enumerate() {
                    if row[g] != 0.0 {
                        total += row[g] * rho.inner(m);
                    }
                }
            }
        }
    }
    Ok(total / (4 * d) as f64)
}

/// Entanglement-assisted strategy: `|psi>` on `C^d ⊗ C^d` and two
/// `d`-outcome measurements per party.
#[derive(Clone, Debug, PartialEq)]
pub struct BellStrategy {
    d: usize,
    psi: Ket,
    alice: [Povm; 2],
    bob: [Povm; 2],
}

impl BellStrategy {
    pub fn new(d: usize, psi: Ket, alice: [Povm; 2], bob: [Povm; 2]) -> Result<Self> {
        Self::with_tolerances(d, psi, alice, bob, &Tolerances::STRICT)
    }

    pub fn with_tolerances(
        d: usize,
        psi: Ket,
        alice: [Povm; 2],
        bob: [Povm; 2],
        tol: &Tolerances,
    ) -> Result<Self> {
        if psi.dim() != d * d {
            return Err(Error::validation(format!(
                "shared state has dimension {}, expected {}",
                psi.dim(),
                d * d
            )));
        }
        for (name, povms) in [("alice", &alice), ("bob", &bob)] {
            for (s, m) in povms.iter().enumerate() {
                if m.dim() != d || m.outcomes() != d {
                    return Err(Error::validation(format!(
                        "{name} measurement {s} must have {d} outcomes on C^{d}"
                    )));
                }
                m.validate(tol)
                    .map_err(|e| Error::validation(format!("{name} measurement {s}: {e}")))?;
            }
        }
        Ok(BellStrategy { d, psi, alice, bob })
    }

    pub(crate) fn from_parts_unchecked(d: usize, psi: Ket, alice: [Povm; 2], bob: [Povm; 2]) -> Self {
        BellStrategy { d, psi, alice, bob }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn psi(&self) -> &Ket {
        &self.psi
    }

    pub fn alice(&self, x: usize) -> &Povm {
        &self.alice[x]
    }

    pub fn bob(&self, y: usize) -> &Povm {
        &self.bob[y]
    }

    pub fn alice_measurements(&self) -> &[Povm; 2] {
        &self.alice
    }

    pub fn bob_measurements(&self) -> &[Povm; 2] {
        &self.bob
    }

    /// The amplitudes reshaped as a `d x d` matrix, `Psi(i, k) = psi[i d + k]`.
    pub(crate) fn psi_matrix(&self) -> ComplexMatrix {
        let d = self.d;
        let a = self.psi.amplitudes();
        ComplexMatrix::from_fn(d, d, |i, k| a[i * d + k])
    }
}

/// `<psi| A ⊗ B |psi>` with `psi` given as its `d x d` reshaping.
pub(crate) fn product_expectation(psi: &ComplexMatrix, a: &HermOp, b: &HermOp) -> f64 {
    // (A ⊗ B) psi reshapes to A Psi B^T
    let apb = &(a.matrix() * psi) * &b.matrix().transpose();
    psi.as_slice()
        .iter()
        .zip(apb.as_slice())
        .map(|(p, q)| (p.conj() * q).re)
        .sum()
}

/// Conditional distribution `p(a, b | x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Behavior {
    d: usize,
    /// `p[((x * 2 + y) * d + a) * d + b]`
    p: Vec<f64>,
}

impl Behavior {
    pub const NONNEG_TOL: f64 = 1e-9;
    pub const NORMALIZATION_TOL: f64 = 1e-8;

    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Result<Self> {
        let mut p = vec![0.0; 4 * d * d];
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..d {
                    for b in 0..d {
                        p[((x * 2 + y) * d + a) * d + b] = f(a, b, x, y);
                    }
                }
            }
        }
        let beh = Behavior { d, p };
        beh.validate()?;
        Ok(beh)
    }

    pub fn uniform(d: usize) -> Self {
        Behavior {
            d,
            p: vec![1.0 / (d * d) as f64; 4 * d * d],
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.p[((x * 2 + y) * self.d + a) * self.d + b]
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        for x in 0..2 {
            for y in 0..2 {
                let slice = &self.p[(x * 2 + y) * d * d..(x * 2 + y + 1) * d * d];
                if let Some(v) = slice.iter().find(|&&v| !(v >= -Self::NONNEG_TOL)) {
                    return Err(Error::validation(format!(
                        "behavior p(.,.|{x},{y}) has entry {v}"
                    )));
                }
                let s: f64 = slice.iter().sum();
                if (s - 1.0).abs() > Self::NORMALIZATION_TOL {
                    return Err(Error::validation(format!(
                        "behavior p(.,.|{x},{y}) sums to {s}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Largest change of either party's marginal under the other party's
    /// setting.
    pub fn signaling_defect(&self) -> f64 {
        let d = self.d;
        let mut worst = 0.0f64;
        for x in 0..2 {
            for a in 0..d {
                let m = |y: usize| (0..d).map(|b| self.get(a, b, x, y)).sum::<f64>();
                worst = worst.max((m(0) - m(1)).abs());
            }
        }
        for y in 0..2 {
            for b in 0..d {
                let m = |x: usize| (0..d).map(|a| self.get(a, b, x, y)).sum::<f64>();
                worst = worst.max((m(0) - m(1)).abs());
            }
        }
        worst
    }
}

/// `p(a, b | x, y) = <psi| A_x^a ⊗ B_y^b |psi>`
pub fn behavior_from_bell(strat: &BellStrategy) -> Result<Behavior> {
    let d = strat.dim();
    let psi = strat.psi_matrix();
    let beh = Behavior::from_fn(d, |a, b, x, y| {
        product_expectation(&psi, strat.alice(x).element(a), strat.bob(y).element(b))
    })?;
    let defect = beh.signaling_defect();
    if defect > Behavior::NORMALIZATION_TOL {
        return Err(Error::validation(format!(
            "behavior signals (defect {defect:.3e})"
        )));
    }
    Ok(beh)
}

/// Guess distribution produced by Alice sending `m = x0 + a` and Bob
/// answering `g = m − b`.
pub fn induced_guess_distribution(beh: &Behavior) -> GuessDistribution {
    let d = beh.dim();
    GuessDistribution::from_fn(d, |g, x0, x, y| {
        let mut acc = 0.0;
        for a in 0..d {
            // x0 + a − b ≡ g  ⇔  b ≡ x0 + a − g
            let b = mod_d(x0 as i64 + a as i64 - g as i64, d);
            acc += beh.get(a, b, x, y);
        }
        acc
    })
}

/// Payoff of a behavior through the encode/decode map.
pub fn evaluate_bell(game: &GameSpec, beh: &Behavior) -> Result<f64> {
    if beh.dim() != game.dim() {
        return Err(Error::domain(format!(
            "behavior has dimension {}, game has {}",
            beh.dim(),
            game.dim()
        )));
    }
    payoff_from_guess_distribution(game, &induced_guess_distribution(beh))
}

/// Direct enumeration of the protocol over all inputs and outcomes.
pub fn simulate_protocol(game: &GameSpec, beh: &Behavior) -> Result<f64> {
    let d = game.dim();
    if beh.dim() != d {
        return Err(Error::domain(format!(
            "behavior has dimension {}, game has {d}",
            beh.dim()
        )));
    }
    beh.validate()?;
    let mut total = 0.0;
    for x0 in 0..d {
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..d {
                    let message = (x0 + a) % d;
                    for b in 0..d {
                        let guess = (message + d - b) % d;
                        total += beh.get(a, b, x, y) * game.score(guess, x0, x, y);
                    }
                }
            }
        }
    }
    Ok(total / (4 * d) as f64)
}

/// `(1/√d) Σ_i |i>|i>`
pub fn maximally_entangled(d: usize) -> Ket {
    let mut v = vec![ZERO; d * d];
    let s = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        v[i * d + i] = C64::new(s, 0.0);
    }
    Ket::from_normalized(v)
}
