//! The strategy file format.
//!
//! A strategy file is a JSON document:
//!
//! ```text
//! {
//!   "dimension": 6,
//!   "model": "prepare-measure",
//!   "states": [{"x0": 0, "x": 0, "ket": [[re, im], ...]}, ...],
//!   "measurements": [
//!     {"y": 0, "operators": [{"kind": "kets", "kets": [[[re, im], ...]]}, {"kind": "zero"}, ...]},
//!     ...
//!   ]
//! }
//! ```
//!
//! States carry either a `ket` or a `density` matrix (rows of `[re, im]`
//! pairs). Measurement operators are `zero`, the projector onto the span of
//! `kets`, or an explicit `matrix`. Bell strategies (`"model": "bell"`) have
//! a single state entry holding the shared ket on `C^d ⊗ C^d` and four
//! measurement entries: Alice's are keyed by `x`, Bob's by `y`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    dot, gram_schmidt, inverse_sqrt, norm, span_projector, ComplexMatrix, HermOp, Ket,
    Tolerances, C64, MAX_OPERATOR_DIM,
};
use crate::strategies::{BellStrategy, PmStrategy, Povm};

/// A complex number as `[re, im]`.
pub type Complex = [f64; 2];

/// Kets and matrices closer than this to normalized or orthonormal are left
/// untouched by canonicalization, which makes it idempotent.
const CANONICAL_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    PrepareMeasure,
    Bell,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyFile {
    pub dimension: usize,
    pub model: Model,
    pub states: Vec<StateEntry>,
    pub measurements: Vec<MeasurementEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ket: Option<Vec<Complex>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<Vec<Vec<Complex>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<usize>,
    pub operators: Vec<OperatorEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OperatorEntry {
    Zero,
    Kets { kets: Vec<Vec<Complex>> },
    Matrix { matrix: Vec<Vec<Complex>> },
}

/// A strategy read from a file.
#[derive(Clone, Debug, PartialEq)]
pub enum Strategy {
    PrepareMeasure(PmStrategy),
    Bell(BellStrategy),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParseOptions {
    /// Profile the strategy is validated against before any repair.
    pub tolerances: Tolerances,
    /// Rescale every POVM by `T^{-1/2} · T^{-1/2}` with `T = Σ_g M_g` and
    /// revalidate under the strict profile.
    pub repair: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            tolerances: Tolerances::LENIENT,
            repair: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Parsed {
    pub strategy: Strategy,
    /// Largest `max |Σ_g M_g − I|` over all measurements, before repair.
    pub completeness_defect: f64,
    pub repaired: bool,
}

fn to_c64(z: &Complex) -> C64 {
    C64::new(z[0], z[1])
}

fn from_c64(z: C64) -> Complex {
    [z.re, z.im]
}

fn kets_of(list: &[Vec<Complex>]) -> Vec<Vec<C64>> {
    list.iter().map(|k| k.iter().map(to_c64).collect()).collect()
}

fn matrix_of(rows: &[Vec<Complex>]) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows.len(), rows.len(), |i, j| to_c64(&rows[i][j]))
}

fn rows_of(m: &ComplexMatrix) -> Vec<Vec<Complex>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| from_c64(m[(i, j)])).collect())
        .collect()
}

fn check_vector(v: &[Complex], len: usize, at: &str) -> Result<()> {
    if v.len() != len {
        return Err(Error::parse(at, format!("expected {len} amplitudes, got {}", v.len())));
    }
    if v.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::parse(at, "non-finite number"));
    }
    Ok(())
}

fn check_matrix(rows: &[Vec<Complex>], n: usize, at: &str) -> Result<()> {
    if rows.len() != n {
        return Err(Error::parse(at, format!("expected {n} rows, got {}", rows.len())));
    }
    for (i, r) in rows.iter().enumerate() {
        check_vector(r, n, &format!("{at}[{i}]"))?;
    }
    Ok(())
}

fn check_operator(op: &OperatorEntry, d: usize, at: &str) -> Result<()> {
    match op {
        OperatorEntry::Zero => Ok(()),
        OperatorEntry::Kets { kets } => {
            if kets.is_empty() || kets.len() > d {
                return Err(Error::parse(
                    format!("{at}.kets"),
                    format!("expected 1 to {d} kets, got {}", kets.len()),
                ));
            }
            for (i, k) in kets.iter().enumerate() {
                check_vector(k, d, &format!("{at}.kets[{i}]"))?;
            }
            Ok(())
        }
        OperatorEntry::Matrix { matrix } => check_matrix(matrix, d, &format!("{at}.matrix")),
    }
}

impl StrategyFile {
    /// Reads a document and checks its structure.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: StrategyFile = serde_json::from_str(text).map_err(|e| {
            Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        file.check()?;
        Ok(file)
    }

    /// One state or operator per line.
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n");
        out += &format!("  \"dimension\": {},\n", self.dimension);
        out += &format!("  \"model\": {},\n", line(&self.model));
        out += "  \"states\": [\n";
        let states: Vec<String> = self.states.iter().map(|s| format!("    {}", line(s))).collect();
        out += &states.join(",\n");
        out += "\n  ],\n  \"measurements\": [\n";
        let meas: Vec<String> = self
            .measurements
            .iter()
            .map(|m| {
                let mut key = String::new();
                if let Some(x) = m.x {
                    key += &format!("\"x\": {x}, ");
                }
                if let Some(y) = m.y {
                    key += &format!("\"y\": {y}, ");
                }
                let ops: Vec<String> = m.operators.iter().map(|o| format!("      {}", line(o))).collect();
                format!("    {{{key}\"operators\": [\n{}\n    ]}}", ops.join(",\n"))
            })
            .collect();
        out += &meas.join(",\n");
        out += "\n  ]\n}\n";
        out
    }

    /// Structural checks: shapes, index ranges and coverage.
    pub fn check(&self) -> Result<()> {
        let d = self.dimension;
        if d < 2 {
            return Err(Error::parse("dimension", format!("must be at least 2, got {d}")));
        }
        match self.model {
            Model::PrepareMeasure => self.check_prepare_measure(),
            Model::Bell => {
                if d * d > MAX_OPERATOR_DIM {
                    return Err(Error::parse(
                        "dimension",
                        format!("bell strategies need d^2 <= {MAX_OPERATOR_DIM}, got d = {d}"),
                    ));
                }
                self.check_bell()
            }
        }
    }

    fn check_prepare_measure(&self) -> Result<()> {
        let d = self.dimension;
        if d > MAX_OPERATOR_DIM {
            return Err(Error::parse("dimension", format!("at most {MAX_OPERATOR_DIM}, got {d}")));
        }
        if self.states.len() != 2 * d {
            return Err(Error::parse(
                "states",
                format!("expected {} entries, got {}", 2 * d, self.states.len()),
            ));
        }
        let mut seen = vec![false; 2 * d];
        for (i, s) in self.states.iter().enumerate() {
            let at = format!("states[{i}]");
            let (Some(x0), Some(x)) = (s.x0, s.x) else {
                return Err(Error::parse(at, "missing x0 or x"));
            };
            if x0 >= d || x > 1 {
                return Err(Error::parse(at, format!("inputs out of range: x0 = {x0}, x = {x}")));
            }
            if std::mem::replace(&mut seen[x0 * 2 + x], true) {
                return Err(Error::parse(at, format!("duplicate state for x0 = {x0}, x = {x}")));
            }
            match (&s.ket, &s.density) {
                (Some(k), None) => check_vector(k, d, &format!("{at}.ket"))?,
                (None, Some(m)) => check_matrix(m, d, &format!("{at}.density"))?,
                _ => return Err(Error::parse(at, "exactly one of ket and density is required")),
            }
        }
        if self.measurements.len() != 2 {
            return Err(Error::parse(
                "measurements",
                format!("expected 2 entries, got {}", self.measurements.len()),
            ));
        }
        let mut seen = [false; 2];
        for (i, m) in self.measurements.iter().enumerate() {
            let at = format!("measurements[{i}]");
            match (m.x, m.y) {
                (None, Some(y)) if y < 2 => {
                    if std::mem::replace(&mut seen[y], true) {
                        return Err(Error::parse(at, format!("duplicate measurement y = {y}")));
                    }
                }
                _ => return Err(Error::parse(at, "expected a key y in {0, 1} and no x")),
            }
            self.check_operators(m, &at)?;
        }
        Ok(())
    }

    fn check_bell(&self) -> Result<()> {
        let d = self.dimension;
        match self.states.as_slice() {
            [s] => {
                if s.x0.is_some() || s.x.is_some() || s.density.is_some() {
                    return Err(Error::parse("states[0]", "bell state takes only a ket"));
                }
                let Some(k) = &s.ket else {
                    return Err(Error::parse("states[0]", "missing ket"));
                };
                check_vector(k, d * d, "states[0].ket")?;
            }
            other => {
                return Err(Error::parse(
                    "states",
                    format!("bell strategies have one state, got {}", other.len()),
                ))
            }
        }
        if self.measurements.len() != 4 {
            return Err(Error::parse(
                "measurements",
                format!("expected 4 entries, got {}", self.measurements.len()),
            ));
        }
        let mut seen = [false; 4];
        for (i, m) in self.measurements.iter().enumerate() {
            let at = format!("measurements[{i}]");
            let slot = match (m.x, m.y) {
                (Some(x), None) if x < 2 => x,
                (None, Some(y)) if y < 2 => 2 + y,
                _ => return Err(Error::parse(at, "expected exactly one key, x or y, in {0, 1}")),
            };
            if std::mem::replace(&mut seen[slot], true) {
                return Err(Error::parse(at, "duplicate measurement"));
            }
            self.check_operators(m, &at)?;
        }
        Ok(())
    }

    fn check_operators(&self, m: &MeasurementEntry, at: &str) -> Result<()> {
        let d = self.dimension;
        if m.operators.len() != d {
            return Err(Error::parse(
                format!("{at}.operators"),
                format!("expected {d} operators, got {}", m.operators.len()),
            ));
        }
        for (g, op) in m.operators.iter().enumerate() {
            check_operator(op, d, &format!("{at}.operators[{g}]"))?;
        }
        Ok(())
    }

    /// Canonical form: entries sorted, kets normalized, each operator's kets
    /// orthonormalized, matrices Hermitian-symmetrized.
    pub fn canonicalize(&self) -> Result<StrategyFile> {
        self.check()?;
        let mut out = self.clone();
        out.states.sort_by_key(|s| (s.x, s.x0));
        out.measurements.sort_by_key(|m| (m.y.is_some(), m.x, m.y));
        for (i, s) in out.states.iter_mut().enumerate() {
            if let Some(k) = &mut s.ket {
                *k = canonical_ket(k).map_err(|e| Error::validation(format!("states[{i}]: {e}")))?;
            }
            if let Some(m) = &mut s.density {
                *m = rows_of(HermOp::symmetrized(&matrix_of(m)).matrix());
            }
        }
        for (i, m) in out.measurements.iter_mut().enumerate() {
            for (g, op) in m.operators.iter_mut().enumerate() {
                match op {
                    OperatorEntry::Zero => {}
                    OperatorEntry::Kets { kets } => {
                        *kets = canonical_kets(kets).map_err(|e| {
                            Error::validation(format!("measurements[{i}].operators[{g}]: {e}"))
                        })?;
                    }
                    OperatorEntry::Matrix { matrix } => {
                        *matrix = rows_of(HermOp::symmetrized(&matrix_of(matrix)).matrix());
                    }
                }
            }
        }
        Ok(out)
    }

    /// Builds the strategy under `opts.tolerances`, repairing POVMs when
    /// asked to.
    pub fn to_strategy(&self, opts: &ParseOptions) -> Result<Parsed> {
        let file = self.canonicalize()?;
        let d = file.dimension;
        let mut povms = Vec::with_capacity(file.measurements.len());
        for m in &file.measurements {
            let ops = m
                .operators
                .iter()
                .map(|op| operator(op, d))
                .collect::<Result<Vec<_>>>()?;
            povms.push(Povm::from_elements_unchecked(ops));
        }
        let defect = povms.iter().fold(0.0f64, |a, p| a.max(p.completeness_defect()));
        let tol = if opts.repair {
            povms = povms
                .into_iter()
                .map(|p| {
                    p.validate(&opts.tolerances)?;
                    repair_povm(&p)
                })
                .collect::<Result<_>>()?;
            log::info!("rescaled POVMs to completeness (defect before repair {defect:.3e})");
            Tolerances::STRICT
        } else {
            opts.tolerances
        };
        let pair = |v: &mut Vec<Povm>| -> [Povm; 2] {
            let b = v.pop().expect("two measurements");
            let a = v.pop().expect("two measurements");
            [a, b]
        };
        let strategy = match file.model {
            Model::PrepareMeasure => {
                let mut states = vec![HermOp::zeros(d); 2 * d];
                for s in &file.states {
                    let rho = match (&s.ket, &s.density) {
                        (Some(k), _) => HermOp::projector(&kets_of(std::slice::from_ref(k))[0]),
                        (_, Some(m)) => HermOp::symmetrized(&matrix_of(m)),
                        _ => unreachable!("checked above"),
                    };
                    states[s.x0.unwrap() * 2 + s.x.unwrap()] = rho;
                }
                let meas = pair(&mut povms);
                Strategy::PrepareMeasure(PmStrategy::with_tolerances(d, states, meas, &tol)?)
            }
            Model::Bell => {
                let amps = kets_of(std::slice::from_ref(file.states[0].ket.as_ref().unwrap()));
                let psi = Ket::new(amps.into_iter().next().unwrap())?;
                let bob = pair(&mut povms);
                let alice = pair(&mut povms);
                Strategy::Bell(BellStrategy::with_tolerances(d, psi, alice, bob, &tol)?)
            }
        };
        Ok(Parsed {
            strategy,
            completeness_defect: defect,
            repaired: opts.repair,
        })
    }

    pub fn from_pm_strategy(s: &PmStrategy) -> Result<Self> {
        let d = s.dim();
        let mut states = Vec::with_capacity(2 * d);
        for x in 0..2 {
            for x0 in 0..d {
                let (ket, density) = state_entry(s.state(x0, x))?;
                states.push(StateEntry {
                    x0: Some(x0),
                    x: Some(x),
                    ket,
                    density,
                });
            }
        }
        let measurements = (0..2)
            .map(|y| MeasurementEntry {
                x: None,
                y: Some(y),
                operators: operator_entries(s.measurement(y)),
            })
            .collect();
        Ok(StrategyFile {
            dimension: d,
            model: Model::PrepareMeasure,
            states,
            measurements,
        })
    }

    pub fn from_bell_strategy(s: &BellStrategy) -> Self {
        let ket = s.psi().amplitudes().iter().map(|&z| from_c64(z)).collect();
        let mut measurements: Vec<MeasurementEntry> = (0..2)
            .map(|x| MeasurementEntry {
                x: Some(x),
                y: None,
                operators: operator_entries(s.alice(x)),
            })
            .collect();
        measurements.extend((0..2).map(|y| MeasurementEntry {
            x: None,
            y: Some(y),
            operators: operator_entries(s.bob(y)),
        }));
        StrategyFile {
            dimension: s.dim(),
            model: Model::Bell,
            states: vec![StateEntry {
                x0: None,
                x: None,
                ket: Some(ket),
                density: None,
            }],
            measurements,
        }
    }
}

/// Reads, canonicalizes and builds a strategy.
pub fn parse_strategy(text: &str, opts: &ParseOptions) -> Result<Parsed> {
    StrategyFile::from_json(text)?.to_strategy(opts)
}

/// Canonical serialization of a strategy.
pub fn serialize_strategy(s: &Strategy) -> Result<String> {
    let file = match s {
        Strategy::PrepareMeasure(p) => StrategyFile::from_pm_strategy(p)?,
        Strategy::Bell(b) => StrategyFile::from_bell_strategy(b),
    };
    Ok(file.canonicalize()?.to_json())
}

fn canonical_ket(k: &[Complex]) -> Result<Vec<Complex>> {
    let v: Vec<C64> = k.iter().map(to_c64).collect();
    if (norm(&v) - 1.0).abs() <= CANONICAL_TOL {
        return Ok(k.to_vec());
    }
    Ok(Ket::new(v)?.amplitudes().iter().map(|&z| from_c64(z)).collect())
}

fn canonical_kets(kets: &[Vec<Complex>]) -> Result<Vec<Vec<Complex>>> {
    let vs = kets_of(kets);
    let orthonormal = vs.iter().enumerate().all(|(i, u)| {
        (norm(u) - 1.0).abs() <= CANONICAL_TOL
            && vs[..i].iter().all(|w| dot(w, u).norm() <= CANONICAL_TOL)
    });
    if orthonormal {
        return Ok(kets.to_vec());
    }
    let normalized = vs.into_iter().map(Ket::new).collect::<Result<Vec<_>>>()?;
    Ok(gram_schmidt(&normalized)?
        .iter()
        .map(|k| k.amplitudes().iter().map(|&z| from_c64(z)).collect())
        .collect())
}

fn operator(op: &OperatorEntry, d: usize) -> Result<HermOp> {
    Ok(match op {
        OperatorEntry::Zero => HermOp::zeros(d),
        OperatorEntry::Kets { kets } => {
            let ks = kets_of(kets).into_iter().map(Ket::new).collect::<Result<Vec<_>>>()?;
            span_projector(&ks)?
        }
        OperatorEntry::Matrix { matrix } => HermOp::symmetrized(&matrix_of(matrix)),
    })
}

/// `M_g ← T^{-1/2} M_g T^{-1/2}` with `T = Σ_g M_g`.
pub fn repair_povm(p: &Povm) -> Result<Povm> {
    let d = p.dim();
    let mut t = HermOp::zeros(d);
    for m in p.elements() {
        t += m;
    }
    let s = inverse_sqrt(&t)?;
    let elements = p.elements().iter().map(|m| m.conjugate_by(s.matrix())).collect();
    Povm::new(elements, &Tolerances::STRICT)
}

/// A rank-one state is written as its top eigenvector, anything else as a
/// density matrix.
fn state_entry(rho: &HermOp) -> Result<(Option<Vec<Complex>>, Option<Vec<Vec<Complex>>>)> {
    let e = crate::linalg::hermitian_eig(rho)?;
    if (e.max() - 1.0).abs() <= 1e-9 && e.values.iter().skip(1).all(|v| v.abs() <= 1e-9) {
        let v = e.top_vector();
        // fix the global phase: the first sizeable amplitude is real positive
        let lead = v.iter().copied().find(|z| z.norm() > 1e-6).unwrap_or(C64::new(1.0, 0.0));
        let phase = lead.conj() / lead.norm();
        return Ok((Some(v.iter().map(|&z| from_c64(z * phase)).collect()), None));
    }
    Ok((None, Some(rows_of(rho.matrix()))))
}

fn operator_entries(p: &Povm) -> Vec<OperatorEntry> {
    p.elements()
        .iter()
        .map(|m| {
            if m.matrix().max_abs() <= 1e-12 {
                OperatorEntry::Zero
            } else {
                OperatorEntry::Matrix {
                    matrix: rows_of(m.matrix()),
                }
            }
        })
        .collect()
}

fn line<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::build_game;
    use crate::strategies::evaluate_qs;

    const D2: &str = r#"{
      "dimension": 2,
      "model": "prepare-measure",
      "states": [
        {"x0": 0, "x": 0, "ket": [[1, 0], [0, 0]]},
        {"x0": 1, "x": 0, "ket": [[0, 0], [2, 0]]},
        {"x0": 0, "x": 1, "ket": [[1, 0], [1, 0]]},
        {"x0": 1, "x": 1, "density": [[[0.5, 0], [-0.5, 0]], [[-0.5, 0], [0.5, 0]]]}
      ],
      "measurements": [
        {"y": 0, "operators": [{"kind": "kets", "kets": [[[1, 0], [0, 0]]]}, {"kind": "kets", "kets": [[[0, 0], [1, 0]]]}]},
        {"y": 1, "operators": [{"kind": "matrix", "matrix": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}, {"kind": "zero"}]}
      ]
    }"#;

    #[test]
    fn parses_small_document() {
        let parsed = parse_strategy(D2, &ParseOptions::default()).unwrap();
        assert_eq!(parsed.completeness_defect, 0.0);
        let Strategy::PrepareMeasure(s) = parsed.strategy else {
            panic!("expected a prepare-and-measure strategy");
        };
        assert!((s.state(1, 0).trace() - 1.0).abs() < 1e-15);
        assert!((s.state(0, 1).matrix()[(0, 1)].re - 0.5).abs() < 1e-15);
        let v = evaluate_qs(&build_game(2).unwrap(), &s).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn round_trip_is_canonical() {
        let file = StrategyFile::from_json(D2).unwrap().canonicalize().unwrap();
        let again = StrategyFile::from_json(&file.to_json()).unwrap();
        assert_eq!(again, file);
        assert_eq!(again.canonicalize().unwrap(), file);
    }

    #[test]
    fn syntax_errors_carry_a_location() {
        let err = StrategyFile::from_json("{\n  \"dimension\": 2,\n  oops").unwrap_err();
        match err {
            Error::Parse { location, .. } => assert!(location.starts_with("line 3")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_errors_carry_a_path() {
        let bad = D2.replace(r#"[[0, 0], [2, 0]]"#, r#"[[0, 0]]"#);
        match StrategyFile::from_json(&bad).unwrap_err() {
            Error::Parse { location, .. } => assert_eq!(location, "states[1].ket"),
            other => panic!("unexpected {other:?}"),
        }
        let unknown = D2.replace("\"model\"", "\"modle\"");
        assert!(matches!(StrategyFile::from_json(&unknown), Err(Error::Parse { .. })));
        let kind = D2.replace("\"zero\"", "\"nothing\"");
        assert!(matches!(StrategyFile::from_json(&kind), Err(Error::Parse { .. })));
    }

    #[test]
    fn duplicate_and_missing_states_are_rejected() {
        let dup = D2.replace(r#""x0": 1, "x": 1"#, r#""x0": 0, "x": 1"#);
        assert!(matches!(StrategyFile::from_json(&dup), Err(Error::Parse { .. })));
    }

    #[test]
    fn incomplete_povm_needs_lenient_profile_or_repair() {
        let off = D2.replace(
            r#"[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}, {"kind": "zero"}"#,
            r#"[[[1.1, 0], [0, 0]], [[0, 0], [1, 0]]]}, {"kind": "zero"}"#,
        );
        let strict = ParseOptions {
            tolerances: Tolerances::STRICT,
            repair: false,
        };
        assert!(matches!(parse_strategy(&off, &strict), Err(Error::Validation(_))));
        let lenient = parse_strategy(&off, &ParseOptions::default()).unwrap();
        assert!((lenient.completeness_defect - 0.1).abs() < 1e-12);
        let repaired = parse_strategy(
            &off,
            &ParseOptions {
                repair: true,
                ..ParseOptions::default()
            },
        )
        .unwrap();
        let Strategy::PrepareMeasure(s) = repaired.strategy else {
            panic!("expected a prepare-and-measure strategy");
        };
        assert!(s.measurement(1).completeness_defect() < 1e-12);
    }

    #[test]
    fn ket_pairs_are_orthonormalized() {
        let kets = vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[0.1, 0.0], [1.0, 0.0]]];
        let out = canonical_kets(&kets).unwrap();
        let vs = kets_of(&out);
        assert!(dot(&vs[0], &vs[1]).norm() < 1e-15);
        assert!((norm(&vs[1]) - 1.0).abs() < 1e-15);
        assert_eq!(canonical_kets(&out).unwrap(), out);
    }

    #[test]
    fn bell_round_trip() {
        use crate::linalg::{random_unitary_from, GaussianStream};
        use crate::strategies::maximally_entangled;
        let d = 3;
        let mut g = GaussianStream::new(4, 0);
        let mut povm = || Povm::coarse_grained_basis(&random_unitary_from(d, &mut g), &[0, 1, 2], d);
        let s = BellStrategy::new(d, maximally_entangled(d), [povm(), povm()], [povm(), povm()]).unwrap();
        let text = serialize_strategy(&Strategy::Bell(s.clone())).unwrap();
        let back = parse_strategy(&text, &ParseOptions::default()).unwrap();
        let Strategy::Bell(b) = back.strategy else {
            panic!("expected a bell strategy");
        };
        for x in 0..2 {
            for (p, q) in b.alice(x).elements().iter().zip(s.alice(x).elements()) {
                assert!(p.max_abs_diff(q) < 1e-14);
            }
            for (p, q) in b.bob(x).elements().iter().zip(s.bob(x).elements()) {
                assert!(p.max_abs_diff(q) < 1e-14);
            }
        }
        assert_eq!(serialize_strategy(&Strategy::Bell(b)).unwrap(), text);
    }

    #[test]
    fn bell_documents_need_four_keyed_measurements() {
        let doc = r#"{"dimension": 2, "model": "bell",
            "states": [{"ket": [[1,0],[0,0],[0,0],[0,0]]}],
            "measurements": [{"x": 0, "operators": [{"kind": "zero"}, {"kind": "zero"}]}]}"#;
        match StrategyFile::from_json(doc).unwrap_err() {
            Error::Parse { location, .. } => assert_eq!(location, "measurements"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
