//! Published strategies for `d = 6..10`, transcribed with their printed
//! two-decimal entries.
//!
//! In measurement 1 for `d = 9` the printed chain of equal operators
//! (outcomes 0, 2, 4 and 7) lacks its right-hand side; the remaining ranks
//! already add up to 9, so the fixture marks all four as zero.

use super::file::{ParseOptions, StrategyFile, Strategy};
use crate::error::{Error, Result};
use crate::linalg::Tolerances;
use crate::strategies::PmStrategy;

const FIXTURES: [(usize, &str); 5] = [
    (6, include_str!("../../data/appendix/d6.json")),
    (7, include_str!("../../data/appendix/d7.json")),
    (8, include_str!("../../data/appendix/d8.json")),
    (9, include_str!("../../data/appendix/d9.json")),
    (10, include_str!("../../data/appendix/d10.json")),
];

pub const APPENDIX_DIMS: std::ops::RangeInclusive<usize> = 6..=10;

/// The fixture as shipped.
pub fn appendix_text(d: usize) -> Result<&'static str> {
    FIXTURES
        .iter()
        .find(|(k, _)| *k == d)
        .map(|(_, text)| *text)
        .ok_or_else(|| Error::domain(format!("no published strategy for d = {d} (have 6..10)")))
}

/// The published strategy for `d`, canonicalized and with both POVMs
/// rescaled to exact completeness.
pub fn load_appendix(d: usize) -> Result<PmStrategy> {
    let opts = ParseOptions {
        tolerances: Tolerances::LENIENT,
        repair: true,
    };
    let parsed = StrategyFile::from_json(appendix_text(d)?)?.to_strategy(&opts)?;
    match parsed.strategy {
        Strategy::PrepareMeasure(s) => Ok(s),
        Strategy::Bell(_) => Err(Error::validation("fixture is not a prepare-and-measure strategy")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::file::{OperatorEntry, StrategyFile};
    use crate::game::build_game;
    use crate::strategies::evaluate_qs;

    fn ranks(d: usize, y: usize) -> Vec<usize> {
        let file = StrategyFile::from_json(appendix_text(d).unwrap()).unwrap();
        let m = file.measurements.iter().find(|m| m.y == Some(y)).unwrap();
        m.operators
            .iter()
            .map(|op| match op {
                OperatorEntry::Zero => 0,
                OperatorEntry::Kets { kets } => kets.len(),
                OperatorEntry::Matrix { .. } => panic!("fixtures list kets"),
            })
            .collect()
    }

    #[test]
    fn d6_layout() {
        let file = StrategyFile::from_json(appendix_text(6).unwrap()).unwrap();
        assert_eq!(file.states.len(), 12);
        assert_eq!(ranks(6, 0), vec![1; 6]);
        assert_eq!(ranks(6, 1), vec![0, 2, 0, 2, 0, 2]);
    }

    #[test]
    fn d9_zero_operators() {
        let r = ranks(9, 1);
        let zeros: Vec<usize> = (0..9).filter(|&g| r[g] == 0).collect();
        assert_eq!(zeros, vec![0, 2, 4, 7]);
        assert_eq!(r.iter().sum::<usize>(), 9);
    }

    #[test]
    fn ranks_add_up_to_dimension() {
        for d in APPENDIX_DIMS {
            for y in 0..2 {
                assert_eq!(ranks(d, y).iter().sum::<usize>(), d, "d={d} y={y}");
            }
        }
    }

    #[test]
    fn d6_repeats_states() {
        let s = load_appendix(6).unwrap();
        assert!(s.state(0, 0).max_abs_diff(s.state(1, 0)) < 1e-15);
    }

    #[test]
    fn values_match_published_bounds() {
        for (d, target) in [(6, 0.8000), (7, 0.8175), (8, 0.8571), (9, 0.8622), (10, 0.8889)] {
            let s = load_appendix(d).unwrap();
            for m in s.measurements() {
                assert!(m.completeness_defect() <= 1e-8);
            }
            let v = evaluate_qs(&build_game(d).unwrap(), &s).unwrap();
            assert!((v - target).abs() <= 0.03, "d={d}: {v}");
        }
    }

    #[test]
    fn other_dimensions_are_rejected() {
        assert!(matches!(load_appendix(5), Err(Error::Domain(_))));
        assert!(matches!(load_appendix(11), Err(Error::Domain(_))));
    }

    #[test]
    fn round_trip_fixes_canonical_form() {
        for d in APPENDIX_DIMS {
            let once = StrategyFile::from_json(appendix_text(d).unwrap())
                .unwrap()
                .canonicalize()
                .unwrap();
            let text = once.to_json();
            let twice = StrategyFile::from_json(&text).unwrap().canonicalize().unwrap();
            assert_eq!(twice, once);
            assert_eq!(twice.to_json(), text);
        }
    }
}
