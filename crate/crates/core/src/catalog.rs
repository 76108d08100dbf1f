//! Canonical models, built from closed-form rules over Bell scenarios.

use crate::empirical::EmpiricalModel;
use crate::error::Result;
use crate::rational::{q, Rational};
use crate::scenario::{bell_scenario, setting_tuple, MeasurementScenario};

fn bit(x: usize, k: usize, width: usize) -> u8 {
    ((x >> (width - 1 - k)) & 1) as u8
}

/// Builds an `(n, 2, 2)` model from `rule(settings, outcomes)`, where both
/// arguments hold one bit per party.
fn from_rule(parties: usize, rule: impl Fn(&[u8], &[u8]) -> Rational) -> Result<EmpiricalModel> {
    let s = bell_scenario(parties, 2)?;
    let tables = (0..s.num_contexts())
        .map(|c| {
            let settings: Vec<u8> = setting_tuple(c, parties, 2).into_iter().map(|v| v as u8).collect();
            (0..1usize << parties)
                .map(|sec| {
                    let outcomes: Vec<u8> = (0..parties).map(|k| bit(sec, k, parties)).collect();
                    rule(&settings, &outcomes)
                })
                .collect()
        })
        .collect();
    EmpiricalModel::new(s, tables, true)
}

fn xor(bits: &[u8]) -> u8 {
    bits.iter().fold(0, |a, b| a ^ b)
}

/// `p(x1 x2 | X1 X2) = 1/2` iff `x1 ^ x2 = X1 X2 ^ alpha X1 ^ beta X2 ^ gamma`.
pub fn pr_box(alpha: bool, beta: bool, gamma: bool) -> EmpiricalModel {
    let (a, b, g) = (u8::from(alpha), u8::from(beta), u8::from(gamma));
    from_rule(2, |x, o| {
        let target = (x[0] & x[1]) ^ (a & x[0]) ^ (b & x[1]) ^ g;
        if xor(o) == target {
            q(1, 2)
        } else {
            Rational::zero()
        }
    })
    .expect("PR boxes are valid models")
}

/// All eight PR boxes, indexed by `(alpha, beta, gamma)` read as a 3-bit number.
pub fn pr_boxes() -> Vec<EmpiricalModel> {
    (0..8).map(|k| pr_box(k & 4 != 0, k & 2 != 0, k & 1 != 0)).collect()
}

/// GHZ correlations: on contexts with even setting parity the outcome parity
/// is `1 ^ X1X2X3 ^ X1X2 ^ X2X3 ^ X3X1` with weight 1/4 each, the other four
/// contexts are uniform.
pub fn ghz_model() -> EmpiricalModel {
    from_rule(3, |x, o| {
        if xor(x) == 1 {
            return q(1, 8);
        }
        let f = 1 ^ (x[0] & x[1] & x[2]) ^ (x[0] & x[1]) ^ (x[1] & x[2]) ^ (x[2] & x[0]);
        if xor(o) == f {
            q(1, 4)
        } else {
            Rational::zero()
        }
    })
    .expect("GHZ table is a valid model")
}

/// `p = 1/4` iff `x1 ^ x2 ^ x3 = X1 X2 X3`.
pub fn three_way_box() -> EmpiricalModel {
    from_rule(3, |x, o| {
        if xor(o) == x[0] & x[1] & x[2] {
            q(1, 4)
        } else {
            Rational::zero()
        }
    })
    .expect("three-way box is a valid model")
}

/// Strongly contextual (3,2,2) table whose bipartite marginals are not
/// uniform. Transcribed entry by entry; no closed form is known.
pub fn asymmetric_scc_model() -> EmpiricalModel {
    const ROWS: [[(i64, i64); 8]; 8] = {
        const Z: (i64, i64) = (0, 1);
        const Q: (i64, i64) = (1, 4);
        const H: (i64, i64) = (1, 2);
        [
            [Z, Q, H, Z, Q, Z, Z, Z],
            [Q, Z, Z, H, Z, Q, Z, Z],
            [Q, Z, Q, Q, Q, Z, Z, Z],
            [Q, Z, Z, H, Z, Q, Z, Z],
            [Z, Q, H, Z, Q, Z, Z, Z],
            [Q, Z, Z, H, Z, Q, Z, Z],
            [H, Z, Z, Q, Z, Z, Q, Z],
            [Q, Q, Z, Q, Z, Z, Z, Q],
        ]
    };
    let tables = ROWS.iter().map(|r| r.iter().map(|&(n, d)| q(n, d)).collect()).collect();
    EmpiricalModel::new(bell_scenario(3, 2).expect("bell scenario"), tables, true).expect("table is a valid model")
}

/// The point distribution on one global assignment (packed as in
/// [`crate::scenario::GlobalAssignment::from_index`]).
pub fn deterministic_model(s: &MeasurementScenario, assignment: u64) -> Result<EmpiricalModel> {
    crate::scenario::check_enumerable(s)?;
    let tables = (0..s.num_contexts())
        .map(|c| {
            let hit = s.section_of_packed(c, assignment);
            (0..s.num_sections(c)).map(|k| if k == hit { Rational::one() } else { Rational::zero() }).collect()
        })
        .collect();
    EmpiricalModel::new(s.clone(), tables, true)
}

/// Every section of every context equally likely.
pub fn uniform_model(s: &MeasurementScenario) -> Result<EmpiricalModel> {
    let tables = (0..s.num_contexts())
        .map(|c| {
            let k = s.num_sections(c);
            vec![Rational::new(1, k as i64); k]
        })
        .collect();
    EmpiricalModel::new(s.clone(), tables, true)
}

/// Names accepted by [`by_name`].
pub const CATALOG_NAMES: &[&str] = &["pr-box", "ghz", "three-way-box", "asymmetric-scc"];

/// Looks up a catalog entry; `pr-box` uses `bits` as (alpha, beta, gamma).
pub fn by_name(name: &str, bits: (bool, bool, bool)) -> Option<EmpiricalModel> {
    match name {
        "pr-box" => Some(pr_box(bits.0, bits.1, bits.2)),
        "ghz" => Some(ghz_model()),
        "three-way-box" => Some(three_way_box()),
        "asymmetric-scc" => Some(asymmetric_scc_model()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::marginal;

    #[test]
    fn pr_box_entries() {
        let m = pr_box(false, false, false);
        assert_eq!(*m.prob(0, 0b00), q(1, 2));
        assert_eq!(*m.prob(0, 0b01), Rational::zero());
        assert_eq!(*m.prob(3, 0b01), q(1, 2));
        for c in 0..4 {
            for o in m.scenario().contexts()[c].clone() {
                assert_eq!(marginal(&m, c, &[o]).unwrap(), vec![q(1, 2), q(1, 2)]);
            }
        }
    }

    #[test]
    fn eight_distinct_pr_boxes() {
        let boxes = pr_boxes();
        for i in 0..8 {
            for j in i + 1..8 {
                assert_ne!(boxes[i].tables(), boxes[j].tables());
            }
        }
    }

    #[test]
    fn ghz_rows() {
        let m = ghz_model();
        assert_eq!(*m.prob(0, 0b001), q(1, 4));
        assert_eq!(*m.prob(0, 0b000), Rational::zero());
        assert!(m.row(1).iter().all(|p| *p == q(1, 8)));
    }

    #[test]
    fn three_way_supports() {
        let m = three_way_box();
        for c in 0..8 {
            for sec in 0..8usize {
                let odd = sec.count_ones() % 2 == 1;
                let want = if c == 7 { odd } else { !odd };
                assert_eq!(m.prob(c, sec).is_positive(), want);
            }
        }
    }

    #[test]
    fn asymmetric_first_row() {
        let m = asymmetric_scc_model();
        let want: Vec<Rational> = [(0, 1), (1, 4), (1, 2), (0, 1), (1, 4), (0, 1), (0, 1), (0, 1)]
            .iter()
            .map(|&(n, d)| q(n, d))
            .collect();
        assert_eq!(m.row(0), want.as_slice());
    }

    #[test]
    fn named_lookup() {
        for name in CATALOG_NAMES {
            assert!(by_name(name, (false, false, false)).is_some());
        }
        assert!(by_name("nope", (false, false, false)).is_none());
    }
}
