//! Fixtures, strategies and property checks shared by the integration tests.
#![allow(dead_code)]

use std::sync::OnceLock;

use amcc::analysis::{contextual_fraction, is_contextual, is_strongly_contextual};
use amcc::catalog::{asymmetric_scc_model, deterministic_model, ghz_model, pr_boxes, three_way_box};
use amcc::construct::{parity_consistent, parity_system, parity_to_possibilistic, parity_vector, csp_satisfiable};
use amcc::empirical::{lift_uniform, lift_uniform_unchecked, marginal, possibilistic_collapse, EmpiricalModel, PossibilisticModel, Support};
use amcc::scenario::{bell_polytope_dimension, bell_scenario, MeasurementScenario};
use amcc::{q, Rational};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

/// Weighted average of tables computed entry by entry.
pub fn mixture(parts: &[(&EmpiricalModel, u32)]) -> EmpiricalModel {
    let total: u32 = parts.iter().map(|(_, w)| w).sum();
    let first = parts[0].0;
    let tables = (0..first.tables().len())
        .map(|c| {
            (0..first.row(c).len())
                .map(|s| {
                    parts
                        .iter()
                        .map(|(m, w)| m.prob(c, s) * &Rational::new(i64::from(*w), i64::from(total)))
                        .sum()
                })
                .collect()
        })
        .collect();
    EmpiricalModel::new(first.scenario().clone(), tables, true).expect("mixtures of no-signaling models are valid")
}

fn vertices(s: &MeasurementScenario, extra: Vec<EmpiricalModel>) -> Vec<EmpiricalModel> {
    let mut v = extra;
    for g in 0..1u64 << s.num_observables() {
        v.push(deterministic_model(s, g).unwrap());
    }
    v
}

/// PR boxes first, then the 16 deterministic models.
pub fn vertices_222() -> &'static [EmpiricalModel] {
    static V: OnceLock<Vec<EmpiricalModel>> = OnceLock::new();
    V.get_or_init(|| vertices(&bell_scenario(2, 2).unwrap(), pr_boxes()))
}

/// Contextual (3,2,2) models first, then the 64 deterministic models.
pub fn vertices_322() -> &'static [EmpiricalModel] {
    static V: OnceLock<Vec<EmpiricalModel>> = OnceLock::new();
    V.get_or_init(|| {
        let s = bell_scenario(3, 2).unwrap();
        let mut extra = vec![ghz_model(), three_way_box(), asymmetric_scc_model()];
        for idx in [0b00000001u64, 0b10010110, 0b01111111, 0b11101000] {
            let ps = parity_system(&s, &parity_vector(idx, 8)).unwrap();
            extra.push(lift_uniform(&parity_to_possibilistic(&ps)).unwrap());
        }
        vertices(&s, extra)
    })
}

/// Number of leading contextual vertices in each list.
pub const CONTEXTUAL_222: usize = 8;
pub const CONTEXTUAL_322: usize = 7;

fn mixture_of(pool: &'static [EmpiricalModel], contextual: usize) -> impl Strategy<Value = EmpiricalModel> {
    let any = prop::collection::vec((0..pool.len(), 1u32..6), 1..4);
    let only_contextual = prop::collection::vec((0..contextual, 1u32..6), 1..3);
    prop_oneof![any, only_contextual].prop_map(move |picks| {
        let parts: Vec<(&EmpiricalModel, u32)> = picks.iter().map(|&(i, w)| (&pool[i], w)).collect();
        mixture(&parts)
    })
}

pub fn ns_model_222() -> impl Strategy<Value = EmpiricalModel> {
    mixture_of(vertices_222(), CONTEXTUAL_222)
}

pub fn ns_model_322() -> impl Strategy<Value = EmpiricalModel> {
    mixture_of(vertices_322(), CONTEXTUAL_322)
}

pub fn ns_model() -> impl Strategy<Value = EmpiricalModel> {
    prop_oneof![ns_model_222(), ns_model_322()]
}

/// Two models over the same scenario.
pub fn ns_model_pair() -> impl Strategy<Value = (EmpiricalModel, EmpiricalModel)> {
    prop_oneof![(ns_model_222(), ns_model_222()), (ns_model_322(), ns_model_322())]
}

/// `(parties, parity vector index)` over (2,2,2) and (3,2,2).
pub fn parity_choice() -> impl Strategy<Value = (usize, u64)> {
    prop_oneof![(Just(2usize), 0u64..16), (Just(3usize), 0u64..256)]
}

/// Arbitrary nonempty supports over (2,2,2) or (3,2,2).
pub fn possibilistic() -> impl Strategy<Value = PossibilisticModel> {
    let small = prop::collection::vec(1u32..16, 4).prop_map(|rows| (2usize, rows));
    let large = prop::collection::vec(1u32..256, 8).prop_map(|rows| (3usize, rows));
    prop_oneof![small, large].prop_map(|(n, rows)| {
        let width = 1usize << n;
        let supports = rows.iter().map(|&r| Support::from_indices(width, (0..width).filter(|k| r >> k & 1 == 1))).collect();
        PossibilisticModel::new(bell_scenario(n, 2).unwrap(), supports).unwrap()
    })
}

/// Rank over the rationals by plain Gaussian elimination.
pub fn rational_rank(mut rows: Vec<Vec<Rational>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else { continue };
        rows.swap(rank, p);
        let pivot = rows[rank][col].clone();
        let prow = rows[rank].clone();
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let f = &rows[r][col] / &pivot;
                for k in col..cols {
                    let d = &f * &prow[k];
                    rows[r][k] = &rows[r][k] - &d;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Affine dimension of the local polytope of a binary Bell scenario: the
/// deterministic models span it, and all lie on the normalization plane.
pub fn local_polytope_dimension(parties: usize, settings: usize) -> usize {
    let s = bell_scenario(parties, settings).unwrap();
    let vectors: Vec<Vec<Rational>> =
        (0..1u64 << s.num_observables()).map(|g| deterministic_model(&s, g).unwrap().flat()).collect();
    rational_rank(vectors) - 1
}

// ---------------------------------------------------------------------------
// Property checks, each returning a proptest verdict.

pub fn check_cf_one_iff_strong(m: &EmpiricalModel) -> Result<(), TestCaseError> {
    let cf = contextual_fraction(m).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let sc = is_strongly_contextual(m).unwrap();
    prop_assert!(!cf.is_negative() && cf <= Rational::one());
    prop_assert_eq!(cf == Rational::one(), sc, "cf = {}", cf);
    let contextual = is_contextual(m).unwrap().contextual;
    prop_assert_eq!(cf.is_zero(), !contextual);
    Ok(())
}

pub fn check_parity_iff_sat(parties: usize, index: u64) -> Result<(), TestCaseError> {
    let s = bell_scenario(parties, 2).unwrap();
    let ps = parity_system(&s, &parity_vector(index, s.num_contexts())).unwrap();
    let consistent = parity_consistent(&ps).unwrap().is_consistent();
    let sat = csp_satisfiable(&parity_to_possibilistic(&ps)).unwrap().is_some();
    prop_assert_eq!(consistent, sat);
    Ok(())
}

pub fn check_marginal_agreement(m: &EmpiricalModel) -> Result<(), TestCaseError> {
    let s = m.scenario();
    for i in 0..s.num_contexts() {
        for j in i + 1..s.num_contexts() {
            let shared: Vec<usize> = s.contexts()[i].iter().copied().filter(|o| s.contexts()[j].contains(o)).collect();
            // every nonempty subset of the overlap
            for mask in 1u32..1 << shared.len() {
                let u: Vec<usize> = (0..shared.len()).filter(|k| mask >> k & 1 == 1).map(|k| shared[k]).collect();
                let a = marginal(m, i, &u).unwrap();
                let b = marginal(m, j, &u).unwrap();
                prop_assert_eq!(&a, &b);
                prop_assert_eq!(a.iter().cloned().sum::<Rational>(), Rational::one());
            }
        }
    }
    Ok(())
}

pub const MIX_WEIGHTS: [(i64, i64); 5] = [(0, 1), (1, 4), (1, 2), (3, 4), (1, 1)];

pub fn check_cf_convex(a: &EmpiricalModel, b: &EmpiricalModel, weight: usize) -> Result<(), TestCaseError> {
    let lambda = q(MIX_WEIGHTS[weight].0, MIX_WEIGHTS[weight].1);
    let mixed = EmpiricalModel::mix(a, b, &lambda).unwrap();
    let lhs = contextual_fraction(&mixed).unwrap();
    let rhs = &lambda * &contextual_fraction(a).unwrap() + &(Rational::one() - &lambda) * &contextual_fraction(b).unwrap();
    prop_assert!(lhs <= rhs, "CF(mix) = {} > {}", lhs, rhs);
    Ok(())
}

pub fn check_collapse_lift(p: &PossibilisticModel) -> Result<(), TestCaseError> {
    let lifted = lift_uniform_unchecked(p).unwrap();
    prop_assert_eq!(&possibilistic_collapse(&lifted), p);
    if let Ok(checked) = lift_uniform(p) {
        prop_assert_eq!(checked.tables(), lifted.tables());
    }
    Ok(())
}

/// Binary Bell shapes with at most six observables.
pub fn small_bell_shape() -> impl Strategy<Value = (usize, usize)> {
    prop::sample::select(vec![(1, 1), (1, 2), (1, 3), (1, 6), (2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (4, 1), (6, 1)])
}

pub fn check_polytope_dimension(parties: usize, settings: usize) -> Result<(), TestCaseError> {
    let claimed = bell_polytope_dimension(parties, settings, 2) as usize;
    prop_assert_eq!(claimed, local_polytope_dimension(parties, settings));
    Ok(())
}
