mod common;

use amcc::analysis::{avn_certificate, classify, incidence_matrix, is_strongly_contextual, AvnOutcome};
use amcc::applications::{certify_amcc_entropy, min_entropy};
use amcc::construct::{boolean_no_signaling, parity_system, parity_to_possibilistic, parity_vector};
use amcc::empirical::{is_maximal_marginal, lift_uniform, marginal, EmpiricalModel};
use amcc::scenario::{bell_scenario, enumerate_global_assignments, enumerate_sections, restrict, GlobalAssignment};
use amcc::Rational;
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 500, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn cf_one_iff_strongly_contextual(m in common::ns_model()) {
        common::check_cf_one_iff_strong(&m)?;
    }

    #[test]
    fn parity_consistency_iff_satisfiable((n, i) in common::parity_choice()) {
        common::check_parity_iff_sat(n, i)?;
    }

    #[test]
    fn marginals_agree_on_overlaps(m in common::ns_model()) {
        common::check_marginal_agreement(&m)?;
    }

    #[test]
    fn cf_is_convex(((a, b), w) in (common::ns_model_pair(), 0..common::MIX_WEIGHTS.len())) {
        common::check_cf_convex(&a, &b, w)?;
    }

    #[test]
    fn collapse_after_lift_is_identity(p in common::possibilistic()) {
        common::check_collapse_lift(&p)?;
    }

    #[test]
    fn polytope_dimension_matches_span((n, m) in common::small_bell_shape()) {
        common::check_polytope_dimension(n, m)?;
    }

    #[test]
    fn avn_certificate_iff_strong(m in common::ns_model()) {
        let sc = is_strongly_contextual(&m).unwrap();
        let cert = avn_certificate(&m).unwrap();
        prop_assert_eq!(matches!(cert, AvnOutcome::Certificate(_)), sc);
    }

    #[test]
    fn classify_never_disagrees(m in common::ns_model()) {
        let r = classify(&m).unwrap();
        prop_assert_eq!(r.amcc, r.strongly_contextual && r.maximal_marginal);
    }

    #[test]
    fn entropy_certificate_iff_maximal_marginal(m in common::ns_model()) {
        prop_assert_eq!(certify_amcc_entropy(&m), is_maximal_marginal(&m));
    }

    #[test]
    fn maximal_marginal_entropy_is_subset_size(m in common::ns_model()) {
        if is_maximal_marginal(&m) {
            let s = m.scenario();
            for (c, ctx) in s.contexts().iter().enumerate() {
                let mut last = 0.0;
                for k in 1..ctx.len() {
                    let h = min_entropy(&m, c, &ctx[..k]).unwrap().min_entropy_bits;
                    prop_assert_eq!(h, k as f64);
                    prop_assert!(h >= last);
                    last = h;
                }
                // single marginals are fair coins
                for &o in ctx {
                    let half = Rational::new(1, 2);
                    prop_assert_eq!(marginal(&m, c, &[o]).unwrap(), vec![half.clone(), half]);
                }
            }
        }
    }

    #[test]
    fn json_round_trip(m in common::ns_model()) {
        let back = EmpiricalModel::from_json(&m.to_json(), true).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn restriction_composes(n in 2usize..4, g in any::<u64>(), v_mask in any::<u64>(), u_mask in any::<u64>()) {
        let s = bell_scenario(n, 2).unwrap();
        let width = s.num_observables();
        let g = GlobalAssignment::from_index(g & ((1 << width) - 1), width);
        let v: Vec<usize> = (0..width).filter(|k| v_mask >> k & 1 == 1).collect();
        let u: Vec<usize> = v.iter().copied().filter(|k| u_mask >> k & 1 == 1).collect();
        let via_v = restrict(&g.restrict(&v).unwrap(), &u).unwrap();
        prop_assert_eq!(via_v, g.restrict(&u).unwrap());
    }
}

#[test]
fn enumeration_sizes() {
    for (n, m) in [(2, 2), (3, 2), (2, 3)] {
        let s = bell_scenario(n, m).unwrap();
        assert_eq!(enumerate_global_assignments(&s).unwrap().len(), 1 << s.num_observables());
        for c in 0..s.num_contexts() {
            assert_eq!(enumerate_sections(&s, c).unwrap().len(), 1 << s.contexts()[c].len());
        }
        let inc = incidence_matrix(&s).unwrap();
        assert_eq!(inc.cols(), 1 << s.num_observables());
        let dense = inc.to_dense();
        for g in 0..inc.cols() {
            assert_eq!(dense.iter().map(|r| usize::from(r[g])).sum::<usize>(), s.num_contexts());
        }
    }
}

#[test]
fn every_parity_vector_exhaustively() {
    for n in [2, 3] {
        let s = bell_scenario(n, 2).unwrap();
        for idx in 0..1u64 << s.num_contexts() {
            common::check_parity_iff_sat(n, idx).unwrap();
            let ps = parity_system(&s, &parity_vector(idx, s.num_contexts())).unwrap();
            let p = parity_to_possibilistic(&ps);
            assert!(boolean_no_signaling(&p));
            let lifted = lift_uniform(&p).unwrap();
            assert!(is_maximal_marginal(&lifted));
        }
    }
}
