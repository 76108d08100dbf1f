use amcc::analysis::{classify, contextual_fraction, is_contextual};
use amcc::applications::{secret_share_simulate, Source, Verdict};
use amcc::catalog::{asymmetric_scc_model, deterministic_model, ghz_model, pr_box, three_way_box, uniform_model};
use amcc::construct::{
    anchored_base, anchored_example, boolean_no_signaling, csp_enumerate_extension, csp_satisfiable,
    eight_param_family, enumerate_parity, parity_consistent, parity_system, parity_vector, scan_eight_param,
    three_param_family, ANCHORED_EXTENDABLE,
};
use amcc::empirical::{find_marginal_defect, is_no_signaling, possibilistic_collapse};
use amcc::scenario::bell_scenario;
use amcc::{q, Error, Rational};

#[test]
fn catalog_verdicts() {
    for m in [pr_box(true, false, true), ghz_model(), three_way_box()] {
        let r = classify(&m).unwrap();
        assert!(r.amcc && r.strongly_contextual);
    }
    let r = classify(&asymmetric_scc_model()).unwrap();
    assert!(r.strongly_contextual && !r.amcc);
}

#[test]
fn table_one_marginal_witness() {
    // summing row (0,0,0) over x2 and x3 gives (3/4, 1/4) for X1, the first
    // subset in size-then-lexicographic order
    let w = find_marginal_defect(&asymmetric_scc_model()).unwrap();
    assert_eq!(w.context, 0);
    assert_eq!(w.subset, vec![0]);
    assert_eq!(w.marginal, vec![q(3, 4), q(1, 4)]);
    assert!(is_no_signaling(&asymmetric_scc_model()));
}

#[test]
fn uniform_and_deterministic_extremes() {
    let s = bell_scenario(3, 2).unwrap();
    assert_eq!(contextual_fraction(&uniform_model(&s).unwrap()).unwrap(), Rational::zero());
    assert_eq!(contextual_fraction(&deterministic_model(&s, 0b101100).unwrap()).unwrap(), Rational::zero());
    let v = is_contextual(&uniform_model(&s).unwrap()).unwrap();
    assert!(!v.contextual && v.global_distribution.is_some());
}

#[test]
fn eight_param_examples() {
    let mut p = vec![Rational::zero(); 8];
    p[0] = q(1, 4);
    assert_eq!(contextual_fraction(&eight_param_family(&p).unwrap()).unwrap(), Rational::one());
    assert_eq!(contextual_fraction(&eight_param_family(&vec![q(1, 8); 8]).unwrap()).unwrap(), Rational::zero());
    // maximal marginals for any valid parameters
    let p: Vec<Rational> = (0..8).map(|i| q(i, 32)).collect();
    assert!(find_marginal_defect(&eight_param_family(&p).unwrap()).is_none());
}

#[test]
fn parity_lift_is_eight_param_corner() {
    let s = bell_scenario(3, 2).unwrap();
    let ps = parity_system(&s, &[0, 1, 1, 1, 1, 1, 1, 1]).unwrap();
    let lifted = amcc::empirical::lift_uniform(&amcc::construct::parity_to_possibilistic(&ps)).unwrap();
    let mut p = vec![Rational::zero(); 8];
    p[0] = q(1, 4);
    assert_eq!(lifted, eight_param_family(&p).unwrap());
}

#[test]
fn three_param_zero_point() {
    let m = three_param_family(&Rational::zero(), &Rational::zero(), &Rational::zero()).unwrap();
    let r = classify(&m).unwrap();
    assert_eq!(r.cf, Rational::one() - &r.ncf);
}

#[test]
fn three_param_outside_table_validity() {
    assert!(matches!(
        three_param_family(&q(1, 8), &q(1, 4), &Rational::zero()),
        Err(Error::OutOfRange(_))
    ));
}

#[test]
fn anchored_example_is_ns_and_unsatisfiable() {
    let m = anchored_example();
    assert!(boolean_no_signaling(&m));
    assert!(csp_satisfiable(&m).unwrap().is_none());
}

#[test]
fn csp_enumeration_independent_of_workers() {
    let base = anchored_base();
    let ext = &ANCHORED_EXTENDABLE[..3];
    let one = csp_enumerate_extension(&base, ext, 1).unwrap();
    let four = csp_enumerate_extension(&base, ext, 4).unwrap();
    let default = csp_enumerate_extension(&base, ext, 0).unwrap();
    assert_eq!(one, four);
    assert_eq!(one, default);
}

#[test]
fn parity_enumeration_independent_of_workers() {
    let s = bell_scenario(3, 2).unwrap();
    assert_eq!(enumerate_parity(&s, 1).unwrap(), enumerate_parity(&s, 3).unwrap());
}

#[test]
fn scan_independent_of_workers() {
    let grid = vec![vec![Rational::zero(), q(1, 8)]; 8];
    let fixed: Vec<(usize, Rational)> = (3..8).map(|i| (i, Rational::zero())).collect();
    assert_eq!(scan_eight_param(&grid, &fixed, 1).unwrap(), scan_eight_param(&grid, &fixed, 2).unwrap());
}

#[test]
fn honest_sharing_on_every_inconsistent_system() {
    for n in [2, 3] {
        let s = bell_scenario(n, 2).unwrap();
        for idx in 0..1u64 << s.num_contexts() {
            let ps = parity_system(&s, &parity_vector(idx, s.num_contexts())).unwrap();
            let run = secret_share_simulate(&ps, &[1, 0, 0, 1, 1], 300, 0.3, idx, Source::Honest);
            if parity_consistent(&ps).unwrap().is_consistent() {
                assert!(matches!(run, Err(Error::ConsistentResource)));
            } else {
                let out = run.unwrap();
                assert!(out.all_reconstructed());
                assert!(out.transcript.rounds.iter().all(|r| r.verdict == Verdict::Accepted));
            }
        }
    }
}

#[test]
fn bit_flip_abort_rate_matches_test_fraction() {
    // with one round per run, the run aborts exactly when that round is a
    // test; over 4000 seeds the count is Binomial(4000, 1/4)
    let ps = parity_system(&bell_scenario(3, 2).unwrap(), &[0, 1, 1, 1, 1, 1, 1, 1]).unwrap();
    let trials = 4000u32;
    let mut aborts = 0u32;
    for seed in 0..u64::from(trials) {
        match secret_share_simulate(&ps, &[1], 1, 0.25, seed, Source::BitFlip) {
            Err(Error::Aborted { round: 0, .. }) => aborts += 1,
            Ok(out) => assert_eq!(out.test_rounds, 0),
            Err(e) => panic!("{e}"),
        }
    }
    let mean = f64::from(trials) * 0.25;
    let sd = (f64::from(trials) * 0.25 * 0.75).sqrt();
    assert!((f64::from(aborts) - mean).abs() < 5.0 * sd, "aborts = {aborts}");
}

#[test]
fn collapse_of_pr_box_matches_parity_model() {
    let ps = parity_system(&bell_scenario(2, 2).unwrap(), &[0, 0, 0, 1]).unwrap();
    assert_eq!(possibilistic_collapse(&pr_box(false, false, false)), amcc::construct::parity_to_possibilistic(&ps));
}
