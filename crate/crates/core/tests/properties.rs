use proptest::prelude::*;

use spillover::estimands::{exhaustive_estimands, exhaustive_expectation};
use spillover::estimators::{
    hajek_direct, ht_direct, pc_balancing_indirect_with, unbiased_indirect, unbiased_total, v_hat,
};
use spillover::experiment::{neighbor_stats, run_experiment};
use spillover::graphon::{GraphonSpec, Profile};
use spillover::network::{sample_network, SampledNetwork};
use spillover::outcomes::{OutcomeForm, OutcomeModel};
use spillover::presets;
use spillover::rng::derive;
use spillover::sensitivity::{cs_bound, invert_interval, two_sided_quantile, Q2Rule, SensitivityInput};
use spillover::spectral::{top_abs_eigs, EigenOptions, EigenResult};

fn graphon_strategy() -> impl Strategy<Value = GraphonSpec> {
    prop_oneof![
        (0.01..1.0f64).prop_map(|value| GraphonSpec::Constant { value }),
        (0.05..0.95f64, 0.0..0.4f64, 0.0..0.5f64).prop_map(|(cut, within, base)| GraphonSpec::BlockModel {
            breaks: vec![cut],
            within,
            base,
        }),
        (0.0..0.5f64, 0.5..1.0f64, 0.1..0.9f64).prop_map(|(low, high, cut)| GraphonSpec::Rank1Product {
            profile: Profile::Step { low, high, cut },
        }),
        (0.01..0.5f64, 0.1..1.0f64).prop_map(|(eta, a)| GraphonSpec::Star { eta, a }),
    ]
}

fn outcome_strategy() -> impl Strategy<Value = OutcomeModel> {
    prop_oneof![
        (0.1..0.9f64).prop_map(|pi| OutcomeForm::Figure2 { pi }),
        Just(OutcomeForm::SquareMix),
        Just(OutcomeForm::Cos3),
        Just(OutcomeForm::NegExpCos),
        Just(OutcomeForm::ExpLinear),
        Just(OutcomeForm::PolyExp),
        (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(direct, spillover)| OutcomeForm::Linear { direct, spillover }),
    ]
    .prop_map(|f| OutcomeModel::from_form(f, 0.0).unwrap())
}

fn random_graph(n: usize, edges: &[(usize, usize)], types: &[f64]) -> SampledNetwork {
    let list: Vec<(usize, usize)> = edges
        .iter()
        .map(|&(a, b)| (a % n, b % n))
        .filter(|(a, b)| a != b)
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    SampledNetwork::from_edges(types[..n].to_vec(), &list).unwrap()
}

fn eigen_with(values: Vec<f64>, vectors: Vec<Vec<f64>>) -> EigenResult {
    EigenResult {
        residual_norms: vec![0.0; values.len()],
        values,
        vectors,
        iterations: 0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graphons_are_symmetric_and_bounded(spec in graphon_strategy(), u in 0.0..=1.0f64, v in 0.0..=1.0f64) {
        let a = spec.eval(u, v);
        prop_assert_eq!(a, spec.eval(v, u));
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(a <= spec.sup() + 1e-12);
    }

    #[test]
    fn sampled_networks_are_simple_and_seed_determined(spec in graphon_strategy(), n in 2usize..120, seed in any::<u64>()) {
        let a = sample_network(&spec, n, 1.0, seed).unwrap();
        let b = sample_network(&spec, n, 1.0, seed).unwrap();
        prop_assert_eq!(&a, &b);
        for i in 0..n {
            let row = a.neighbors(i);
            prop_assert!(row.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(!row.contains(&(i as u32)));
            for &j in row {
                prop_assert!(a.has_edge(j as usize, i));
            }
        }
        prop_assert!(a.types().iter().all(|t| (0.0..1.0).contains(t)));
    }

    #[test]
    fn treated_fractions_are_consistent(n in 2usize..60, edges in prop::collection::vec((0usize..60, 0usize..60), 0..200),
                                        types in prop::collection::vec(0.0..1.0f64, 60), w in prop::collection::vec(any::<bool>(), 60)) {
        let net = random_graph(n, &edges, &types);
        let (m, x) = neighbor_stats(&net, &w[..n]).unwrap();
        for i in 0..n {
            prop_assert!(m[i] <= net.degree(i));
            prop_assert!((0.0..=1.0).contains(&x[i]));
            if net.degree(i) == 0 {
                prop_assert_eq!(x[i], 0.0);
            }
        }
    }

    #[test]
    fn decomposition_identities(n in 3usize..40, edges in prop::collection::vec((0usize..40, 0usize..40), 0..150),
                                types in prop::collection::vec(0.0..1.0f64, 40), model in outcome_strategy(),
                                pi in 0.1..0.9f64, seed in any::<u64>()) {
        let net = random_graph(n, &edges, &types);
        let r = run_experiment(&net, &model, pi, seed, seed ^ 1).unwrap();
        let ht = ht_direct(&r.outcomes, &r.treatment, pi).unwrap();
        let ind = unbiased_indirect(&r.outcomes, &r.treated_neighbors, &r.degrees, pi).unwrap();
        let tot = unbiased_total(&r.outcomes, &r.treatment, &r.treated_neighbors, &r.degrees, pi).unwrap();
        prop_assert!((tot - ht - ind).abs() <= 1e-12 * (1.0 + tot.abs()));
        let mean = r.outcomes.iter().sum::<f64>() / n as f64;
        let vh = v_hat(&r.outcomes, &r.treatment, &r.treated_neighbors, &r.degrees, pi, pi).unwrap();
        prop_assert!((vh - mean).abs() <= 1e-12 * (1.0 + mean.abs()));
    }

    #[test]
    fn hajek_is_shift_invariant(y in prop::collection::vec(-10.0..10.0f64, 4..40), w in prop::collection::vec(any::<bool>(), 40), c in -50.0..50.0f64) {
        let w = &w[..y.len()];
        prop_assume!(w.iter().any(|&b| b) && w.iter().any(|&b| !b));
        let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
        let a = hajek_direct(&y, w).unwrap();
        let b = hajek_direct(&shifted, w).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn cs_bound_is_monotone(v0 in 0.0..100.0f64, q in 0.0..100.0f64, dv in 0.0..10.0f64, dq in 0.0..10.0f64) {
        prop_assert!(cs_bound(v0 + dv, q) >= cs_bound(v0, q));
        prop_assert!(cs_bound(v0, q + dq) >= cs_bound(v0, q));
        prop_assert!(cs_bound(v0, q) >= v0 && cs_bound(v0, q) >= q);
    }

    #[test]
    fn intervals_shrink_with_alpha(tau_hat in -1.0..1.0f64, se0 in 0.01..0.5f64, k in 0.0..8.0f64, a in 0.01..0.3f64, da in 0.001..0.3f64) {
        let input = SensitivityInput { n: 400, pi: 0.5, tau_hat, se0, sigma0_sq: 0.0, q2: Q2Rule::ScaledSquare { coefficient: k } };
        let wide = invert_interval(&input, a).unwrap();
        let narrow = invert_interval(&input, (a + da).min(0.9)).unwrap();
        prop_assert!(narrow.lo >= wide.lo - 1e-9 && narrow.hi <= wide.hi + 1e-9);
        prop_assert!(wide.lo <= tau_hat && tau_hat <= wide.hi);
    }

    #[test]
    fn zero_rule_matches_wald(tau_hat in -1.0..1.0f64, se0 in 0.01..0.5f64, alpha in 0.01..0.5f64) {
        let input = SensitivityInput { n: 100, pi: 0.3, tau_hat, se0, sigma0_sq: 0.0, q2: Q2Rule::Zero };
        let ci = invert_interval(&input, alpha).unwrap();
        let z = two_sided_quantile(alpha).unwrap();
        prop_assert!((ci.lo - (tau_hat - z * se0)).abs() < 1e-6);
        prop_assert!((ci.hi - (tau_hat + z * se0)).abs() < 1e-6);
    }

    #[test]
    fn seed_derivation_separates_paths(seed in any::<u64>(), a in 0u64..1000, b in 0u64..1000) {
        prop_assume!(a != b);
        prop_assert_ne!(derive(seed, &[a]), derive(seed, &[b]));
        prop_assert_ne!(derive(seed, &[a, b]), derive(seed, &[b, a]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exhaustive_unbiasedness(n in 3usize..9, edges in prop::collection::vec((0usize..9, 0usize..9), 0..30),
                               types in prop::collection::vec(0.0..1.0f64, 9), model in outcome_strategy(), pi in 0.15..0.85f64) {
        let net = random_graph(n, &edges, &types);
        let truth = exhaustive_estimands(&net, &model, pi).unwrap();
        let ht = exhaustive_expectation(&net, &model, pi, |r| ht_direct(&r.outcomes, &r.treatment, pi)).unwrap();
        let ind = exhaustive_expectation(&net, &model, pi, |r| unbiased_indirect(&r.outcomes, &r.treated_neighbors, &r.degrees, pi)).unwrap();
        let scale = 1.0 + truth.tau_dir.abs() + truth.tau_ind.abs();
        prop_assert!((ht - truth.tau_dir).abs() < 1e-9 * scale);
        prop_assert!((ind - truth.tau_ind).abs() < 1e-9 * scale);
        prop_assert!((truth.tau_tot - truth.tau_dir - truth.tau_ind).abs() < 1e-12 * scale);
    }

    #[test]
    fn pc_estimate_ignores_signs_and_tied_order(seed in any::<u64>(), flips in prop::collection::vec(any::<bool>(), 3)) {
        let p = presets::lookup("appendix_a_1").unwrap();
        let net = sample_network(&p.graphon, 150, 1.0, seed).unwrap();
        let r = run_experiment(&net, &p.outcome, p.pi, seed ^ 3, seed ^ 4).unwrap();
        let eig = top_abs_eigs(&net, 3, &EigenOptions::default()).unwrap();
        let (base, diag) = pc_balancing_indirect_with(&r.outcomes, &r.treated_neighbors, &r.degrees, p.pi, &eig).unwrap();
        prop_assert!(diag.residuals.iter().all(|&x| x <= 1e-8));

        let mut vectors = eig.vectors.clone();
        for (v, &f) in vectors.iter_mut().zip(&flips) {
            if f {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        let mut values = eig.values.clone();
        values.swap(1, 2);
        vectors.swap(1, 2);
        let (moved, _) = pc_balancing_indirect_with(&r.outcomes, &r.treated_neighbors, &r.degrees, p.pi, &eigen_with(values, vectors)).unwrap();
        prop_assert_eq!(base.to_bits(), moved.to_bits());
    }
}
