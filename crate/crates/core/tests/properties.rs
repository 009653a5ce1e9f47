//! Property tests over random logits, rewards and instances.

use proptest::prelude::*;

use sgb_core::env::{make_instance, RewardDist};
use sgb_core::learner::fmt_f64;
use sgb_core::par::Execution;
use sgb_core::policy::{
    gradient_norm_sq, hessian, nl_lower_bound, objective, objective_delta, softmax, spectral_radius,
    stochastic_gradient, true_gradient, PolicyParams,
};
use sgb_core::probes::{concentration_bound, run_probe, Probe, ProbeReport};

fn logits(k: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    k.prop_flat_map(|k| prop::collection::vec(-8.0..8.0f64, k))
}

fn logits_and_rewards() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=8).prop_flat_map(|k| (prop::collection::vec(-8.0..8.0f64, k), prop::collection::vec(-1.0..1.0f64, k)))
}

fn distinct(r: &[f64]) -> bool {
    r.iter().enumerate().all(|(i, a)| r[i + 1..].iter().all(|b| (a - b).abs() > 1e-6))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn softmax_is_a_distribution_and_shift_invariant(theta in logits(1..=10), c in -50.0..50.0f64) {
        let p = softmax(&PolicyParams::new(theta.clone()).unwrap());
        let total: f64 = p.probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(p.probs().iter().all(|x| *x > 0.0));
        let shifted = softmax(&PolicyParams::new(theta.iter().map(|t| t + c).collect()).unwrap());
        for (a, b) in p.probs().iter().zip(shifted.probs()) {
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300).max(*b) + 1e-15);
        }
    }

    #[test]
    fn gradients_sum_to_zero((theta, r) in logits_and_rewards(), reward in -1.0..1.0f64, pick in 0usize..8) {
        let pi = softmax(&PolicyParams::new(theta).unwrap());
        let g = true_gradient(&pi, &r).unwrap();
        prop_assert!(g.iter().sum::<f64>().abs() < 1e-12);
        let s = stochastic_gradient(&pi, pick % r.len(), reward).unwrap();
        prop_assert!(s.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn objective_delta_matches_direct_difference((theta, r) in logits_and_rewards(), scale in -2.0..2.0f64) {
        let th = PolicyParams::new(theta.clone()).unwrap();
        let d: Vec<f64> = theta.iter().enumerate().map(|(i, _)| scale * ((i as f64).sin())).collect();
        let moved = PolicyParams::new(theta.iter().zip(&d).map(|(a, b)| a + b).collect()).unwrap();
        let direct = objective(&softmax(&moved), &r).unwrap() - objective(&softmax(&th), &r).unwrap();
        prop_assert!((objective_delta(&th, &d, &r).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn nl_and_spectral_bounds((theta, means) in logits_and_rewards()) {
        prop_assume!(distinct(&means));
        let k = means.len();
        let inst = make_instance(k, means.clone(), vec![RewardDist::Deterministic; k], 1.0).unwrap();
        let pi = softmax(&PolicyParams::new(theta).unwrap());
        let norm = gradient_norm_sq(&pi, &means).unwrap().sqrt();
        let nl = nl_lower_bound(&pi, &inst).unwrap();
        prop_assert!(nl <= norm * (1.0 + 1e-10) + 1e-300);
        let rho = spectral_radius(&hessian(&pi, &means).unwrap()).unwrap();
        prop_assert!(rho <= 3.0 * norm * (1.0 + 1e-10) + 1e-300);
        let gap = inst.gap(pi.probs());
        prop_assert!((-1e-15..=2.0).contains(&gap));
    }

    #[test]
    fn csv_floats_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let s = fmt_f64(v);
        prop_assert_eq!(s.parse::<f64>().unwrap(), v);
    }

    #[test]
    fn concentration_bound_is_monotone(v in 0.0..1e6f64, dv in 0.0..1e3f64, delta in 0.001..0.99f64) {
        let b = concentration_bound(v, delta).unwrap();
        prop_assert!(b > 0.0);
        prop_assert!(concentration_bound(v + dv, delta).unwrap() >= b);
        prop_assert!(concentration_bound(v, delta / 2.0).unwrap() >= b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn probes_are_clean_and_execution_independent(seed in any::<u64>()) {
        for probe in [Probe::Unbiasedness, Probe::StrongGrowth, Probe::Nl] {
            let a = run_probe(probe, Some(600), seed, Execution::Parallel).unwrap();
            let b = run_probe(probe, Some(600), seed, Execution::Sequential).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.iter().all(ProbeReport::passed));
        }
    }
}
