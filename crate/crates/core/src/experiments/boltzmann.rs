//! Empirical-mean Boltzmann selection against the gradient bandit on the
//! same instance and seeds.

use serde::Serialize;

use crate::env::BanditInstance;
use crate::error::Result;
use crate::learner::{Init, LearnerConfig, LearningRate, Thinning, Variant};
use crate::par::Execution;

use super::convergence::{mean_curve, run_seeds, MeanCurve};

#[derive(Debug, Clone, Serialize)]
pub struct BoltzmannComparison {
    pub seeds: Vec<u64>,
    pub gap: f64,
    pub horizon: u64,
    /// `regret(T)/T` per seed.
    pub boltzmann: Vec<f64>,
    pub gradient: Vec<f64>,
    #[serde(skip)]
    pub boltzmann_curve: MeanCurve,
    #[serde(skip)]
    pub gradient_curve: MeanCurve,
}

impl BoltzmannComparison {
    /// Seeds with `regret(T)/T ≥ fraction·gap` under the Boltzmann rule.
    pub fn linear_count(&self, fraction: f64) -> usize {
        self.boltzmann.iter().filter(|v| **v >= fraction * self.gap).count()
    }

    /// Seeds with `regret(T)/T ≤ fraction·gap` under the gradient bandit.
    pub fn sublinear_count(&self, fraction: f64) -> usize {
        self.gradient.iter().filter(|v| **v <= fraction * self.gap).count()
    }
}

pub fn boltzmann_comparison(
    inst: &BanditInstance,
    horizon: u64,
    seeds: &[u64],
    c: f64,
    eta: f64,
    exec: Execution,
) -> Result<BoltzmannComparison> {
    let make = |variant| LearnerConfig {
        variant,
        eta: LearningRate::Constant(eta),
        horizon,
        init: Init::Uniform,
        thinning: Thinning::Auto,
    };
    let per_step = |runs: &[super::convergence::SeedRun]| -> Vec<f64> {
        runs.iter()
            .map(|r| r.trajectory.last().map_or(f64::NAN, |x| x.cum_regret) / horizon as f64)
            .collect()
    };
    let wrong = run_seeds(&make(Variant::BoltzmannWrong { c }), inst, seeds, exec)?;
    let grad = run_seeds(&make(Variant::GradBandit), inst, seeds, exec)?;
    Ok(BoltzmannComparison {
        seeds: seeds.to_vec(),
        gap: inst.delta_gap(),
        horizon,
        boltzmann: per_step(&wrong),
        gradient: per_step(&grad),
        boltzmann_curve: mean_curve(&wrong)?,
        gradient_curve: mean_curve(&grad)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_instance, RewardDist};

    #[test]
    fn comparison_shapes() {
        let inst = make_instance(
            2,
            vec![1.0, 0.5],
            vec![RewardDist::Deterministic, RewardDist::TwoPoint { offset: 0.5 }],
            1.0,
        )
        .unwrap();
        let cmp = boltzmann_comparison(&inst, 2000, &[1, 2, 3, 4], 3.0, 0.1, Execution::default()).unwrap();
        assert_eq!(cmp.boltzmann.len(), 4);
        assert_eq!(cmp.gap, 0.5);
        assert!(cmp.boltzmann.iter().chain(&cmp.gradient).all(|v| (0.0..=0.5).contains(v)));
        assert!(cmp.sublinear_count(1.0) == 4 && cmp.linear_count(0.0) == 4);
    }
}
