//! Default configurations behind `sgb figure`.

use crate::env::RewardDist;

use super::config::{ExperimentConfig, ExperimentKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Simplex scan of gradient scales.
    Fig1,
    /// Plateaus under adversarial initialization.
    Fig2,
    /// Gap decay.
    Fig3,
    /// Averaged squared gradient norm.
    Fig4,
    Regret,
    Boltzmann,
}

impl Figure {
    pub const ALL: [Figure; 6] = [Figure::Fig1, Figure::Fig2, Figure::Fig3, Figure::Fig4, Figure::Regret, Figure::Boltzmann];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Regret => "regret",
            Figure::Boltzmann => "boltzmann",
        }
    }

    pub fn from_name(name: &str) -> Option<Figure> {
        Figure::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Number of runs when the command line does not say.
    pub fn default_seed_count(self) -> usize {
        match self {
            Figure::Boltzmann => 20,
            _ => 10,
        }
    }

    pub fn config(self) -> ExperimentConfig {
        match self {
            Figure::Fig1 => ExperimentConfig::new(ExperimentKind::SimplexScan),
            Figure::Fig2 => plateau_config(),
            Figure::Fig3 => rate_config(ExperimentKind::Convergence),
            Figure::Fig4 => rate_config(ExperimentKind::GradNorm),
            Figure::Regret => rate_config(ExperimentKind::Regret),
            Figure::Boltzmann => boltzmann_config(),
        }
    }
}

/// K=10, means drawn from (0, 1) with a top gap of at least 0.05, unit
/// Gaussian noise, T = 2·10⁵.
pub fn rate_config(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind);
    cfg.instance.min_top_gap = 0.05;
    cfg
}

/// Means `0.9` and nine values evenly spaced from 0.6 down to 0.1, unit
/// Gaussian noise, T = 10⁶.
pub fn plateau_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Plateau);
    let mut means = vec![0.9];
    means.extend((0..9).map(|i| 0.6 - 0.5 * i as f64 / 8.0));
    cfg.instance.means = Some(means);
    cfg.horizon = 1_000_000;
    cfg.plot.log_y = false;
    cfg
}

/// Two arms with rewards in [0, 1]: a sure 1 against a fair coin on {0, 1}.
pub fn boltzmann_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ExperimentKind::BoltzmannWrong);
    cfg.instance.k = 2;
    cfg.instance.means = Some(vec![1.0, 0.5]);
    cfg.instance.rewards = Some(vec![RewardDist::Deterministic, RewardDist::TwoPoint { offset: 0.5 }]);
    cfg.horizon = 100_000;
    cfg
}
