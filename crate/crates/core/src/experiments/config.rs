//! JSON experiment configuration. Unknown keys are rejected everywhere.

use serde::{Deserialize, Serialize};

use crate::env::{make_instance, random_instance, BanditInstance, RewardDist};
use crate::error::{Error, Result};
use crate::learner::{Init, LearnerConfig, LearningRate, Thinning, Variant};
use crate::rng::{derive_seed, seeded};

/// Learning rate used when the config does not set one.
pub const DEFAULT_ETA: f64 = 0.01;

const MAX_INSTANCE_DRAWS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Convergence,
    Plateau,
    SimplexScan,
    GradNorm,
    Regret,
    BoltzmannWrong,
}

impl ExperimentKind {
    /// Whether the experiment draws random numbers.
    pub fn is_stochastic(self) -> bool {
        self != ExperimentKind::SimplexScan
    }
}

/// Arm means are either listed or drawn uniformly from (0, 1). Drawn instances
/// take the first seed in `derive_seed(instance_seed, 0..)` whose gap between
/// the two best means is at least `min_top_gap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InstanceSpec {
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub means: Option<Vec<f64>>,
    pub instance_seed: u64,
    pub min_top_gap: f64,
    /// Noise shared by every arm.
    pub reward: RewardDist,
    /// Per-arm noise; overrides `reward`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rewards: Option<Vec<RewardDist>>,
    pub r_max: f64,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        InstanceSpec {
            k: 10,
            means: None,
            instance_seed: 0,
            min_top_gap: 0.0,
            reward: RewardDist::Gaussian { sigma: 1.0, clip: None },
            rewards: None,
            r_max: 1.0,
        }
    }
}

impl InstanceSpec {
    /// Draw or build the instance. Returns it with the seed it was drawn from.
    pub fn resolve(&self) -> Result<(BanditInstance, Option<u64>)> {
        let dists = match &self.rewards {
            Some(d) => d.clone(),
            None => vec![self.reward; self.k],
        };
        if let Some(means) = &self.means {
            return Ok((make_instance(self.k, means.clone(), dists, self.r_max)?, None));
        }
        for i in 0..MAX_INSTANCE_DRAWS {
            let seed = derive_seed(self.instance_seed, i);
            let base = random_instance(self.k, &mut seeded(seed))?;
            if base.delta_gap() >= self.min_top_gap {
                return Ok((base.with_dists(dists, self.r_max)?, Some(seed)));
            }
        }
        Err(Error::Generation { tries: MAX_INSTANCE_DRAWS as usize })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerSpec {
    pub variant: Variant,
    pub eta: LearningRate,
    pub init: Init,
    pub thinning: Thinning,
}

impl Default for LearnerSpec {
    fn default() -> Self {
        LearnerSpec {
            variant: Variant::GradBandit,
            eta: LearningRate::Constant(DEFAULT_ETA),
            init: Init::Uniform,
            thinning: Thinning::Auto,
        }
    }
}

impl LearnerSpec {
    pub fn config(&self, horizon: u64) -> LearnerConfig {
        LearnerConfig {
            variant: self.variant,
            eta: self.eta,
            horizon,
            init: self.init.clone(),
            thinning: self.thinning,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlateauSpec {
    pub p_star: Vec<f64>,
    /// Level of `π(a*)` that ends the plateau.
    pub threshold: f64,
}

impl Default for PlateauSpec {
    fn default() -> Self {
        PlateauSpec { p_star: vec![0.05, 0.03, 0.02], threshold: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSpec {
    pub r: [f64; 3],
    pub resolution: usize,
}

impl Default for ScanSpec {
    fn default() -> Self {
        ScanSpec { r: [1.0, 0.5, 0.0], resolution: 60 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoltzmannSpec {
    /// Inverse temperature multiplier, `η_t = c·ln t`.
    pub c: f64,
    /// Regret-per-step threshold for the Boltzmann rule, as a fraction of the gap.
    pub linear_fraction: f64,
    /// Regret-per-step threshold for the gradient bandit, as a fraction of the gap.
    pub sublinear_fraction: f64,
}

impl Default for BoltzmannSpec {
    fn default() -> Self {
        BoltzmannSpec { c: 3.0, linear_fraction: 0.05, sublinear_fraction: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSpec {
    /// Decades of `t`, counted back from the horizon, used by slope fits.
    pub slope_window: f64,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec { slope_window: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlotSpec {
    pub svg: bool,
    pub log_x: bool,
    pub log_y: bool,
}

impl Default for PlotSpec {
    fn default() -> Self {
        PlotSpec { svg: true, log_x: true, log_y: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub instance: InstanceSpec,
    #[serde(default)]
    pub learner: LearnerSpec,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    /// Run seeds. When absent they are derived from the command-line seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub plateau: PlateauSpec,
    #[serde(default)]
    pub scan: ScanSpec,
    #[serde(default)]
    pub boltzmann: BoltzmannSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub plot: PlotSpec,
    /// Output directory; the command line may override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_horizon() -> u64 {
    200_000
}

fn schema(pointer: &str, message: impl Into<String>) -> Error {
    Error::Schema { pointer: pointer.to_string(), message: message.into() }
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            instance: InstanceSpec::default(),
            learner: LearnerSpec::default(),
            horizon: default_horizon(),
            seeds: None,
            plateau: PlateauSpec::default(),
            scan: ScanSpec::default(),
            boltzmann: BoltzmannSpec::default(),
            analysis: AnalysisSpec::default(),
            plot: PlotSpec::default(),
            output: None,
        }
    }

    /// Checks that deserialization cannot express, reported with the JSON
    /// pointer of the offending field.
    pub fn validate(&self) -> Result<()> {
        let inst = &self.instance;
        if inst.k < 2 {
            return Err(schema("/instance/k", format!("K must be at least 2, got {}", inst.k)));
        }
        if let Some(means) = &inst.means {
            if means.len() != inst.k {
                return Err(schema("/instance/means", format!("expected {} means, got {}", inst.k, means.len())));
            }
        }
        if let Some(r) = &inst.rewards {
            if r.len() != inst.k {
                return Err(schema("/instance/rewards", format!("expected {} entries, got {}", inst.k, r.len())));
            }
        }
        if !(inst.r_max > 0.0 && inst.r_max.is_finite()) {
            return Err(schema("/instance/r_max", "must be positive and finite"));
        }
        if !(inst.min_top_gap >= 0.0 && inst.min_top_gap < 1.0) {
            return Err(schema("/instance/min_top_gap", "must lie in [0, 1)"));
        }
        if let LearningRate::Constant(eta) = self.learner.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(schema("/learner/eta", format!("must be positive, got {eta}")));
            }
        }
        if let Variant::BoltzmannWrong { c } = self.learner.variant {
            if !(c > 2.0 && c.is_finite()) {
                return Err(schema("/learner/variant/boltzmann_wrong/c", "must exceed 2"));
            }
        }
        if self.horizon < 10 {
            return Err(schema("/horizon", format!("must be at least 10, got {}", self.horizon)));
        }
        if let Some(seeds) = &self.seeds {
            if seeds.is_empty() {
                return Err(schema("/seeds", "must not be empty"));
            }
        }
        if self.kind == ExperimentKind::Plateau {
            if self.plateau.p_star.is_empty() {
                return Err(schema("/plateau/p_star", "must not be empty"));
            }
            let cap = 1.0 / inst.k as f64;
            if let Some(i) = self.plateau.p_star.iter().position(|p| !(*p > 0.0 && *p < cap)) {
                return Err(schema(&format!("/plateau/p_star/{i}"), format!("must lie in (0, 1/K) = (0, {cap})")));
            }
            if !(self.plateau.threshold > 0.0 && self.plateau.threshold < 1.0) {
                return Err(schema("/plateau/threshold", "must lie in (0, 1)"));
            }
        }
        if self.scan.resolution < 10 {
            return Err(schema("/scan/resolution", "must be at least 10"));
        }
        if !(self.boltzmann.c > 2.0 && self.boltzmann.c.is_finite()) {
            return Err(schema("/boltzmann/c", "must exceed 2"));
        }
        if !(self.analysis.slope_window > 0.0) {
            return Err(schema("/analysis/slope_window", "must be positive"));
        }
        Ok(())
    }

    /// Explicit seeds, or `count` seeds derived from `base`.
    pub fn resolve_seeds(&self, base: Option<u64>, count: usize) -> Result<Vec<u64>> {
        match (&self.seeds, base) {
            (Some(s), _) => Ok(s.clone()),
            (None, Some(base)) => Ok((0..count as u64).map(|i| derive_seed(base, i)).collect()),
            (None, None) => Err(Error::Precondition("a seed is required for stochastic experiments".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"kind": "convergence"}"#).unwrap();
        assert_eq!(cfg.learner.eta, LearningRate::Constant(0.01));
        assert_eq!(cfg.horizon, 200_000);
        assert_eq!(cfg.instance.k, 10);
        cfg.validate().unwrap();
    }

    #[test]
    fn theoretical_rate_and_unknown_keys() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"kind": "regret", "learner": {"eta": "theoretical"}}"#).unwrap();
        assert_eq!(cfg.learner.eta, LearningRate::Theoretical);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"kind": "regret", "horizn": 5}"#).is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"kind": "regret", "instance": {"kk": 5}}"#).is_err());
    }

    #[test]
    fn validation_pointers() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"kind": "convergence", "instance": {"k": 1}}"#).unwrap();
        match cfg.validate() {
            Err(Error::Schema { pointer, .. }) => assert_eq!(pointer, "/instance/k"),
            other => panic!("{other:?}"),
        }
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"kind": "plateau", "plateau": {"p_star": [0.05, 0.2]}}"#).unwrap();
        match cfg.validate() {
            Err(Error::Schema { pointer, .. }) => assert_eq!(pointer, "/plateau/p_star/1"),
            other => panic!("{other:?}"),
        }
        let mut cfg = ExperimentConfig::new(ExperimentKind::Convergence);
        cfg.horizon = 9;
        assert!(cfg.validate().is_err());
        cfg.horizon = 10;
        cfg.seeds = Some(vec![]);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn instance_selection_rule() {
        let spec = InstanceSpec { min_top_gap: 0.05, ..InstanceSpec::default() };
        let (inst, seed) = spec.resolve().unwrap();
        assert!(inst.delta_gap() >= 0.05);
        let seed = seed.unwrap();
        // every earlier candidate fails the gap requirement
        for i in 0.. {
            let s = derive_seed(0, i);
            if s == seed {
                break;
            }
            assert!(random_instance(10, &mut seeded(s)).unwrap().delta_gap() < 0.05);
        }
        assert!(inst.unbounded());
        assert_eq!(spec.resolve().unwrap().0, inst);
    }

    #[test]
    fn seeds_resolution() {
        let cfg = ExperimentConfig::new(ExperimentKind::Convergence);
        assert!(cfg.resolve_seeds(None, 3).is_err());
        assert_eq!(cfg.resolve_seeds(Some(4), 3).unwrap().len(), 3);
        let cfg = ExperimentConfig { seeds: Some(vec![1, 2]), ..cfg };
        assert_eq!(cfg.resolve_seeds(Some(4), 3).unwrap(), vec![1, 2]);
    }
}
