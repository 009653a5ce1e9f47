//! Multi-armed bandit instances.
//!
//! An instance holds the mean reward vector, one reward distribution per arm
//! and a declared reward range. Construction enforces that the means have no
//! ties, that the optimal arm is unique and that every bounded reward stays
//! inside `[-r_max, r_max]`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two means closer than this are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Random instances are redrawn until their minimum pairwise gap exceeds this.
pub const RANDOM_MIN_GAP: f64 = 1e-3;

const MAX_GENERATION_TRIES: usize = 1000;

/// Reward noise around an arm mean. All variants are centered on the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RewardDist {
    /// Point mass at the mean.
    Deterministic,
    /// `mean - offset` or `mean + offset`, each with probability 1/2.
    TwoPoint { offset: f64 },
    /// Uniform on `[mean - halfwidth, mean + halfwidth]`.
    Uniform { halfwidth: f64 },
    /// `mean + sigma * Z`, optionally clipped to `mean ± clip`.
    Gaussian {
        sigma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        clip: Option<f64>,
    },
}

impl RewardDist {
    /// Half-width of the support around the mean, `None` when unbounded.
    pub fn half_range(&self) -> Option<f64> {
        match *self {
            RewardDist::Deterministic => Some(0.0),
            RewardDist::TwoPoint { offset } => Some(offset),
            RewardDist::Uniform { halfwidth } => Some(halfwidth),
            RewardDist::Gaussian { clip, .. } => clip,
        }
    }

    pub fn is_enumerable(&self) -> bool {
        matches!(self, RewardDist::Deterministic | RewardDist::TwoPoint { .. })
    }

    pub fn sample<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> f64 {
        match *self {
            RewardDist::Deterministic => mean,
            RewardDist::TwoPoint { offset } => {
                if rng.random::<bool>() {
                    mean + offset
                } else {
                    mean - offset
                }
            }
            RewardDist::Uniform { halfwidth } => {
                mean + halfwidth * (2.0 * rng.random::<f64>() - 1.0)
            }
            RewardDist::Gaussian { sigma, clip } => {
                let z: f64 = StandardNormal.sample(rng);
                let noise = sigma * z;
                match clip {
                    Some(b) => mean + noise.clamp(-b, b),
                    None => mean + noise,
                }
            }
        }
    }

    /// Finite support as `(value, probability)` pairs.
    pub fn support(&self, mean: f64) -> Option<Vec<(f64, f64)>> {
        match *self {
            RewardDist::Deterministic => Some(vec![(mean, 1.0)]),
            RewardDist::TwoPoint { offset } => {
                Some(vec![(mean - offset, 0.5), (mean + offset, 0.5)])
            }
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            RewardDist::Deterministic => true,
            RewardDist::TwoPoint { offset } => offset.is_finite() && offset >= 0.0,
            RewardDist::Uniform { halfwidth } => halfwidth.is_finite() && halfwidth >= 0.0,
            RewardDist::Gaussian { sigma, clip } => {
                sigma.is_finite()
                    && sigma >= 0.0
                    && clip.is_none_or(|b| b.is_finite() && b >= 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Range(format!("invalid reward distribution {self:?}")))
        }
    }
}

/// A validated K-armed bandit problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceJson", into = "InstanceJson")]
pub struct BanditInstance {
    means: Vec<f64>,
    dists: Vec<RewardDist>,
    r_max: f64,
    delta_min: f64,
    delta_gap: f64,
    a_star: usize,
}

/// On-disk form of an instance: `{k, means[], dists[], r_max}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceJson {
    pub k: usize,
    pub means: Vec<f64>,
    pub dists: Vec<RewardDist>,
    pub r_max: f64,
}

impl TryFrom<InstanceJson> for BanditInstance {
    type Error = Error;

    fn try_from(raw: InstanceJson) -> Result<Self> {
        make_instance(raw.k, raw.means, raw.dists, raw.r_max)
    }
}

impl From<BanditInstance> for InstanceJson {
    fn from(inst: BanditInstance) -> Self {
        InstanceJson {
            k: inst.k(),
            means: inst.means,
            dists: inst.dists,
            r_max: inst.r_max,
        }
    }
}

/// Build and validate an instance.
pub fn make_instance(
    k: usize,
    means: Vec<f64>,
    dists: Vec<RewardDist>,
    r_max: f64,
) -> Result<BanditInstance> {
    if k < 2 {
        return Err(Error::Precondition(format!("K must be at least 2, got {k}")));
    }
    if means.len() != k {
        return Err(Error::Dimension { expected: k, got: means.len() });
    }
    if dists.len() != k {
        return Err(Error::Dimension { expected: k, got: dists.len() });
    }
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(Error::Range(format!("r_max must be positive and finite, got {r_max}")));
    }
    if means.iter().any(|m| !m.is_finite()) {
        return Err(Error::NonFinite("means"));
    }
    for (a, (&mean, dist)) in means.iter().zip(&dists).enumerate() {
        dist.validate()?;
        if mean.abs() > r_max {
            return Err(Error::Range(format!("|r({a})| = {} exceeds r_max = {r_max}", mean.abs())));
        }
        if let Some(h) = dist.half_range() {
            if mean.abs() + h > r_max * (1.0 + 1e-15) {
                return Err(Error::Range(format!(
                    "support of arm {a} reaches {} beyond r_max = {r_max}",
                    mean.abs() + h
                )));
            }
        }
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| means[i].total_cmp(&means[j]));
    let mut delta_min = f64::INFINITY;
    for w in order.windows(2) {
        let d = means[w[1]] - means[w[0]];
        if d <= TIE_TOLERANCE {
            let (first, second) = (w[0].min(w[1]), w[0].max(w[1]));
            return Err(Error::Tie { first, second });
        }
        delta_min = delta_min.min(d);
    }
    let a_star = order[k - 1];
    let delta_gap = means[a_star] - means[order[k - 2]];

    Ok(BanditInstance { means, dists, r_max, delta_min, delta_gap, a_star })
}

/// Instance with means drawn i.i.d. uniform on (0, 1) and deterministic rewards,
/// redrawn until the minimum gap exceeds [`RANDOM_MIN_GAP`].
pub fn random_instance<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<BanditInstance> {
    if k < 2 {
        return Err(Error::Precondition(format!("K must be at least 2, got {k}")));
    }
    for _ in 0..MAX_GENERATION_TRIES {
        let means: Vec<f64> = (0..k)
            .map(|_| loop {
                let u: f64 = rng.random();
                if u > 0.0 {
                    break u;
                }
            })
            .collect();
        match make_instance(k, means, vec![RewardDist::Deterministic; k], 1.0) {
            Ok(inst) if inst.delta_min > RANDOM_MIN_GAP => return Ok(inst),
            Ok(_) | Err(Error::Tie { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Generation { tries: MAX_GENERATION_TRIES })
}

impl BanditInstance {
    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn dists(&self) -> &[RewardDist] {
        &self.dists
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Smallest pairwise separation of the means.
    pub fn delta_min(&self) -> f64 {
        self.delta_min
    }

    /// Best mean minus second-best mean.
    pub fn delta_gap(&self) -> f64 {
        self.delta_gap
    }

    pub fn a_star(&self) -> usize {
        self.a_star
    }

    pub fn best_mean(&self) -> f64 {
        self.means[self.a_star]
    }

    /// True if any arm has Gaussian noise without a clip bound.
    pub fn unbounded(&self) -> bool {
        self.dists.iter().any(|d| d.half_range().is_none())
    }

    pub fn is_enumerable(&self) -> bool {
        self.dists.iter().all(RewardDist::is_enumerable)
    }

    /// Same means with new reward distributions and range, revalidated.
    pub fn with_dists(&self, dists: Vec<RewardDist>, r_max: f64) -> Result<BanditInstance> {
        make_instance(self.k(), self.means.clone(), dists, r_max)
    }

    /// Same distribution for every arm, keeping `r_max`.
    pub fn with_noise(&self, dist: RewardDist) -> Result<BanditInstance> {
        self.with_dists(vec![dist; self.k()], self.r_max)
    }

    pub fn sample_reward<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> f64 {
        self.dists[arm].sample(self.means[arm], rng)
    }

    /// Exhaustive reward support of `arm`.
    pub fn enumerate_support(&self, arm: usize) -> Result<Vec<(f64, f64)>> {
        if arm >= self.k() {
            return Err(Error::Precondition(format!("arm {arm} out of range for K = {}", self.k())));
        }
        self.dists[arm]
            .support(self.means[arm])
            .ok_or(Error::UnsupportedDist { arm })
    }

    /// Largest |reward| any arm can produce, `None` when unbounded.
    pub fn reward_bound(&self) -> Option<f64> {
        self.means
            .iter()
            .zip(&self.dists)
            .map(|(m, d)| d.half_range().map(|h| m.abs() + h))
            .try_fold(0.0_f64, |acc, b| b.map(|b| acc.max(b)))
    }

    /// Sub-optimality `(π* - π)ᵀr` of a distribution over arms, accumulated
    /// as a sum of non-negative terms.
    pub fn gap(&self, probs: &[f64]) -> f64 {
        let best = self.best_mean();
        probs
            .iter()
            .zip(&self.means)
            .map(|(p, m)| p * (best - m))
            .sum()
    }
}
