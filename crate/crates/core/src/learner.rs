//! The gradient bandit update loop.
//!
//! [`Variant::GradBandit`] samples `a_t ~ π_θ`, observes one reward and moves
//! every logit by `η·(1{a = a_t} - π(a))·R_t`. [`Variant::GradBanditBaseline`]
//! replaces `R_t` with `R_t - B_t`, where `B_t` is the average of the rewards
//! observed strictly before step `t` (`B_1 = 0`). [`Variant::BoltzmannWrong`]
//! is the empirical-mean Boltzmann rule with inverse temperature `c·ln t`,
//! kept as a counterexample.

use std::io::Write;

use rand::Rng;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::env::BanditInstance;
use crate::error::{Error, Result};
use crate::policy::{self, softmax_slice, Policy, PolicyParams};

/// Logits are recentred every this many steps.
pub const RECENTER_EVERY: u64 = 1_000_000;

/// Horizons up to this length are recorded in full under [`Thinning::Auto`].
pub const FULL_RECORD_LIMIT: u64 = 10_000;

/// Approximate number of records kept under geometric thinning.
pub const GEOMETRIC_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Variant {
    GradBandit,
    GradBanditBaseline,
    /// Selection `∝ exp(c·ln t·μ̂)` on empirical means; requires `c > 2`.
    BoltzmannWrong { c: f64 },
}

/// Constant learning rate, either explicit or derived from the instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRate {
    Constant(f64),
    Theoretical,
}

impl Serialize for LearningRate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            LearningRate::Constant(v) => s.serialize_f64(v),
            LearningRate::Theoretical => s.serialize_str("theoretical"),
        }
    }
}

impl<'de> Deserialize<'de> for LearningRate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct RateVisitor;

        impl de::Visitor<'_> for RateVisitor {
            type Value = LearningRate;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a positive number or \"theoretical\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<LearningRate, E> {
                Ok(LearningRate::Constant(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<LearningRate, E> {
                Ok(LearningRate::Constant(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<LearningRate, E> {
                Ok(LearningRate::Constant(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<LearningRate, E> {
                match v {
                    "theoretical" => Ok(LearningRate::Theoretical),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }

        d.deserialize_any(RateVisitor)
    }
}

/// Initial logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Init {
    Uniform,
    /// Optimal arm starts with probability `p_star < 1/K`, the rest uniform.
    Adversarial { p_star: f64 },
    Explicit(Vec<f64>),
}

/// Which steps are written to the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Thinning {
    /// Every step when `T ≤ 10⁴`, else geometric with about 2000 points.
    #[default]
    Auto,
    All,
    Every(u64),
    Geometric(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub variant: Variant,
    pub eta: LearningRate,
    pub horizon: u64,
    pub init: Init,
    #[serde(default)]
    pub thinning: Thinning,
}

impl LearnerConfig {
    pub fn new(variant: Variant, eta: LearningRate, horizon: u64, init: Init) -> Self {
        LearnerConfig { variant, eta, horizon, init, thinning: Thinning::Auto }
    }

    /// Resolve the step size against an instance.
    pub fn resolve_eta(&self, inst: &BanditInstance) -> Result<f64> {
        match self.eta {
            LearningRate::Constant(v) if v.is_finite() && v > 0.0 => Ok(v),
            LearningRate::Constant(v) => {
                Err(Error::Range(format!("learning rate must be positive, got {v}")))
            }
            LearningRate::Theoretical => theoretical_eta(inst),
        }
    }

    pub fn initial_params(&self, inst: &BanditInstance) -> Result<PolicyParams> {
        match &self.init {
            Init::Uniform => Ok(PolicyParams::zeros(inst.k())),
            Init::Adversarial { p_star } => adversarial_init(inst.k(), inst.a_star(), *p_star),
            Init::Explicit(theta) => {
                if theta.len() != inst.k() {
                    return Err(Error::Dimension { expected: inst.k(), got: theta.len() });
                }
                PolicyParams::new(theta.clone())
            }
        }
    }
}

/// `Δ² / (40·K^{3/2}·R_max³)` with `Δ` the minimum pairwise gap.
pub fn theoretical_eta(inst: &BanditInstance) -> Result<f64> {
    if inst.unbounded() {
        return Err(Error::UnboundedInstance);
    }
    let k = inst.k() as f64;
    let delta = inst.delta_min();
    Ok(delta * delta / (40.0 * k.powf(1.5) * inst.r_max().powi(3)))
}

/// Logits with `softmax(θ)(a*) = p_star` and the remaining mass spread evenly.
pub fn adversarial_init(k: usize, a_star: usize, p_star: f64) -> Result<PolicyParams> {
    if k < 2 || a_star >= k {
        return Err(Error::Precondition(format!("invalid arm {a_star} for K = {k}")));
    }
    if !(p_star > 0.0 && p_star < 1.0 / k as f64) {
        return Err(Error::Range(format!("p_star must lie in (0, 1/K) = (0, {}), got {p_star}", 1.0 / k as f64)));
    }
    let mut theta = vec![0.0; k];
    theta[a_star] = (p_star * (k as f64 - 1.0) / (1.0 - p_star)).ln();
    PolicyParams::new(theta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub action: usize,
    pub reward: f64,
    /// Probability of the optimal arm before the update.
    pub pi_star: f64,
    /// `(π* - π_t)ᵀr` before the update.
    pub gap: f64,
    pub grad_norm_sq: f64,
    /// `Σ_{s ≤ t} gap(s)`.
    pub cum_regret: f64,
    /// `Σ_{s ≤ t} ‖∇(π_sᵀr)‖²`; not part of the CSV export.
    pub cum_grad_norm_sq: f64,
}

/// Mutable state of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub theta: PolicyParams,
    /// Index of the next step, starting at 1.
    pub t: u64,
    pub reward_sum: f64,
    pub pulls: Vec<u64>,
    pub reward_totals: Vec<f64>,
    pub cum_regret: f64,
    pub cum_grad_norm_sq: f64,
}

impl LearnerState {
    pub fn new(theta: PolicyParams) -> Self {
        let k = theta.len();
        LearnerState {
            theta,
            t: 1,
            reward_sum: 0.0,
            pulls: vec![0; k],
            reward_totals: vec![0.0; k],
            cum_regret: 0.0,
            cum_grad_norm_sq: 0.0,
        }
    }

    /// Average of the rewards before step `t`; 0 at `t = 1`.
    pub fn baseline(&self) -> f64 {
        if self.t > 1 {
            self.reward_sum / (self.t - 1) as f64
        } else {
            0.0
        }
    }

    /// Per-arm empirical means, 0 for arms never pulled.
    pub fn empirical_means(&self) -> Vec<f64> {
        self.pulls
            .iter()
            .zip(&self.reward_totals)
            .map(|(&n, &s)| if n > 0 { s / n as f64 } else { 0.0 })
            .collect()
    }

    fn record(&mut self, inst: &BanditInstance, probs: &[f64], action: usize, reward: f64) -> StepRecord {
        let gap = inst.gap(probs);
        let adv = policy::advantages_unchecked(probs, inst.means());
        let grad_norm_sq: f64 = probs.iter().zip(&adv).map(|(p, c)| (p * c) * (p * c)).sum();
        self.cum_regret += gap;
        self.cum_grad_norm_sq += grad_norm_sq;
        StepRecord {
            t: self.t,
            action,
            reward,
            pi_star: probs[inst.a_star()],
            gap,
            grad_norm_sq,
            cum_regret: self.cum_regret,
            cum_grad_norm_sq: self.cum_grad_norm_sq,
        }
    }

    fn observe(&mut self, action: usize, reward: f64) {
        self.reward_sum += reward;
        self.pulls[action] += 1;
        self.reward_totals[action] += reward;
        self.t += 1;
    }
}

/// Inverse-CDF draw from a probability vector.
pub fn sample_action<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (a, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return a;
        }
    }
    probs.len() - 1
}

/// One gradient bandit step (with the running-average baseline if `use_baseline`).
pub fn gradient_bandit_step<R: Rng + ?Sized>(
    state: &mut LearnerState,
    inst: &BanditInstance,
    eta: f64,
    use_baseline: bool,
    rng: &mut R,
) -> StepRecord {
    let probs = softmax_slice(state.theta.as_slice());
    let action = sample_action(&probs, rng);
    let reward = inst.sample_reward(action, rng);
    let baseline = if use_baseline { state.baseline() } else { 0.0 };
    let record = state.record(inst, &probs, action, reward);
    apply_update(state.theta.as_mut_slice(), &probs, action, reward - baseline, eta);
    state.observe(action, reward);
    if (state.t - 1).is_multiple_of(RECENTER_EVERY) {
        state.theta.recenter();
    }
    record
}

/// `θ(a) += η·(1{a = action} - π(a))·signal` for every arm.
pub fn apply_update(theta: &mut [f64], probs: &[f64], action: usize, signal: f64, eta: f64) {
    for (a, (th, p)) in theta.iter_mut().zip(probs).enumerate() {
        let indicator = if a == action { 1.0 } else { 0.0 };
        *th += eta * (indicator - p) * signal;
    }
}

/// One step of the empirical-mean Boltzmann rule with inverse temperature `c·ln t`.
/// Step 1 selects uniformly; arms never pulled have estimate 0.
pub fn boltzmann_wrong_step<R: Rng + ?Sized>(
    state: &mut LearnerState,
    inst: &BanditInstance,
    rng: &mut R,
    c: f64,
) -> StepRecord {
    let k = inst.k();
    let probs = if state.t == 1 {
        vec![1.0 / k as f64; k]
    } else {
        let temperature = c * (state.t as f64).ln();
        let logits: Vec<f64> = state.empirical_means().iter().map(|m| temperature * m).collect();
        state.theta.as_mut_slice().copy_from_slice(&logits);
        softmax_slice(&logits)
    };
    let action = sample_action(&probs, rng);
    let reward = inst.sample_reward(action, rng);
    let record = state.record(inst, &probs, action, reward);
    state.observe(action, reward);
    record
}

/// A configured run over one instance.
pub struct Learner<'a> {
    inst: &'a BanditInstance,
    variant: Variant,
    eta: f64,
    state: LearnerState,
}

impl<'a> Learner<'a> {
    pub fn new(cfg: &LearnerConfig, inst: &'a BanditInstance) -> Result<Self> {
        let eta = match cfg.variant {
            Variant::BoltzmannWrong { c } => {
                if !(c.is_finite() && c > 2.0) {
                    return Err(Error::Range(format!("Boltzmann multiplier must exceed 2, got {c}")));
                }
                f64::NAN
            }
            _ => cfg.resolve_eta(inst)?,
        };
        Ok(Learner { inst, variant: cfg.variant, eta, state: LearnerState::new(cfg.initial_params(inst)?) })
    }

    pub fn state(&self) -> &LearnerState {
        &self.state
    }

    /// Step size in use (NaN for the Boltzmann rule).
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn policy(&self) -> Policy {
        policy::softmax(&self.state.theta)
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> StepRecord {
        match self.variant {
            Variant::GradBandit => gradient_bandit_step(&mut self.state, self.inst, self.eta, false, rng),
            Variant::GradBanditBaseline => {
                gradient_bandit_step(&mut self.state, self.inst, self.eta, true, rng)
            }
            Variant::BoltzmannWrong { c } => boltzmann_wrong_step(&mut self.state, self.inst, rng, c),
        }
    }
}

/// Steps at which a record is kept, ascending, always including 1 and `horizon`.
pub fn record_times(horizon: u64, thinning: Thinning) -> Vec<u64> {
    if horizon == 0 {
        return Vec::new();
    }
    let geometric = |points: usize| {
        let points = points.max(2);
        let log_t = (horizon as f64).ln();
        let mut out: Vec<u64> = (0..points)
            .map(|i| (log_t * i as f64 / (points - 1) as f64).exp().round() as u64)
            .map(|t| t.clamp(1, horizon))
            .collect();
        out.push(horizon);
        out.dedup();
        out
    };
    match thinning {
        Thinning::All => (1..=horizon).collect(),
        Thinning::Auto if horizon <= FULL_RECORD_LIMIT => (1..=horizon).collect(),
        Thinning::Auto => geometric(GEOMETRIC_POINTS),
        Thinning::Geometric(points) => geometric(points),
        Thinning::Every(stride) => {
            let stride = stride.max(1);
            let mut out: Vec<u64> = std::iter::once(1)
                .chain((1..=horizon / stride).map(|i| i * stride))
                .collect();
            out.push(horizon);
            out.dedup();
            out
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    pub final_theta: PolicyParams,
    pub horizon: u64,
}

pub const TRAJECTORY_CSV_HEADER: &str = "t,action,reward,pi_star,gap,grad_norm_sq,cum_regret";

/// 17 significant digits, enough to reproduce every f64 exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl Trajectory {
    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TRAJECTORY_CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.t,
                r.action,
                fmt_f64(r.reward),
                fmt_f64(r.pi_star),
                fmt_f64(r.gap),
                fmt_f64(r.grad_norm_sq),
                fmt_f64(r.cum_regret)
            )?;
        }
        Ok(())
    }
}

/// Execute `cfg.horizon` steps, keeping the records selected by `cfg.thinning`.
pub fn run<R: Rng + ?Sized>(cfg: &LearnerConfig, inst: &BanditInstance, rng: &mut R) -> Result<Trajectory> {
    if cfg.horizon < 1 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    let mut learner = Learner::new(cfg, inst)?;
    let times = record_times(cfg.horizon, cfg.thinning);
    let mut next = times.iter().peekable();
    let mut records = Vec::with_capacity(times.len());
    for t in 1..=cfg.horizon {
        let rec = learner.step(rng);
        if next.peek() == Some(&&t) {
            records.push(rec);
            next.next();
        }
    }
    Ok(Trajectory { records, final_theta: learner.state.theta, horizon: cfg.horizon })
}

/// Exact `E_t[θ_{t+1}] - θ_t` for a baseline `B`, enumerating actions and rewards.
pub fn expected_theta_increment(
    theta: &PolicyParams,
    inst: &BanditInstance,
    eta: f64,
    baseline: f64,
) -> Result<Vec<f64>> {
    let probs = softmax_slice(theta.as_slice());
    let k = inst.k();
    let mut out = vec![0.0; k];
    for (a, &pa) in probs.iter().enumerate() {
        for (value, p_reward) in inst.enumerate_support(a)? {
            let weight = pa * p_reward;
            for (b, o) in out.iter_mut().enumerate() {
                let indicator = if a == b { 1.0 } else { 0.0 };
                *o += weight * eta * (indicator - probs[b]) * (value - baseline);
            }
        }
    }
    Ok(out)
}
