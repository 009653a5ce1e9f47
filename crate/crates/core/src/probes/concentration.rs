//! Uniform-in-time martingale concentration: the closed-form bound, a
//! Monte-Carlo coverage test and a grid check of the supporting algebra.

use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::env::BanditInstance;
use crate::error::{Error, Result};
use crate::learner::{apply_update, sample_action};
use crate::par::{self, Execution};
use crate::policy::{softmax_slice, PolicyParams};
use crate::rng::stream;

use super::report::ProbeReport;

/// Margin granted to the algebra check.
pub const ALGEBRA_TOLERANCE: f64 = 1e-9;

/// `6·√((V + 4/3)·ln((V + 1)/δ)) + 2·ln(1/δ) + (4/3)·ln 3`.
pub fn concentration_bound(v: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Range(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(v >= 0.0) || v.is_infinite() {
        return Err(Error::Range(format!("variance must be finite and nonnegative, got {v}")));
    }
    Ok(bound_unchecked(v, delta))
}

fn bound_unchecked(v: f64, delta: f64) -> f64 {
    6.0 * ((v + 4.0 / 3.0) * ((v + 1.0) / delta).ln()).sqrt()
        + 2.0 * (1.0 / delta).ln()
        + 4.0 / 3.0 * 3f64.ln()
}

/// Source of the bounded increments `X_t`.
#[derive(Debug, Clone)]
pub enum Family {
    /// `X_t = ±1/2` with equal probability.
    FairCoin,
    /// `X_t = 1{a_t = arm}·R_t/(2·R_max)` along a gradient bandit run from
    /// `theta1`. The conditional moments are taken from the finite supports.
    PolicyNoise {
        inst: BanditInstance,
        theta1: PolicyParams,
        eta: f64,
        arm: usize,
    },
}

#[derive(Debug, Clone)]
pub struct ConcentrationSpec {
    pub length: u64,
    pub trials: u64,
    pub delta: f64,
    pub family: Family,
}

impl ConcentrationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::Range("sequence length must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Range(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if let Family::PolicyNoise { inst, theta1, eta, arm } = &self.family {
            if theta1.len() != inst.k() {
                return Err(Error::Dimension { expected: inst.k(), got: theta1.len() });
            }
            if *arm >= inst.k() {
                return Err(Error::Range(format!("arm {arm} out of range for K={}", inst.k())));
            }
            if !(*eta > 0.0 && eta.is_finite()) {
                return Err(Error::Range(format!("eta must be positive, got {eta}")));
            }
            for a in 0..inst.k() {
                inst.enumerate_support(a)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coverage {
    pub trials: u64,
    pub violations: u64,
    pub fraction: f64,
    /// Largest `S_n / bound(V_n)` seen in any trial at any `n`.
    pub max_ratio: f64,
}

struct TrialOutcome {
    violated: bool,
    max_ratio: f64,
}

/// Tracks `S_n` against the bound and remembers whether it was ever crossed.
struct Tracker {
    delta: f64,
    drift: f64,
    variance: f64,
    violated: bool,
    max_ratio: f64,
}

impl Tracker {
    fn new(delta: f64) -> Self {
        Tracker { delta, drift: 0.0, variance: 0.0, violated: false, max_ratio: 0.0 }
    }

    fn push(&mut self, mean: f64, var: f64, x: f64) {
        self.drift += mean - x;
        self.variance += var;
        let s = self.drift.abs();
        let bound = bound_unchecked(self.variance, self.delta);
        self.max_ratio = self.max_ratio.max(s / bound);
        if s >= bound {
            self.violated = true;
        }
    }
}

fn fair_coin_trial<R: Rng>(length: u64, delta: f64, rng: &mut R) -> TrialOutcome {
    let mut tr = Tracker::new(delta);
    for _ in 0..length {
        let x = if rng.random::<bool>() { 0.5 } else { -0.5 };
        tr.push(0.0, 0.25, x);
    }
    TrialOutcome { violated: tr.violated, max_ratio: tr.max_ratio }
}

fn policy_noise_trial<R: Rng>(
    spec: &ConcentrationSpec,
    inst: &BanditInstance,
    theta1: &PolicyParams,
    eta: f64,
    arm: usize,
    rng: &mut R,
) -> Result<TrialOutcome> {
    let scale = 2.0 * inst.r_max();
    let support = inst.enumerate_support(arm)?;
    let m1: f64 = support.iter().map(|(v, p)| p * v).sum::<f64>() / scale;
    let m2: f64 = support.iter().map(|(v, p)| p * v * v).sum::<f64>() / (scale * scale);

    let mut theta = theta1.as_slice().to_vec();
    let mut tr = Tracker::new(spec.delta);
    for _ in 0..spec.length {
        let probs = softmax_slice(&theta);
        let p = probs[arm];
        let mean = p * m1;
        let var = (p * m2 - mean * mean).max(0.0);
        let action = sample_action(&probs, rng);
        let reward = inst.sample_reward(action, rng);
        let x = if action == arm { reward / scale } else { 0.0 };
        tr.push(mean, var, x);
        apply_update(&mut theta, &probs, action, reward, eta);
    }
    Ok(TrialOutcome { violated: tr.violated, max_ratio: tr.max_ratio })
}

/// Fraction of simulated sequences for which `S_n ≥ bound(V_n, δ)` at some
/// `n ≤ length`. Trial `i` draws from stream `i` of `seed`.
pub fn coverage_test(spec: &ConcentrationSpec, seed: u64, exec: Execution) -> Result<Coverage> {
    spec.validate()?;
    let outcomes: Vec<Result<TrialOutcome>> = par::map_indexed(spec.trials, exec, |i| {
        let mut rng = stream(seed, i);
        match &spec.family {
            Family::FairCoin => Ok(fair_coin_trial(spec.length, spec.delta, &mut rng)),
            Family::PolicyNoise { inst, theta1, eta, arm } => {
                policy_noise_trial(spec, inst, theta1, *eta, *arm, &mut rng)
            }
        }
    });
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for o in outcomes {
        let o = o?;
        violations += u64::from(o.violated);
        max_ratio = max_ratio.max(o.max_ratio);
    }
    let fraction = if spec.trials == 0 { 0.0 } else { violations as f64 / spec.trials as f64 };
    Ok(Coverage { trials: spec.trials, violations, fraction, max_ratio })
}

/// `(u + √(ux))² / ((2/3)·(u + √(ux)) + 2·(x + 1))`.
pub fn conc_algebra_f(u: f64, x: f64) -> f64 {
    let a = u + (u * x).sqrt();
    a * a / (2.0 / 3.0 * a + 2.0 * (x + 1.0))
}

/// Smallest `u` covered by the algebra lemma.
pub fn conc_algebra_threshold() -> f64 {
    2.0 * 3f64.ln()
}

/// `n` points evenly spaced over `[2·ln 3, u_max]`.
pub fn default_u_grid(n: usize, u_max: f64) -> Vec<f64> {
    let lo = conc_algebra_threshold();
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (u_max - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn x_grid(u: f64) -> Vec<f64> {
    let mut xs = vec![0.0, u / 25.0, 1e12, 1e15];
    // 40 points per decade over [1e-8, 1e10]
    for i in 0..=720 {
        xs.push(10f64.powf(-8.0 + i as f64 / 40.0));
    }
    xs
}

/// For each `u`, `min_x f(u, x) ≥ u/2 - 1e-9` over a log-spaced grid
/// together with `x = 0`, the interior critical point `u/25` and very large `x`.
pub fn check_conc_algebra(u_grid: &[f64]) -> Result<ProbeReport> {
    let threshold = conc_algebra_threshold();
    let mut report = ProbeReport::new("conc_algebra");
    for &u in u_grid {
        if !(u >= threshold) || !u.is_finite() {
            return Err(Error::Range(format!("u must be finite and at least 2 ln 3, got {u}")));
        }
        let (x_min, f_min) = x_grid(u)
            .into_iter()
            .map(|x| (x, conc_algebra_f(u, x)))
            .fold((0.0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        report.observe(u / 2.0 - ALGEBRA_TOLERANCE, f_min, || json!({ "u": u, "x": x_min, "f": f_min }));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_instance, RewardDist};
    use approx::assert_abs_diff_eq;

    #[test]
    fn bound_values() {
        let expected = 6.0 * (4.0 / 3.0 * 20f64.ln()).sqrt() + 2.0 * 20f64.ln() + 4.0 / 3.0 * 3f64.ln();
        assert_abs_diff_eq!(concentration_bound(0.0, 0.05).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(concentration_bound(0.0, 0.05).unwrap(), 19.448, epsilon = 1e-3);
        let near_one = concentration_bound(0.0, 1.0 - 1e-12).unwrap();
        assert_abs_diff_eq!(near_one, 1.4648, epsilon = 1e-4);
        for delta in [0.001, 0.01, 0.05, 0.2, 0.5, 0.9] {
            assert!(concentration_bound(10.0, delta).unwrap() > concentration_bound(1.0, delta).unwrap());
        }
    }

    #[test]
    fn bound_rejects_bad_arguments() {
        for delta in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(matches!(concentration_bound(1.0, delta), Err(Error::Range(_))));
        }
        assert!(matches!(concentration_bound(-1.0, 0.1), Err(Error::Range(_))));
    }

    #[test]
    fn coverage_conventions() {
        let spec = ConcentrationSpec { length: 10, trials: 0, delta: 0.05, family: Family::FairCoin };
        let c = coverage_test(&spec, 1, Execution::Sequential).unwrap();
        assert_eq!(c.fraction, 0.0);
        let bad = ConcentrationSpec { length: 0, ..spec.clone() };
        assert!(coverage_test(&bad, 1, Execution::Sequential).is_err());
        let half = ConcentrationSpec { length: 200, trials: 500, delta: 0.5, family: Family::FairCoin };
        assert!(coverage_test(&half, 3, Execution::default()).unwrap().fraction <= 0.5);
    }

    #[test]
    fn policy_noise_family() {
        let inst = make_instance(
            3,
            vec![0.9, 0.5, 0.1],
            vec![RewardDist::TwoPoint { offset: 0.1 }; 3],
            1.0,
        )
        .unwrap();
        let spec = ConcentrationSpec {
            length: 500,
            trials: 200,
            delta: 0.05,
            family: Family::PolicyNoise { inst, theta1: PolicyParams::zeros(3), eta: 0.1, arm: 0 },
        };
        let c = coverage_test(&spec, 11, Execution::default()).unwrap();
        assert!(c.fraction <= 0.05);
        assert!(c.max_ratio > 0.0 && c.max_ratio < 1.0);
        assert_eq!(c, coverage_test(&spec, 11, Execution::Sequential).unwrap());
    }

    #[test]
    fn algebra_values() {
        let u = conc_algebra_threshold();
        assert_abs_diff_eq!(u, 2.1972, epsilon = 1e-4);
        assert_abs_diff_eq!(conc_algebra_f(u, 0.0), u * u / (2.0 * u / 3.0 + 2.0), epsilon = 1e-15);
        assert_abs_diff_eq!(conc_algebra_f(u, 0.0), 1.3934, epsilon = 1e-4);
        for u in [u, 10.0, 100.0] {
            let far = conc_algebra_f(u, 1e14);
            assert!(far > u / 2.0);
            assert_abs_diff_eq!(far, u / 2.0, epsilon = 1e-4 * u);
        }
    }

    #[test]
    fn algebra_grid() {
        let report = check_conc_algebra(&default_u_grid(1000, 100.0)).unwrap();
        assert!(report.passed());
        assert_eq!(report.trials, 1000);
        assert!(matches!(check_conc_algebra(&[2.0]), Err(Error::Range(_))));
    }
}
