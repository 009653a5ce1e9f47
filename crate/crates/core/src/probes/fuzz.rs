//! Seeded fuzzing drivers for the inequality checks.
//!
//! Trials are split into fixed-size chunks; each chunk owns its generators
//! and accumulators and the chunks are merged in index order, so the reports
//! do not depend on the worker count.

use rand::Rng;
use serde_json::json;

use crate::env::{make_instance, BanditInstance, RewardDist};
use crate::error::{Error, Result};
use crate::learner::{apply_update, sample_action};
use crate::par::{self, Execution};
use crate::policy::{softmax_slice, PolicyParams};
use crate::rng::{derive_seed, stream};

use super::checks;
use super::concentration::{self, ConcentrationSpec, Family};
use super::report::{merge_all, ProbeReport};

/// Fuzzed logits are uniform on `[-THETA_RANGE, THETA_RANGE]`.
pub const THETA_RANGE: f64 = 10.0;

const CHUNK: u64 = 256;
const REPLAY_LENGTH: u64 = 100;
const COVERAGE_LENGTH: u64 = 1000;
const COVERAGE_DELTAS: [f64; 3] = [0.01, 0.05, 0.2];
const ALGEBRA_GRID: usize = 1000;
const ALGEBRA_U_MAX: f64 = 100.0;

/// A fuzzed `(θ, instance)` pair.
#[derive(Debug, Clone)]
pub struct FuzzState {
    pub theta: PolicyParams,
    pub inst: BanditInstance,
}

pub fn random_theta<R: Rng + ?Sized>(k: usize, rng: &mut R) -> PolicyParams {
    PolicyParams::new((0..k).map(|_| rng.random_range(-THETA_RANGE..=THETA_RANGE)).collect())
        .expect("bounded logits are finite")
}

/// Tie-free means uniform on `[-1, 1]`, `R_max = 1`, each arm independently
/// Deterministic or TwoPoint with offset uniform on `[0, 1 - |r(a)|]`.
pub fn random_enumerable_instance<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<BanditInstance> {
    for _ in 0..1000 {
        let means: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let dists = means
            .iter()
            .map(|m: &f64| {
                if rng.random::<bool>() {
                    RewardDist::Deterministic
                } else {
                    RewardDist::TwoPoint { offset: rng.random::<f64>() * (1.0 - m.abs()) }
                }
            })
            .collect();
        match make_instance(k, means, dists, 1.0) {
            Err(Error::Tie { .. }) => continue,
            other => return other,
        }
    }
    Err(Error::Generation { tries: 1000 })
}

/// `K` uniform on `k_lo..=k_hi`, then instance and logits.
pub fn random_state<R: Rng + ?Sized>(k_lo: usize, k_hi: usize, rng: &mut R) -> Result<FuzzState> {
    let k = rng.random_range(k_lo..=k_hi);
    let inst = random_enumerable_instance(k, rng)?;
    let theta = random_theta(k, rng);
    Ok(FuzzState { theta, inst })
}

/// Run `trial(i, rng)` for `i < trials`, each on stream `i` of `seed`, and
/// merge the per-trial report lists.
pub fn fuzz<F>(trials: u64, seed: u64, exec: Execution, trial: F) -> Result<Vec<ProbeReport>>
where
    F: Fn(u64, &mut crate::rng::SimRng) -> Result<Vec<ProbeReport>> + Sync + Send,
{
    let chunks = trials.div_ceil(CHUNK);
    let batches: Vec<Result<Vec<ProbeReport>>> = par::map_indexed(chunks, exec, |c| {
        let mut acc: Option<Vec<ProbeReport>> = None;
        for i in c * CHUNK..((c + 1) * CHUNK).min(trials) {
            let mut rng = stream(seed, i);
            let reports = trial(i, &mut rng)?;
            match acc.as_mut() {
                None => acc = Some(reports),
                Some(a) => a.iter_mut().zip(reports).for_each(|(x, y)| x.merge(y)),
            }
        }
        Ok(acc.unwrap_or_default())
    });
    let batches = batches.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(merge_all(batches.into_iter().filter(|b| !b.is_empty()).collect()))
}

/// The probe suite exposed by `sgb probe`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Probe {
    Unbiasedness,
    SecondMoment,
    StrongGrowth,
    Smoothness,
    NsBetweenIterates,
    ExpectedProgress,
    Nl,
    Concentration,
}

impl Probe {
    pub const ALL: [Probe; 8] = [
        Probe::Unbiasedness,
        Probe::SecondMoment,
        Probe::StrongGrowth,
        Probe::Smoothness,
        Probe::NsBetweenIterates,
        Probe::ExpectedProgress,
        Probe::Nl,
        Probe::Concentration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Probe::Unbiasedness => "unbiasedness",
            Probe::SecondMoment => "second_moment",
            Probe::StrongGrowth => "strong_growth",
            Probe::Smoothness => "smoothness",
            Probe::NsBetweenIterates => "ns_between_iterates",
            Probe::ExpectedProgress => "expected_progress",
            Probe::Nl => "nl",
            Probe::Concentration => "concentration",
        }
    }

    pub fn from_name(name: &str) -> Option<Probe> {
        Probe::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Fuzzed states, replayed steps, or simulated sequences.
    pub fn default_trials(self) -> u64 {
        match self {
            Probe::Unbiasedness => 1_000,
            Probe::NsBetweenIterates | Probe::ExpectedProgress | Probe::Concentration => 10_000,
            _ => 100_000,
        }
    }

    fn index(self) -> u64 {
        Probe::ALL.iter().position(|p| *p == self).expect("listed") as u64
    }
}

/// Run one probe with `trials` (or its default) under `seed`. Each probe
/// draws from its own derived seed, so results do not depend on which other
/// probes run.
pub fn run_probe(probe: Probe, trials: Option<u64>, seed: u64, exec: Execution) -> Result<Vec<ProbeReport>> {
    let n = trials.unwrap_or_else(|| probe.default_trials());
    let seed = derive_seed(seed, probe.index());
    match probe {
        Probe::Unbiasedness => fuzz(n, seed, exec, |_, rng| {
            let s = random_state(2, 10, rng)?;
            Ok(vec![checks::check_unbiasedness(&s.theta, &s.inst)?])
        }),
        Probe::SecondMoment => fuzz(n, seed, exec, |_, rng| {
            let s = random_state(2, 10, rng)?;
            let b = rng.random_range(-1.0..=1.0);
            let mut out = checks::check_second_moment(&s.theta, &s.inst, None)?;
            out.extend(checks::check_second_moment(&s.theta, &s.inst, Some(b))?);
            Ok(out)
        }),
        Probe::StrongGrowth => fuzz(n, seed, exec, |_, rng| {
            let s = random_state(2, 10, rng)?;
            let b = rng.random_range(-1.0..=1.0);
            let mut out = checks::check_strong_growth(&s.theta, &s.inst, None)?;
            out.truncate(2);
            out.push(checks::check_strong_growth(&s.theta, &s.inst, Some(b))?.swap_remove(0));
            Ok(out)
        }),
        Probe::Smoothness => fuzz(n, seed, exec, |_, rng| {
            let s = random_state(2, 10, rng)?;
            let r = s.inst.means();
            Ok(vec![
                checks::check_hessian_fd(&s.theta, r)?,
                checks::check_gradient_fd(&s.theta, r)?,
                checks::check_ns_spectral(&s.theta, r)?,
            ])
        }),
        Probe::NsBetweenIterates => replay_between_iterates(n, seed, exec),
        Probe::ExpectedProgress => fuzz(n, seed, exec, |_, rng| {
            let s = random_state(2, 6, rng)?;
            Ok(vec![checks::check_expected_progress(&s.theta, &s.inst)?])
        }),
        Probe::Nl => fuzz(n, seed, exec, |_, rng| {
            let s = random_state(2, 10, rng)?;
            Ok(vec![checks::check_nl(&s.theta, &s.inst)?])
        }),
        Probe::Concentration => concentration_suite(n, seed, exec),
    }
}

/// Every probe in suite order.
pub fn run_all(trials: Option<u64>, seed: u64, exec: Execution) -> Result<Vec<ProbeReport>> {
    let mut out = Vec::new();
    for p in Probe::ALL {
        out.extend(run_probe(p, trials, seed, exec)?);
    }
    Ok(out)
}

/// Checks `steps` consecutive updates along gradient bandit trajectories of
/// `REPLAY_LENGTH` steps, each from a fuzzed state with an admissible step size
/// drawn uniformly from `[1e-3, 1)·2/(9·R_max)`.
pub fn replay_between_iterates(steps: u64, seed: u64, exec: Execution) -> Result<Vec<ProbeReport>> {
    let runs = steps.div_ceil(REPLAY_LENGTH);
    fuzz(runs, seed, exec, |i, rng| {
        let s = random_state(2, 10, rng)?;
        let upper = 2.0 / (9.0 * s.inst.r_max());
        let eta = upper * rng.random_range(1e-3..1.0);
        let len = REPLAY_LENGTH.min(steps - i * REPLAY_LENGTH);
        let mut report = ProbeReport::new("ns_between_iterates");
        let mut theta = s.theta;
        for _ in 0..len {
            let probs = softmax_slice(theta.as_slice());
            let action = sample_action(&probs, rng);
            let reward = s.inst.sample_reward(action, rng);
            let mut next = theta.clone();
            apply_update(next.as_mut_slice(), &probs, action, reward, eta);
            report.merge(checks::check_ns_between_iterates(&theta, &next, s.inst.means(), s.inst.r_max(), eta)?);
            theta = next;
        }
        Ok(vec![report])
    })
}

/// Fair-coin coverage at each of δ ∈ {0.01, 0.05, 0.2} with `sequences`
/// sequences of length 1000, plus the algebra grid scan.
pub fn concentration_suite(sequences: u64, seed: u64, exec: Execution) -> Result<Vec<ProbeReport>> {
    let mut out = Vec::new();
    for (i, delta) in COVERAGE_DELTAS.into_iter().enumerate() {
        let spec = ConcentrationSpec { length: COVERAGE_LENGTH, trials: sequences, delta, family: Family::FairCoin };
        let cov = concentration::coverage_test(&spec, derive_seed(seed, i as u64), exec)?;
        let mut report = ProbeReport::new(format!("coverage.delta={delta}"));
        report.observe(cov.fraction, delta, || {
            json!({ "delta": delta, "violations": cov.violations, "max_ratio": cov.max_ratio })
        });
        report.trials = cov.trials;
        out.push(report);
    }
    out.push(concentration::check_conc_algebra(&concentration::default_u_grid(ALGEBRA_GRID, ALGEBRA_U_MAX))?);
    Ok(out)
}
