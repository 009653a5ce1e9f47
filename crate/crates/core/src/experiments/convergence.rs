//! Multi-seed runs and their pointwise mean curves.

use serde::Serialize;

use crate::env::BanditInstance;
use crate::error::{Error, Result};
use crate::learner::{self, LearnerConfig, Trajectory};
use crate::par::{self, Execution};
use crate::rng::seeded;

use super::analysis::{fit_log_slope, value_at, SlopeFit};

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub trajectory: Trajectory,
}

/// Pointwise averages over seeds at the shared record times.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeanCurve {
    pub t: Vec<u64>,
    pub gap: Vec<f64>,
    pub pi_star: Vec<f64>,
    /// Mean of the per-seed running means of `‖g‖²`.
    pub avg_grad_norm_sq: Vec<f64>,
    pub regret: Vec<f64>,
}

impl MeanCurve {
    pub fn gap_series(&self) -> Vec<(f64, f64)> {
        self.pairs(&self.gap)
    }

    pub fn pi_star_series(&self) -> Vec<(f64, f64)> {
        self.pairs(&self.pi_star)
    }

    pub fn grad_norm_series(&self) -> Vec<(f64, f64)> {
        self.pairs(&self.avg_grad_norm_sq)
    }

    pub fn regret_series(&self) -> Vec<(f64, f64)> {
        self.pairs(&self.regret)
    }

    fn pairs(&self, v: &[f64]) -> Vec<(f64, f64)> {
        self.t.iter().zip(v).map(|(&t, &v)| (t as f64, v)).collect()
    }
}

/// One run per seed, each on `seeded(seed)`, returned in seed-list order.
pub fn run_seeds(cfg: &LearnerConfig, inst: &BanditInstance, seeds: &[u64], exec: Execution) -> Result<Vec<SeedRun>> {
    par::map_slice(seeds, exec, |&seed| {
        learner::run(cfg, inst, &mut seeded(seed)).map(|trajectory| SeedRun { seed, trajectory })
    })
    .into_iter()
    .collect()
}

/// Average the runs in list order. All runs must share record times.
pub fn mean_curve(runs: &[SeedRun]) -> Result<MeanCurve> {
    let Some(first) = runs.first() else {
        return Err(Error::Precondition("mean curve needs at least one run".into()));
    };
    let times: Vec<u64> = first.trajectory.records.iter().map(|r| r.t).collect();
    let n = times.len();
    let mut curve = MeanCurve {
        t: times,
        gap: vec![0.0; n],
        pi_star: vec![0.0; n],
        avg_grad_norm_sq: vec![0.0; n],
        regret: vec![0.0; n],
    };
    for run in runs {
        let recs = &run.trajectory.records;
        if recs.len() != n || recs.iter().zip(&curve.t).any(|(r, t)| r.t != *t) {
            return Err(Error::Precondition(format!("seed {} has different record times", run.seed)));
        }
        for (i, r) in recs.iter().enumerate() {
            curve.gap[i] += r.gap;
            curve.pi_star[i] += r.pi_star;
            curve.avg_grad_norm_sq[i] += r.cum_grad_norm_sq / r.t as f64;
            curve.regret[i] += r.cum_regret;
        }
    }
    let m = runs.len() as f64;
    for v in [&mut curve.gap, &mut curve.pi_star, &mut curve.avg_grad_norm_sq, &mut curve.regret] {
        v.iter_mut().for_each(|x| *x /= m);
    }
    Ok(curve)
}

#[derive(Debug, Clone)]
pub struct ConvergenceResult {
    pub runs: Vec<SeedRun>,
    pub mean: MeanCurve,
}

pub fn run_convergence(
    cfg: &LearnerConfig,
    inst: &BanditInstance,
    seeds: &[u64],
    exec: Execution,
) -> Result<ConvergenceResult> {
    let runs = run_seeds(cfg, inst, seeds, exec)?;
    let mean = mean_curve(&runs)?;
    Ok(ConvergenceResult { runs, mean })
}

/// Rate and regret diagnostics of a convergence run.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceSummary {
    pub horizon: u64,
    pub seeds: usize,
    pub final_mean_gap: f64,
    pub final_pi_star: Vec<f64>,
    pub gap_slope: Option<SlopeFit>,
    pub grad_norm_slope: Option<SlopeFit>,
    /// Mean regret at `T` over mean regret at the last record `≤ T/2`.
    pub regret_ratio: f64,
    /// `Ĉ = t·gap(t)` with `t` the last record `≤ T/2` and the gap a
    /// log-window average of the mean curve around it.
    pub c_hat: f64,
    pub regret_final: f64,
    /// `√(2·R_max·Ĉ·T)`.
    pub regret_envelope: f64,
}

/// Half-width in records of the averaging window used for `Ĉ`.
const C_HAT_HALF_WINDOW: usize = 25;

pub fn summarize(result: &ConvergenceResult, r_max: f64, window_decades: f64) -> Result<ConvergenceSummary> {
    let mean = &result.mean;
    let horizon = *mean.t.last().ok_or_else(|| Error::Precondition("empty mean curve".into()))?;
    let half = horizon as f64 / 2.0;
    let regret = mean.regret_series();
    let regret_final = *mean.regret.last().expect("nonempty");
    let regret_half = value_at(&regret, half).unwrap_or(f64::NAN);

    let idx = mean.t.iter().rposition(|&t| t as f64 <= half).unwrap_or(0);
    let lo = idx.saturating_sub(C_HAT_HALF_WINDOW);
    let hi = (idx + C_HAT_HALF_WINDOW).min(mean.t.len() - 1);
    let smoothed = mean.gap[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
    let c_hat = mean.t[idx] as f64 * smoothed;

    Ok(ConvergenceSummary {
        horizon,
        seeds: result.runs.len(),
        final_mean_gap: *mean.gap.last().expect("nonempty"),
        final_pi_star: result
            .runs
            .iter()
            .map(|r| r.trajectory.last().map_or(f64::NAN, |x| x.pi_star))
            .collect(),
        gap_slope: fit_log_slope(&mean.gap_series(), window_decades).ok(),
        grad_norm_slope: fit_log_slope(&mean.grad_norm_series(), window_decades).ok(),
        regret_ratio: regret_final / regret_half,
        c_hat,
        regret_final,
        regret_envelope: (2.0 * r_max * c_hat * horizon as f64).sqrt(),
    })
}
