//! Series transforms and power-law fits.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::learner::Trajectory;

/// Least-squares fit of `ln value = slope·ln t + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// OLS on `(ln t, ln value)` over the points with
/// `t ≥ t_max / 10^window_decades`.
pub fn fit_log_slope(series: &[(f64, f64)], window_decades: f64) -> Result<SlopeFit> {
    if !(window_decades > 0.0) {
        return Err(Error::Range(format!("window must be positive, got {window_decades}")));
    }
    let t_max = series.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let t_lo = t_max / 10f64.powf(window_decades);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(t, v) in series.iter().filter(|p| p.0 >= t_lo) {
        if !(v > 0.0) || !(t > 0.0) {
            return Err(Error::NonPositiveValue { t, value: v });
        }
        xs.push(t.ln());
        ys.push(v.ln());
    }
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return Err(Error::Precondition("slope fit needs at least two points in the window".into()));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Precondition("slope fit needs distinct t values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    let t_min = series.iter().map(|p| p.0).filter(|t| *t >= t_lo).fold(f64::INFINITY, f64::min);
    Ok(SlopeFit { slope, intercept, r_squared, window: (t_min, t_max) })
}

/// `(1/t)·Σ_{s≤t} v_s` for a series indexed from `t = 1`.
pub fn running_mean(values: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            acc += v;
            acc / (i + 1) as f64
        })
        .collect()
}

/// `Σ_{s≤t} v_s`.
pub fn prefix_sums(values: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    values
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

/// `(t, (1/t)·Σ_{s≤t} ‖g_s‖²)` at every recorded step.
pub fn avg_grad_norm_series(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.records
        .iter()
        .map(|r| (r.t as f64, r.cum_grad_norm_sq / r.t as f64))
        .collect()
}

/// `(t, Σ_{s≤t} gap_s)` at every recorded step.
pub fn regret_series(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.records.iter().map(|r| (r.t as f64, r.cum_regret)).collect()
}

/// Value at the largest recorded `t ≤ at`.
pub fn value_at(series: &[(f64, f64)], at: f64) -> Option<f64> {
    series.iter().take_while(|p| p.0 <= at).last().map(|p| p.1)
}

/// Centered moving average with half-width `half` (shrinking at the ends).
pub fn moving_average(values: &[f64], half: usize) -> Vec<f64> {
    let n = values.len();
    let sums = prefix_sums(values);
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let total = sums[hi] - if lo > 0 { sums[lo - 1] } else { 0.0 };
            total / (hi - lo + 1) as f64
        })
        .collect()
}
