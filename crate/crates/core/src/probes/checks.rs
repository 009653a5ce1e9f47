//! Single-state inequality checks.
//!
//! Every conditional expectation over `a_t ~ π_θ` and `R_t ~ P_{a_t}` is
//! computed by exhaustive enumeration, so each check reduces to comparing two
//! deterministic numbers.

use serde_json::{json, Value};

use crate::env::BanditInstance;
use crate::error::{Error, Result};
use crate::learner::theoretical_eta;
use crate::policy::{self, objective_delta, Policy, PolicyParams};

use super::report::ProbeReport;

/// Central-difference step for derivative checks.
pub const FD_STEP: f64 = 1e-5;

/// Accepted relative error of finite-difference derivatives.
pub const FD_TOLERANCE: f64 = 1e-6;

/// Accepted coordinatewise error between the enumerated and analytic gradient.
pub const UNBIASED_TOLERANCE: f64 = 1e-12;

/// One `(probability, action, reward)` outcome of a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub prob: f64,
    pub action: usize,
    pub reward: f64,
}

/// All outcomes of one step from `probs`.
pub fn enumerate_outcomes(probs: &[f64], inst: &BanditInstance) -> Result<Vec<Outcome>> {
    let mut out = Vec::with_capacity(2 * probs.len());
    for (action, &pa) in probs.iter().enumerate() {
        for (reward, pr) in inst.enumerate_support(action)? {
            out.push(Outcome { prob: pa * pr, action, reward });
        }
    }
    Ok(out)
}

fn case(theta: &PolicyParams, r: &[f64]) -> Value {
    json!({ "theta": theta.as_slice(), "r": r })
}

fn case_with(theta: &PolicyParams, r: &[f64], extra: Value) -> Value {
    let mut v = case(theta, r);
    if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
        m.extend(e);
    }
    v
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖e_a - π‖²` with `1 - π(a)` formed as a sum.
fn indicator_distance_sq(pi: &Policy, a: usize) -> f64 {
    let head = pi.complement(a);
    let tail: f64 = pi
        .probs()
        .iter()
        .enumerate()
        .filter(|&(b, _)| b != a)
        .map(|(_, p)| p * p)
        .sum();
    head * head + tail
}

/// Exact `E_t‖(e_{a_t} - π)·(R_t - B)‖²`.
pub fn exact_second_moment(theta: &PolicyParams, inst: &BanditInstance, baseline: f64) -> Result<f64> {
    let pi = policy::softmax(theta);
    let dist: Vec<f64> = (0..inst.k()).map(|a| indicator_distance_sq(&pi, a)).collect();
    Ok(enumerate_outcomes(pi.probs(), inst)?
        .into_iter()
        .map(|o| o.prob * dist[o.action] * (o.reward - baseline).powi(2))
        .sum())
}

/// Range `R̄` of `R - B`: the declared `r_max` without a baseline, otherwise
/// the largest `|R - B|` over the finite supports.
pub fn effective_range(inst: &BanditInstance, baseline: Option<f64>) -> Result<f64> {
    match baseline {
        None => Ok(inst.r_max()),
        Some(b) => {
            let mut worst: f64 = 0.0;
            for a in 0..inst.k() {
                for (v, _) in inst.enumerate_support(a)? {
                    worst = worst.max((v - b).abs());
                }
            }
            Ok(worst)
        }
    }
}

fn suffixed(name: &str, baseline: Option<f64>) -> String {
    match baseline {
        Some(_) => format!("{name}.baseline"),
        None => name.to_string(),
    }
}

/// Enumerated `E_t[ĝ]` against the analytic gradient; the compared quantity
/// is the largest coordinate error.
pub fn check_unbiasedness(theta: &PolicyParams, inst: &BanditInstance) -> Result<ProbeReport> {
    let pi = policy::softmax(theta);
    let grad = policy::true_gradient(&pi, inst.means())?;
    let mut expected = vec![0.0; inst.k()];
    for o in enumerate_outcomes(pi.probs(), inst)? {
        for (e, g) in expected.iter_mut().zip(policy::stochastic_gradient(&pi, o.action, o.reward)?) {
            *e += o.prob * g;
        }
    }
    let err = expected
        .iter()
        .zip(&grad)
        .fold(0.0_f64, |acc, (e, g)| acc.max((e - g).abs()));
    let mut report = ProbeReport::new("unbiasedness");
    report.observe(err, UNBIASED_TOLERANCE, || case(theta, inst.means()));
    Ok(report)
}

/// `E‖ĝ‖² ≤ 2R̄²` and `E‖ĝ‖² ≤ 4R̄²·(1 - π(k_t))`.
pub fn check_second_moment(
    theta: &PolicyParams,
    inst: &BanditInstance,
    baseline: Option<f64>,
) -> Result<Vec<ProbeReport>> {
    let pi = policy::softmax(theta);
    let lhs = exact_second_moment(theta, inst, baseline.unwrap_or(0.0))?;
    let range = effective_range(inst, baseline)?;
    let corner = pi.complement(policy::max_prob_action(&pi));

    let mut uniform = ProbeReport::new(suffixed("second_moment.uniform", baseline));
    uniform.observe(lhs, 2.0 * range * range, || {
        case_with(theta, inst.means(), json!({ "baseline": baseline }))
    });
    let mut refined = ProbeReport::new(suffixed("second_moment.corner", baseline));
    refined.observe(lhs, 4.0 * range * range * corner, || {
        case_with(theta, inst.means(), json!({ "baseline": baseline }))
    });
    Ok(vec![uniform, refined])
}

/// Strong growth `E‖ĝ‖² ≤ (8·R̄²·R_max·K^{3/2}/Δ²)·‖g‖` and the corner bound
/// `1 - π(k_t) ≤ (2·R_max·K^{3/2}/Δ²)·‖g‖`.
pub fn check_strong_growth(
    theta: &PolicyParams,
    inst: &BanditInstance,
    baseline: Option<f64>,
) -> Result<Vec<ProbeReport>> {
    let pi = policy::softmax(theta);
    let grad_norm = norm(&policy::true_gradient(&pi, inst.means())?);
    let lhs = exact_second_moment(theta, inst, baseline.unwrap_or(0.0))?;
    let range = effective_range(inst, baseline)?;
    let r_max = inst.r_max();
    let k32 = (inst.k() as f64).powf(1.5);
    let delta_sq = inst.delta_min().powi(2);

    let mut growth = ProbeReport::new(suffixed("strong_growth", baseline));
    growth.observe(lhs, 8.0 * range * range * r_max * k32 / delta_sq * grad_norm, || {
        case_with(theta, inst.means(), json!({ "baseline": baseline }))
    });

    let corner = pi.complement(policy::max_prob_action(&pi));
    let mut corner_report = ProbeReport::new("corner_distance");
    corner_report.observe(corner, 2.0 * r_max * k32 / delta_sq * grad_norm, || case(theta, inst.means()));
    Ok(vec![growth, corner_report])
}

/// Bregman gap `D(θ', θ) ≤ (3/(2 - 9·R_max·η))·‖g(θ)‖·‖θ' - θ‖²` for one step.
pub fn check_ns_between_iterates(
    theta_t: &PolicyParams,
    theta_next: &PolicyParams,
    r: &[f64],
    r_max: f64,
    eta: f64,
) -> Result<ProbeReport> {
    let upper = 2.0 / (9.0 * r_max);
    if !(eta > 0.0 && eta < upper) {
        return Err(Error::StepSize { eta, upper });
    }
    if theta_next.len() != theta_t.len() {
        return Err(Error::Dimension { expected: theta_t.len(), got: theta_next.len() });
    }
    let pi = policy::softmax(theta_t);
    let grad = policy::true_gradient(&pi, r)?;
    let step: Vec<f64> = theta_next
        .as_slice()
        .iter()
        .zip(theta_t.as_slice())
        .map(|(a, b)| a - b)
        .collect();
    let linear: f64 = grad.iter().zip(&step).map(|(g, d)| g * d).sum();
    let bregman = (objective_delta(theta_t, &step, r)? - linear).abs();
    let step_sq: f64 = step.iter().map(|d| d * d).sum();
    let rhs = 3.0 / (2.0 - 9.0 * r_max * eta) * norm(&grad) * step_sq;
    let mut report = ProbeReport::new("ns_between_iterates");
    report.observe(bregman, rhs, || {
        json!({ "theta": theta_t.as_slice(), "theta_next": theta_next.as_slice(), "r": r, "eta": eta })
    });
    Ok(report)
}

/// Exact `E_t[π_{t+1}ᵀr] - π_tᵀr` after one step with step size `eta` and
/// baseline `B`, applying the full softmax to every candidate update.
pub fn exact_expected_progress(
    theta: &PolicyParams,
    inst: &BanditInstance,
    eta: f64,
    baseline: f64,
) -> Result<f64> {
    let pi = policy::softmax(theta);
    let mut total = 0.0;
    for o in enumerate_outcomes(pi.probs(), inst)? {
        let step: Vec<f64> = policy::stochastic_gradient(&pi, o.action, o.reward - baseline)?
            .into_iter()
            .map(|g| eta * g)
            .collect();
        total += o.prob * objective_delta(theta, &step, inst.means())?;
    }
    Ok(total)
}

/// At `η = Δ²/(40·K^{3/2}·R_max³)`: `(Δ²/(80·K^{3/2}·R_max³))·‖g‖² ≤ E_t[π_{t+1}ᵀr] - π_tᵀr`.
pub fn check_expected_progress(theta: &PolicyParams, inst: &BanditInstance) -> Result<ProbeReport> {
    let eta = theoretical_eta(inst)?;
    let pi = policy::softmax(theta);
    let grad_sq = policy::gradient_norm_sq(&pi, inst.means())?;
    let progress = exact_expected_progress(theta, inst, eta, 0.0)?;
    let k32 = (inst.k() as f64).powf(1.5);
    let lhs = inst.delta_min().powi(2) / (80.0 * k32 * inst.r_max().powi(3)) * grad_sq;
    let mut report = ProbeReport::new("expected_progress");
    report.observe(lhs, progress, || case_with(theta, inst.means(), json!({ "eta": eta })));
    Ok(report)
}

/// Spectral radius of the Hessian against `3·‖g‖`.
pub fn check_ns_spectral(theta: &PolicyParams, r: &[f64]) -> Result<ProbeReport> {
    let pi = policy::softmax(theta);
    let radius = policy::spectral_radius(&policy::hessian(&pi, r)?)?;
    let grad_norm = norm(&policy::true_gradient(&pi, r)?);
    let mut report = ProbeReport::new("ns_spectral");
    report.observe(radius, 3.0 * grad_norm, || case(theta, r));
    Ok(report)
}

/// `π(a*)·(π* - π)ᵀr ≤ ‖g‖`.
pub fn check_nl(theta: &PolicyParams, inst: &BanditInstance) -> Result<ProbeReport> {
    let pi = policy::softmax(theta);
    let lower = policy::nl_lower_bound(&pi, inst)?;
    let grad_norm = norm(&policy::true_gradient(&pi, inst.means())?);
    let mut report = ProbeReport::new("nl");
    report.observe(lower, grad_norm, || case(theta, inst.means()));
    Ok(report)
}

fn perturbed(theta: &PolicyParams, i: usize, h: f64) -> PolicyParams {
    let mut v = theta.as_slice().to_vec();
    v[i] += h;
    PolicyParams::new(v).expect("finite perturbation")
}

/// Central differences of `θ ↦ πᵀr`, each objective difference formed by
/// [`objective_delta`] so round-off scales with the gradient.
pub fn finite_difference_gradient(theta: &PolicyParams, r: &[f64], h: f64) -> Result<Vec<f64>> {
    let k = theta.len();
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let mut d = vec![0.0; k];
        d[i] = h;
        let forward = objective_delta(theta, &d, r)?;
        d[i] = -h;
        let backward = objective_delta(theta, &d, r)?;
        out.push((forward - backward) / (2.0 * h));
    }
    Ok(out)
}

/// Central differences of the analytic gradient, row `j` = `∂g/∂θ(j)`.
pub fn finite_difference_hessian(theta: &PolicyParams, r: &[f64], h: f64) -> Result<Vec<Vec<f64>>> {
    let k = theta.len();
    (0..k)
        .map(|j| {
            let plus = policy::true_gradient(&policy::softmax(&perturbed(theta, j, h)), r)?;
            let minus = policy::true_gradient(&policy::softmax(&perturbed(theta, j, -h)), r)?;
            Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect())
        })
        .collect()
}

/// Relative error of the analytic gradient against central differences,
/// scaled by `‖g‖`.
pub fn check_gradient_fd(theta: &PolicyParams, r: &[f64]) -> Result<ProbeReport> {
    let pi = policy::softmax(theta);
    let grad = policy::true_gradient(&pi, r)?;
    let fd = finite_difference_gradient(theta, r, FD_STEP)?;
    let err = norm(&grad.iter().zip(&fd).map(|(a, b)| a - b).collect::<Vec<_>>());
    let rel = err / norm(&grad).max(f64::MIN_POSITIVE);
    let mut report = ProbeReport::new("gradient_fd");
    report.observe(rel, FD_TOLERANCE, || case(theta, r));
    Ok(report)
}

/// Relative error of the analytic Hessian against central differences of the
/// gradient, scaled by `‖S‖_F + ‖g‖`. The gradient term keeps the scale
/// meaningful where the Hessian itself vanishes.
pub fn check_hessian_fd(theta: &PolicyParams, r: &[f64]) -> Result<ProbeReport> {
    let pi = policy::softmax(theta);
    let analytic = policy::hessian(&pi, r)?;
    let fd = finite_difference_hessian(theta, r, FD_STEP)?;
    let k = theta.len();
    let mut err_sq = 0.0;
    for i in 0..k {
        for j in 0..k {
            err_sq += (fd[i][j] - analytic[(i, j)]).powi(2);
        }
    }
    let scale = analytic.frobenius() + norm(&policy::true_gradient(&pi, r)?);
    let rel = err_sq.sqrt() / scale.max(f64::MIN_POSITIVE);
    let mut report = ProbeReport::new("hessian_fd");
    report.observe(rel, FD_TOLERANCE, || case(theta, r));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_instance, RewardDist};
    use crate::learner::apply_update;
    use approx::assert_abs_diff_eq;

    fn det2() -> BanditInstance {
        make_instance(2, vec![1.0, 0.0], vec![RewardDist::Deterministic; 2], 1.0).unwrap()
    }

    fn theta(v: &[f64]) -> PolicyParams {
        PolicyParams::new(v.to_vec()).unwrap()
    }

    #[test]
    fn unbiasedness_two_arms() {
        let r = check_unbiasedness(&theta(&[0.0, 0.0]), &det2()).unwrap();
        assert!(r.passed());
        assert_eq!(r.worst_slack, UNBIASED_TOLERANCE);
        assert!(check_unbiasedness(&theta(&[20.0, -20.0]), &det2()).unwrap().passed());
    }

    #[test]
    fn second_moment_two_arms() {
        let m = exact_second_moment(&theta(&[0.0, 0.0]), &det2(), 0.0).unwrap();
        assert_abs_diff_eq!(m, 0.25, epsilon = 1e-16);
        let reports = check_second_moment(&theta(&[0.0, 0.0]), &det2(), None).unwrap();
        assert!(reports.iter().all(ProbeReport::passed));
        let corner = theta(&[40.0, 0.0]);
        let m = exact_second_moment(&corner, &det2(), 0.0).unwrap();
        assert!(m < 1e-16);
        assert!(check_second_moment(&corner, &det2(), None).unwrap().iter().all(ProbeReport::passed));
    }

    #[test]
    fn strong_growth_two_arms() {
        let reports = check_strong_growth(&theta(&[0.0, 0.0]), &det2(), None).unwrap();
        // rhs = 8·2^{3/2}·√0.125 = 8
        assert_abs_diff_eq!(reports[0].worst_slack, 8.0 - 0.25, epsilon = 1e-12);
        assert!(reports.iter().all(ProbeReport::passed));
        let tied = check_strong_growth(&theta(&[800.0, 0.0]), &det2(), None).unwrap();
        assert!(tied.iter().all(ProbeReport::passed));
    }

    #[test]
    fn strong_growth_with_baseline() {
        let reports = check_strong_growth(&theta(&[0.3, -0.1]), &det2(), Some(0.5)).unwrap();
        assert_eq!(reports[0].probe_name, "strong_growth.baseline");
        assert!(reports.iter().all(ProbeReport::passed));
        assert_eq!(effective_range(&det2(), Some(0.5)).unwrap(), 0.5);
    }

    #[test]
    fn ns_between_iterates_cases() {
        let r = [1.0, 0.0];
        let t = theta(&[0.0, 0.0]);
        let same = check_ns_between_iterates(&t, &t, &r, 1.0, 0.005).unwrap();
        assert!(same.passed());
        assert_eq!(same.worst_slack, 0.0);

        let mut next = vec![0.0, 0.0];
        apply_update(&mut next, &[0.5, 0.5], 0, 1.0, 0.005);
        let report = check_ns_between_iterates(&t, &theta(&next), &r, 1.0, 0.005).unwrap();
        assert!(report.passed());
        // at the symmetric point the second-order term vanishes, so the gap is third order
        assert!(report.worst_slack > 0.0);

        assert!(matches!(
            check_ns_between_iterates(&t, &t, &r, 1.0, 0.3),
            Err(Error::StepSize { .. })
        ));
    }

    #[test]
    fn expected_progress_two_arms() {
        let inst = det2();
        let eta = theoretical_eta(&inst).unwrap();
        assert_abs_diff_eq!(eta, 8.8388e-3, epsilon = 1e-7);
        let progress = exact_expected_progress(&theta(&[0.0, 0.0]), &inst, eta, 0.0).unwrap();
        assert_abs_diff_eq!(progress, 1.10e-3, epsilon = 1e-5);
        let bound = 0.125 / (80.0 * 2f64.powf(1.5));
        assert_abs_diff_eq!(bound, 5.524e-4, epsilon = 1e-7);
        let report = check_expected_progress(&theta(&[0.0, 0.0]), &inst).unwrap();
        assert!(report.passed());
        assert_abs_diff_eq!(report.worst_slack, progress - bound, epsilon = 1e-15);
        let corner = check_expected_progress(&theta(&[30.0, 0.0]), &inst).unwrap();
        assert!(corner.passed());
    }

    #[test]
    fn ns_spectral_cases() {
        let r = check_ns_spectral(&theta(&[0.0, 0.0]), &[1.0, 0.0]).unwrap();
        assert!(r.passed());
        assert_abs_diff_eq!(r.worst_slack, 3.0 * 0.125f64.sqrt(), epsilon = 1e-15);
        let flat = check_ns_spectral(&theta(&[0.4, -2.0, 1.0]), &[0.3, 0.3, 0.3]).unwrap();
        assert!(flat.passed());
        assert_eq!(flat.worst_slack, 0.0);
    }

    #[test]
    fn finite_difference_checks() {
        let t = theta(&[0.3, -1.0, 2.0]);
        let r = [0.5, -0.2, 0.9];
        assert!(check_gradient_fd(&t, &r).unwrap().passed());
        assert!(check_hessian_fd(&t, &r).unwrap().passed());
        assert!(check_hessian_fd(&theta(&[0.0, 0.0]), &[1.0, 0.0]).unwrap().passed());
    }

    #[test]
    fn unsupported_distribution() {
        let inst = det2().with_noise(RewardDist::Gaussian { sigma: 1.0, clip: Some(0.0) }).unwrap();
        assert!(matches!(
            check_unbiasedness(&theta(&[0.0, 0.0]), &inst),
            Err(Error::UnsupportedDist { .. })
        ));
    }
}
