//! Softmax policy map and its analytic first- and second-order structure.
//!
//! Quantities of the form `r(a) - πᵀr` are formed as `Σ_b π(b)·(r(a) - r(b))`
//! rather than by subtracting a precomputed mean. Near one-hot policies the
//! two agree mathematically but the former keeps full relative precision,
//! which the inequality probes depend on.

use serde::{Deserialize, Serialize};

use crate::env::BanditInstance;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Logit vector θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolicyParams(Vec<f64>);

impl PolicyParams {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::Precondition("empty logit vector".into()));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("theta"));
        }
        Ok(PolicyParams(theta))
    }

    pub fn zeros(k: usize) -> Self {
        PolicyParams(vec![0.0; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Subtract the mean logit. Leaves the induced policy unchanged.
    pub fn recenter(&mut self) {
        let mean = self.0.iter().sum::<f64>() / self.0.len() as f64;
        for v in &mut self.0 {
            *v -= mean;
        }
    }
}

/// A point of the open simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Policy(Vec<f64>);

impl Policy {
    /// Validate an explicit probability vector.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Precondition("empty probability vector".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::Range("probabilities must be strictly positive".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Range(format!("probabilities sum to {total}")));
        }
        Ok(Policy(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    /// `Σ_{b≠a} π(b)`, i.e. `1 - π(a)` without cancellation.
    pub fn complement(&self, a: usize) -> f64 {
        self.0
            .iter()
            .enumerate()
            .filter(|&(b, _)| b != a)
            .map(|(_, p)| p)
            .sum()
    }

    /// Logits that reproduce this policy (`ln π`).
    pub fn logits(&self) -> PolicyParams {
        PolicyParams(self.0.iter().map(|p| p.ln()).collect())
    }
}

/// `exp(θ(a)) / Σ_b exp(θ(b))`, evaluated after subtracting the largest logit.
pub fn softmax(theta: &PolicyParams) -> Policy {
    Policy(softmax_slice(theta.as_slice()))
}

pub(crate) fn softmax_slice(theta: &[f64]) -> Vec<f64> {
    let max = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = theta.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = out.iter().sum();
    for p in &mut out {
        *p /= total;
    }
    out
}

fn check_dim(pi: &Policy, r: &[f64]) -> Result<()> {
    if pi.k() != r.len() {
        return Err(Error::Dimension { expected: pi.k(), got: r.len() });
    }
    Ok(())
}

/// `r(a) - πᵀr` for every arm.
pub fn advantages(pi: &Policy, r: &[f64]) -> Result<Vec<f64>> {
    check_dim(pi, r)?;
    Ok(advantages_unchecked(pi.probs(), r))
}

pub(crate) fn advantages_unchecked(p: &[f64], r: &[f64]) -> Vec<f64> {
    r.iter()
        .map(|ra| p.iter().zip(r).map(|(pb, rb)| pb * (ra - rb)).sum())
        .collect()
}

/// `πᵀr`.
pub fn objective(pi: &Policy, r: &[f64]) -> Result<f64> {
    check_dim(pi, r)?;
    Ok(pi.probs().iter().zip(r).map(|(p, v)| p * v).sum())
}

/// `d(πᵀr)/dθ`, component `a` equal to `π(a)·(r(a) - πᵀr)`.
pub fn true_gradient(pi: &Policy, r: &[f64]) -> Result<Vec<f64>> {
    let adv = advantages(pi, r)?;
    Ok(pi.probs().iter().zip(&adv).map(|(p, c)| p * c).collect())
}

/// `Σ_a π(a)²·(r(a) - πᵀr)²`, the squared norm of [`true_gradient`].
pub fn gradient_norm_sq(pi: &Policy, r: &[f64]) -> Result<f64> {
    Ok(true_gradient(pi, r)?.iter().map(|g| g * g).sum())
}

/// One-sample gradient, component `a` equal to `(1{a = sampled} - π(a))·reward`.
pub fn stochastic_gradient(pi: &Policy, sampled_action: usize, reward: f64) -> Result<Vec<f64>> {
    if sampled_action >= pi.k() {
        return Err(Error::Precondition(format!(
            "action {sampled_action} out of range for K = {}",
            pi.k()
        )));
    }
    Ok(pi
        .probs()
        .iter()
        .enumerate()
        .map(|(a, p)| {
            let indicator = if a == sampled_action { 1.0 } else { 0.0 };
            (indicator - p) * reward
        })
        .collect())
}

/// Hessian of `θ ↦ πᵀr`:
/// `S(i,j) = δ_ij·π(j)·c(i) - π(i)·π(j)·(c(i) + c(j))` with `c = r - πᵀr`.
pub fn hessian(pi: &Policy, r: &[f64]) -> Result<Matrix> {
    let c = advantages(pi, r)?;
    let p = pi.probs();
    let k = pi.k();
    let mut s = Matrix::zeros(k);
    for i in 0..k {
        for j in i..k {
            let mut v = -p[i] * p[j] * (c[i] + c[j]);
            if i == j {
                v += p[j] * c[i];
            }
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    Ok(s)
}

/// Largest |eigenvalue| of a symmetric matrix (cyclic Jacobi).
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    linalg::spectral_radius(m)
}

/// Non-uniform Łojasiewicz lower bound `π(a*)·(π* - π)ᵀr` on the gradient norm.
pub fn nl_lower_bound(pi: &Policy, inst: &BanditInstance) -> Result<f64> {
    check_dim(pi, inst.means())?;
    Ok(pi.probs()[inst.a_star()] * inst.gap(pi.probs()))
}

/// Most likely action, lowest index on ties.
pub fn max_prob_action(pi: &Policy) -> usize {
    let mut best = 0;
    for (a, &p) in pi.probs().iter().enumerate() {
        if p > pi.probs()[best] {
            best = a;
        }
    }
    best
}

/// `π_{θ+d}ᵀr - π_θᵀr` without forming either objective.
///
/// Uses `Σ_a π(a)·expm1(d(a))·(r(a) - πᵀr) / (1 + Σ_b π(b)·expm1(d(b)))`,
/// which stays accurate when the displacement is small or the policy is close
/// to a corner.
pub fn objective_delta(theta: &PolicyParams, direction: &[f64], r: &[f64]) -> Result<f64> {
    if direction.len() != theta.len() {
        return Err(Error::Dimension { expected: theta.len(), got: direction.len() });
    }
    let pi = softmax(theta);
    let adv = advantages(&pi, r)?;
    let p = pi.probs();
    let shift = direction.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if shift > 1.0 {
        // large moves: Σ_a π_{θ+d}(a)·c(a) with the exponent shifted to avoid overflow
        let w: Vec<f64> = p.iter().zip(direction).map(|(pa, d)| pa * (d - shift).exp()).collect();
        let z: f64 = w.iter().sum();
        let num: f64 = w.iter().zip(&adv).map(|(wa, ca)| wa * ca).sum();
        return Ok(num / z);
    }
    let num: f64 = p
        .iter()
        .zip(direction)
        .zip(&adv)
        .map(|((pa, d), ca)| pa * d.exp_m1() * ca)
        .sum();
    let z = 1.0 + p.iter().zip(direction).map(|(pa, d)| pa * d.exp_m1()).sum::<f64>();
    Ok(num / z)
}
