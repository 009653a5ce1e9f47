//! Gradient diagnostics on a barycentric grid over the 3-arm simplex.

use serde::Serialize;

use crate::env::{make_instance, RewardDist};
use crate::error::Result;
use crate::policy::{self, Policy};

/// Distance kept from the simplex boundary.
pub const SIMPLEX_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub pi: [f64; 3],
    /// `E‖ĝ‖²` under deterministic rewards.
    pub stoch_scale: f64,
    /// `‖∇(πᵀr)‖`.
    pub grad_norm: f64,
    /// `‖∇(πᵀr)‖ / (1 - max_a π(a))`.
    pub ratio: f64,
}

pub const SCAN_CSV_HEADER: &str = "pi1,pi2,pi3,stoch_scale,grad_norm,ratio";

/// `E‖(e_a - π)·r(a)‖²` for deterministic rewards.
pub fn deterministic_second_moment(pi: &Policy, r: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (a, (&p, &ra)) in pi.probs().iter().zip(r).enumerate() {
        let g = policy::stochastic_gradient(pi, a, ra)?;
        total += p * g.iter().map(|x| x * x).sum::<f64>();
    }
    Ok(total)
}

/// Points `ε + (1 - 3ε)·(i, j, n-i-j)/n` for all `i + j ≤ n`.
pub fn simplex_grid(resolution: usize) -> Vec<[f64; 3]> {
    let n = resolution as f64;
    let scale = 1.0 - 3.0 * SIMPLEX_MARGIN;
    let mut out = Vec::new();
    for i in 0..=resolution {
        for j in 0..=(resolution - i) {
            let l = resolution - i - j;
            let p0 = SIMPLEX_MARGIN + scale * i as f64 / n;
            let p1 = SIMPLEX_MARGIN + scale * j as f64 / n;
            let p2 = SIMPLEX_MARGIN + scale * l as f64 / n;
            // put the rounding residue on the largest coordinate
            let mut p = [p0, p1, p2];
            let k = if p0 >= p1 && p0 >= p2 { 0 } else if p1 >= p2 { 1 } else { 2 };
            p[k] = 1.0 - (p.iter().sum::<f64>() - p[k]);
            out.push(p);
        }
    }
    out
}

/// One row per grid point; `r` must be tie-free.
pub fn simplex_scan(r: [f64; 3], resolution: usize) -> Result<Vec<ScanRow>> {
    if resolution < 10 {
        return Err(crate::error::Error::Range(format!("resolution must be at least 10, got {resolution}")));
    }
    let r_max = r.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    make_instance(3, r.to_vec(), vec![RewardDist::Deterministic; 3], r_max)?;
    simplex_grid(resolution)
        .into_iter()
        .map(|p| {
            let pi = Policy::from_probs(p.to_vec())?;
            let stoch_scale = deterministic_second_moment(&pi, &r)?;
            let grad_norm = policy::gradient_norm_sq(&pi, &r)?.sqrt();
            let corner = pi.complement(policy::max_prob_action(&pi));
            Ok(ScanRow { pi: p, stoch_scale, grad_norm, ratio: grad_norm / corner })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_shape() {
        let g = simplex_grid(10);
        assert_eq!(g.len(), 66);
        for p in &g {
            assert!(p.iter().all(|x| *x >= SIMPLEX_MARGIN * (1.0 - 1e-9)));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn corners_center_and_ratio() {
        let r = [1.0, 0.5, 0.0];
        let rows = simplex_scan(r, 30).unwrap();
        let near_corner = rows.iter().find(|row| row.pi[0] > 0.99).unwrap();
        assert!(near_corner.stoch_scale < 10.0 * SIMPLEX_MARGIN);
        let delta = 0.5_f64;
        let floor = delta * delta / (2.0 * 3f64.powf(1.5));
        assert!(rows.iter().all(|row| row.ratio >= floor));

        let center = Policy::from_probs(vec![1.0 / 3.0; 3]).unwrap();
        // advantages (0.5, 0, -0.5) scaled by 1/3
        assert_abs_diff_eq!(policy::gradient_norm_sq(&center, &r).unwrap(), 0.5 / 9.0, epsilon = 1e-15);
        // arm 0: (2/3)²+2(1/3)² = 2/3 times r² = 1; arm 1 times 0.25
        let expected = (2.0 / 3.0 + 2.0 / 3.0 * 0.25) / 3.0;
        assert_abs_diff_eq!(deterministic_second_moment(&center, &r).unwrap(), expected, epsilon = 1e-15);
    }

    #[test]
    fn grad_norm_matches_policy_module() {
        let r = [0.2, -0.4, 0.9];
        for row in simplex_scan(r, 12).unwrap() {
            let pi = Policy::from_probs(row.pi.to_vec()).unwrap();
            assert_eq!(row.grad_norm, policy::gradient_norm_sq(&pi, &r).unwrap().sqrt());
        }
    }

    #[test]
    fn ties_rejected() {
        assert!(matches!(simplex_scan([1.0, 1.0, 0.0], 20), Err(Error::Tie { .. })));
        assert!(matches!(simplex_scan([1.0, 0.5, 0.0], 5), Err(Error::Range(_))));
    }
}
