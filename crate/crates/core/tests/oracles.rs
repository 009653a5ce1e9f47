//! Monte Carlo runs of the real update path, checked against exact enumeration.

use sgb_core::env::{make_instance, BanditInstance, RewardDist};
use sgb_core::learner::{expected_theta_increment, gradient_bandit_step, LearnerState};
use sgb_core::policy::{softmax, true_gradient, PolicyParams};
use sgb_core::probes::exact_second_moment;
use sgb_core::rng::seeded;

const SAMPLES: usize = 200_000;
const Z: f64 = 5.0;

fn instance() -> BanditInstance {
    make_instance(
        4,
        vec![0.8, 0.1, -0.3, 0.5],
        vec![
            RewardDist::TwoPoint { offset: 0.2 },
            RewardDist::Deterministic,
            RewardDist::TwoPoint { offset: 0.7 },
            RewardDist::TwoPoint { offset: 0.5 },
        ],
        1.0,
    )
    .unwrap()
}

struct Moments {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn new() -> Self {
        Moments { n: 0.0, sum: 0.0, sum_sq: 0.0 }
    }

    fn push(&mut self, x: f64) {
        self.n += 1.0;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n
    }

    fn std_err(&self) -> f64 {
        let m = self.mean();
        ((self.sum_sq / self.n - m * m).max(0.0) / self.n).sqrt()
    }
}

fn assert_within(label: &str, est: &Moments, exact: f64) {
    let tol = Z * est.std_err() + 1e-12;
    assert!((est.mean() - exact).abs() <= tol, "{label}: estimate {} vs exact {exact} (tol {tol})", est.mean());
}

/// One step from a fixed state, repeated: returns per-coordinate increments.
fn sampled_increments(theta: &PolicyParams, inst: &BanditInstance, eta: f64, prior_rewards: &[(usize, f64)]) -> (Vec<Moments>, Moments) {
    let mut base = LearnerState::new(theta.clone());
    for &(a, r) in prior_rewards {
        base.reward_sum += r;
        base.pulls[a] += 1;
        base.reward_totals[a] += r;
        base.t += 1;
    }
    let use_baseline = !prior_rewards.is_empty();
    let mut rng = seeded(41);
    let mut coords: Vec<Moments> = (0..inst.k()).map(|_| Moments::new()).collect();
    let mut norm_sq = Moments::new();
    for _ in 0..SAMPLES {
        let mut s = base.clone();
        gradient_bandit_step(&mut s, inst, eta, use_baseline, &mut rng);
        let mut sq = 0.0;
        for (a, m) in coords.iter_mut().enumerate() {
            let d = s.theta.as_slice()[a] - theta.as_slice()[a];
            m.push(d);
            sq += (d / eta) * (d / eta);
        }
        norm_sq.push(sq);
    }
    (coords, norm_sq)
}

#[test]
fn update_mean_matches_enumerated_gradient() {
    let inst = instance();
    let theta = PolicyParams::new(vec![0.3, -0.4, 1.1, 0.0]).unwrap();
    let eta = 0.1;
    let (coords, norm_sq) = sampled_increments(&theta, &inst, eta, &[]);
    let exact = expected_theta_increment(&theta, &inst, eta, 0.0).unwrap();
    let grad = true_gradient(&softmax(&theta), inst.means()).unwrap();
    for a in 0..inst.k() {
        assert!((exact[a] - eta * grad[a]).abs() < 1e-15);
        assert_within(&format!("coordinate {a}"), &coords[a], exact[a]);
    }
    assert_within("second moment", &norm_sq, exact_second_moment(&theta, &inst, 0.0).unwrap());
}

#[test]
fn baseline_update_matches_enumeration() {
    let inst = instance();
    let theta = PolicyParams::new(vec![-0.2, 0.9, 0.1, -1.5]).unwrap();
    let eta = 0.05;
    let prior = [(0, 1.0), (3, 0.0), (2, 0.4)];
    let b = (1.0 + 0.0 + 0.4) / 3.0;
    let (coords, norm_sq) = sampled_increments(&theta, &inst, eta, &prior);
    let exact = expected_theta_increment(&theta, &inst, eta, b).unwrap();
    let grad = true_gradient(&softmax(&theta), inst.means()).unwrap();
    for a in 0..inst.k() {
        // The baseline changes the noise but not the mean.
        assert!((exact[a] - eta * grad[a]).abs() < 1e-15);
        assert_within(&format!("coordinate {a}"), &coords[a], exact[a]);
    }
    assert_within("second moment", &norm_sq, exact_second_moment(&theta, &inst, b).unwrap());
}

#[test]
fn continuous_noise_has_the_stated_moments() {
    let cases = [
        (RewardDist::Uniform { halfwidth: 0.6 }, 0.36 / 3.0),
        (RewardDist::Gaussian { sigma: 0.5, clip: None }, 0.25),
        (RewardDist::TwoPoint { offset: 0.3 }, 0.09),
    ];
    let mut rng = seeded(3);
    for (dist, var) in cases {
        let mut m = Moments::new();
        let mut v = Moments::new();
        for _ in 0..SAMPLES {
            let x = dist.sample(0.25, &mut rng);
            m.push(x);
            v.push((x - 0.25) * (x - 0.25));
        }
        assert_within(&format!("{dist:?} mean"), &m, 0.25);
        assert_within(&format!("{dist:?} variance"), &v, var);
    }
}
