//! Time spent near a bad initialization before the optimal arm takes over.

use serde::Serialize;

use crate::env::BanditInstance;
use crate::error::{Error, Result};
use crate::learner::{record_times, Init, Learner, LearnerConfig, LearningRate, Thinning, Variant};
use crate::par::{self, Execution};
use crate::rng::seeded;

/// Fraction of `Δ-gap` the mean gap must keep during the initial window.
pub const PLATEAU_GAP_FRACTION: f64 = 0.9;

/// Initial window length is `PLATEAU_WINDOW_SCALE / p*` steps.
pub const PLATEAU_WINDOW_SCALE: f64 = 0.1;

#[derive(Debug, Clone, Serialize)]
pub struct PlateauRow {
    pub p_star: f64,
    /// First step with `π(a*) ≥ threshold` for each seed, `None` if never.
    pub hit_times: Vec<Option<u64>>,
    /// Median over seeds with `∞` for runs that never reach the threshold.
    #[serde(serialize_with = "ser_time")]
    pub median_time: f64,
    pub window: u64,
    /// Smallest mean gap over the first `window` steps.
    pub min_window_gap: f64,
    pub delta_gap: f64,
    /// Record times and the seed-averaged `π(a*)` at each.
    #[serde(skip)]
    pub curve_t: Vec<u64>,
    #[serde(skip)]
    pub curve_pi_star: Vec<f64>,
}

impl PlateauRow {
    pub fn window_gap_holds(&self) -> bool {
        self.min_window_gap >= PLATEAU_GAP_FRACTION * self.delta_gap
    }
}

fn ser_time<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

/// Median with missing values treated as `+∞`.
pub fn median_time(times: &[Option<u64>]) -> f64 {
    let mut v: Vec<f64> = times.iter().map(|t| t.map_or(f64::INFINITY, |x| x as f64)).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        let (a, b) = (v[n / 2 - 1], v[n / 2]);
        if a.is_infinite() || b.is_infinite() {
            f64::INFINITY
        } else {
            0.5 * (a + b)
        }
    }
}

/// Ordered by decreasing `p*`, the median times are strictly increasing.
pub fn medians_increase_as_p_star_decreases(rows: &[PlateauRow]) -> bool {
    let mut v: Vec<(f64, f64)> = rows.iter().map(|r| (r.p_star, r.median_time)).collect();
    v.sort_by(|a, b| b.0.total_cmp(&a.0));
    v.windows(2).all(|w| w[0].1 < w[1].1)
}

struct SeedOutcome {
    hit: Option<u64>,
    window_gaps: Vec<f64>,
    curve: Vec<f64>,
}

fn one_seed(cfg: &LearnerConfig, inst: &BanditInstance, seed: u64, threshold: f64, window: u64, times: &[u64]) -> Result<SeedOutcome> {
    let mut learner = Learner::new(cfg, inst)?;
    let mut rng = seeded(seed);
    let mut hit = None;
    let mut window_gaps = Vec::with_capacity(window as usize);
    let mut curve = Vec::with_capacity(times.len());
    let mut next = times.iter().peekable();
    for t in 1..=cfg.horizon {
        let rec = learner.step(&mut rng);
        if t <= window {
            window_gaps.push(rec.gap);
        }
        if hit.is_none() && rec.pi_star >= threshold {
            hit = Some(t);
        }
        if next.peek() == Some(&&t) {
            curve.push(rec.pi_star);
            next.next();
        }
    }
    Ok(SeedOutcome { hit, window_gaps, curve })
}

/// For each `p*`, run every seed from the adversarial initialization and
/// record the first step with `π(a*) ≥ threshold`.
pub fn plateau_probe(
    inst: &BanditInstance,
    p_star_list: &[f64],
    eta: f64,
    horizon: u64,
    seeds: &[u64],
    threshold: f64,
    exec: Execution,
) -> Result<Vec<PlateauRow>> {
    if seeds.is_empty() {
        return Err(Error::Precondition("plateau probe needs at least one seed".into()));
    }
    let times = record_times(horizon, Thinning::Auto);
    let mut rows = Vec::with_capacity(p_star_list.len());
    for &p_star in p_star_list {
        let cfg = LearnerConfig {
            variant: Variant::GradBandit,
            eta: LearningRate::Constant(eta),
            horizon,
            init: Init::Adversarial { p_star },
            thinning: Thinning::Auto,
        };
        // validates p* before spawning work
        cfg.initial_params(inst)?;
        let window = ((PLATEAU_WINDOW_SCALE / p_star).ceil() as u64).min(horizon);
        let outcomes = par::map_slice(seeds, exec, |&s| one_seed(&cfg, inst, s, threshold, window, &times))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let m = outcomes.len() as f64;
        let mut mean_gap = vec![0.0; window as usize];
        let mut mean_curve = vec![0.0; times.len()];
        for o in &outcomes {
            mean_gap.iter_mut().zip(&o.window_gaps).for_each(|(a, g)| *a += g / m);
            mean_curve.iter_mut().zip(&o.curve).for_each(|(a, p)| *a += p / m);
        }
        let hit_times: Vec<Option<u64>> = outcomes.iter().map(|o| o.hit).collect();
        rows.push(PlateauRow {
            p_star,
            median_time: median_time(&hit_times),
            hit_times,
            window,
            min_window_gap: mean_gap.iter().copied().fold(f64::INFINITY, f64::min),
            delta_gap: inst.delta_gap(),
            curve_t: times.clone(),
            curve_pi_star: mean_curve,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_instance, RewardDist};

    #[test]
    fn median_conventions() {
        assert_eq!(median_time(&[Some(3), Some(1), Some(2)]), 2.0);
        assert_eq!(median_time(&[Some(4), Some(1), Some(2), Some(3)]), 2.5);
        assert_eq!(median_time(&[Some(4), None, None, Some(3)]), f64::INFINITY);
        assert_eq!(median_time(&[Some(4), None, Some(1)]), 4.0);
    }

    #[test]
    fn easy_instance_reaches_threshold() {
        let inst = make_instance(2, vec![1.0, 0.0], vec![RewardDist::Deterministic; 2], 1.0).unwrap();
        let rows = plateau_probe(&inst, &[0.05, 0.01], 0.1, 5000, &[1, 2, 3], 0.5, Execution::default()).unwrap();
        assert!(rows.iter().all(|r| r.median_time.is_finite()));
        assert!(medians_increase_as_p_star_decreases(&rows));
        assert!(rows.iter().all(PlateauRow::window_gap_holds));
        assert_eq!((rows[0].window, rows[1].window), (2, 10));
    }

    #[test]
    fn bad_p_star_rejected() {
        let inst = make_instance(2, vec![1.0, 0.0], vec![RewardDist::Deterministic; 2], 1.0).unwrap();
        assert!(plateau_probe(&inst, &[0.6], 0.1, 100, &[1], 0.5, Execution::default()).is_err());
    }
}
