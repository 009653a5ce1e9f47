use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Multiplicative slack granted to the right-hand side of every inequality.
pub const RELATIVE_TOLERANCE: f64 = 1e-10;

/// Outcome of checking one inequality `lhs ≤ rhs` over many trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub probe_name: String,
    pub trials: u64,
    pub violations: u64,
    /// Minimum of `rhs - lhs` over all trials.
    pub worst_slack: f64,
    /// Largest `lhs / rhs` seen with `rhs > 0`.
    pub max_ratio: f64,
    /// The trial with the smallest slack.
    pub worst_case: Option<Value>,
}

impl ProbeReport {
    pub fn new(name: impl Into<String>) -> Self {
        ProbeReport {
            probe_name: name.into(),
            trials: 0,
            violations: 0,
            worst_slack: f64::INFINITY,
            max_ratio: 0.0,
            worst_case: None,
        }
    }

    /// Whether `lhs ≤ rhs` holds within the tolerance.
    pub fn holds(lhs: f64, rhs: f64) -> bool {
        lhs <= rhs + RELATIVE_TOLERANCE * rhs.abs()
    }

    /// Record one trial of `lhs ≤ rhs`. `case` is only evaluated when the
    /// trial becomes the new tightest one.
    pub fn observe(&mut self, lhs: f64, rhs: f64, case: impl FnOnce() -> Value) {
        self.trials += 1;
        let ok = !lhs.is_nan() && !rhs.is_nan() && Self::holds(lhs, rhs);
        if !ok {
            self.violations += 1;
        }
        if rhs > 0.0 {
            self.max_ratio = self.max_ratio.max(lhs / rhs);
        }
        let slack = match rhs - lhs {
            s if s.is_nan() => f64::NEG_INFINITY,
            s => s,
        };
        if slack < self.worst_slack || self.worst_case.is_none() {
            self.worst_slack = slack;
            self.worst_case = Some(case());
        }
    }

    /// Combine two reports for the same probe.
    pub fn merge(&mut self, other: ProbeReport) {
        self.trials += other.trials;
        self.violations += other.violations;
        self.max_ratio = self.max_ratio.max(other.max_ratio);
        if other.worst_slack < self.worst_slack || self.worst_case.is_none() {
            self.worst_slack = other.worst_slack;
            self.worst_case = other.worst_case;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Merge per-trial report lists position by position.
pub fn merge_all(batches: Vec<Vec<ProbeReport>>) -> Vec<ProbeReport> {
    let mut iter = batches.into_iter();
    let Some(mut acc) = iter.next() else {
        return Vec::new();
    };
    for batch in iter {
        for (a, b) in acc.iter_mut().zip(batch) {
            a.merge(b);
        }
    }
    acc
}
