//! Desk-scale experiments: simplex scans, convergence and regret curves,
//! plateaus under bad initialization, and the Boltzmann counterexample.
//!
//! Every output is a pure function of the config and the seeds.

pub mod analysis;
pub mod boltzmann;
pub mod config;
pub mod convergence;
pub mod output;
pub mod plateau;
pub mod presets;
pub mod scan;

use std::path::Path;

use serde_json::{json, Value};

use crate::env::BanditInstance;
use crate::error::Result;
use crate::learner::{LearningRate, TRAJECTORY_CSV_HEADER};
use crate::par::Execution;

pub use analysis::{avg_grad_norm_series, fit_log_slope, regret_series, SlopeFit};
pub use boltzmann::{boltzmann_comparison, BoltzmannComparison};
pub use config::{ExperimentConfig, ExperimentKind};
pub use convergence::{run_convergence, summarize, ConvergenceResult, ConvergenceSummary, MeanCurve};
pub use output::{line_plot_svg, Axes, Series};
pub use plateau::{plateau_probe, PlateauRow};
pub use presets::Figure;
pub use scan::{simplex_scan, ScanRow};

/// Files written by one experiment and its summary.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub summary: Value,
    pub files: Vec<String>,
}

struct Sink<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Sink<'_> {
    fn put(&mut self, name: &str, contents: &str) -> Result<()> {
        output::write_file(self.dir, name, contents)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(v)?;
        text.push('\n');
        self.put(name, &text)
    }
}

fn instance_json(inst: &BanditInstance, drawn_from: Option<u64>) -> Result<Value> {
    let mut v = serde_json::to_value(inst)?;
    if let (Value::Object(m), Some(seed)) = (&mut v, drawn_from) {
        m.insert("drawn_from_seed".into(), json!(seed));
    }
    Ok(v)
}

fn trajectory_csv(run: &convergence::SeedRun) -> Result<String> {
    let mut buf = Vec::new();
    run.trajectory.write_csv(&mut buf)?;
    debug_assert!(buf.starts_with(TRAJECTORY_CSV_HEADER.as_bytes()));
    Ok(String::from_utf8(buf).expect("ascii csv"))
}

/// Run the experiment described by `cfg` with the resolved `seeds`, writing
/// every artifact into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, seeds: &[u64], out: &Path, exec: Execution) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let mut sink = Sink { dir: out, files: Vec::new() };
    let axes = Axes { log_x: cfg.plot.log_x, log_y: cfg.plot.log_y };
    let summary = match cfg.kind {
        ExperimentKind::SimplexScan => {
            let rows = simplex_scan(cfg.scan.r, cfg.scan.resolution)?;
            sink.put("scan.csv", &output::scan_csv(&rows))?;
            let r = cfg.scan.r;
            let r_max = r.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let mut sorted = r;
            sorted.sort_by(f64::total_cmp);
            let delta = (sorted[1] - sorted[0]).min(sorted[2] - sorted[1]);
            let floor = delta * delta / (2.0 * r_max * 3f64.powf(1.5));
            let min_ratio = rows.iter().map(|x| x.ratio).fold(f64::INFINITY, f64::min);
            let max_corner = rows
                .iter()
                .filter(|x| x.pi.iter().any(|p| *p > 1.0 - 3.0 * scan::SIMPLEX_MARGIN))
                .map(|x| x.stoch_scale)
                .fold(0.0, f64::max);
            json!({
                "kind": cfg.kind,
                "r": r,
                "points": rows.len(),
                "min_ratio": min_ratio,
                "ratio_floor": floor,
                "corner_stoch_scale": max_corner,
            })
        }
        ExperimentKind::Convergence | ExperimentKind::GradNorm | ExperimentKind::Regret => {
            let (inst, drawn) = cfg.instance.resolve()?;
            sink.json("instance.json", &instance_json(&inst, drawn)?)?;
            let lc = cfg.learner.config(cfg.horizon);
            let res = run_convergence(&lc, &inst, seeds, exec)?;
            for run in &res.runs {
                sink.put(&format!("trajectory_seed_{}.csv", run.seed), &trajectory_csv(run)?)?;
            }
            sink.put("mean_curve.csv", &output::mean_curve_csv(&res.mean))?;
            if cfg.plot.svg {
                let m = &res.mean;
                let plots = [
                    ("mean_gap.svg", "Mean sub-optimality gap", "gap", m.gap_series()),
                    ("mean_pi_star.svg", "Mean probability of the optimal arm", "pi(a*)", m.pi_star_series()),
                    ("avg_grad_norm_sq.svg", "Average squared gradient norm", "avg |g|^2", m.grad_norm_series()),
                    ("regret.svg", "Mean cumulative regret", "regret", m.regret_series()),
                ];
                for (file, title, y, pts) in plots {
                    sink.put(file, &line_plot_svg(title, "t", y, &[Series::new("mean", pts)], axes))?;
                }
            }
            let s = summarize(&res, inst.r_max(), cfg.analysis.slope_window)?;
            json!({ "kind": cfg.kind, "instance": instance_json(&inst, drawn)?, "convergence": s })
        }
        ExperimentKind::Plateau => {
            let (inst, drawn) = cfg.instance.resolve()?;
            sink.json("instance.json", &instance_json(&inst, drawn)?)?;
            let eta = cfg.learner.config(cfg.horizon).resolve_eta(&inst)?;
            let rows = plateau_probe(&inst, &cfg.plateau.p_star, eta, cfg.horizon, seeds, cfg.plateau.threshold, exec)?;
            sink.put("plateau.csv", &output::plateau_csv(&rows))?;
            if cfg.plot.svg {
                let series: Vec<Series> = rows
                    .iter()
                    .map(|r| {
                        let pts = r.curve_t.iter().zip(&r.curve_pi_star).map(|(&t, &p)| (t as f64, p)).collect();
                        Series::new(format!("p* = {}", r.p_star), pts)
                    })
                    .collect();
                let plot_axes = Axes { log_x: axes.log_x, log_y: false };
                sink.put("plateau_pi_star.svg", &line_plot_svg("Mean probability of the optimal arm", "t", "pi(a*)", &series, plot_axes))?;
            }
            let increasing = plateau::medians_increase_as_p_star_decreases(&rows);
            json!({
                "kind": cfg.kind,
                "eta": eta,
                "threshold": cfg.plateau.threshold,
                "rows": rows,
                "median_increases_as_p_star_decreases": increasing,
                "window_gap_holds": rows.iter().all(PlateauRow::window_gap_holds),
            })
        }
        ExperimentKind::BoltzmannWrong => {
            let (inst, drawn) = cfg.instance.resolve()?;
            sink.json("instance.json", &instance_json(&inst, drawn)?)?;
            let eta = match cfg.learner.eta {
                LearningRate::Constant(v) => v,
                LearningRate::Theoretical => crate::learner::theoretical_eta(&inst)?,
            };
            let cmp = boltzmann_comparison(&inst, cfg.horizon, seeds, cfg.boltzmann.c, eta, exec)?;
            sink.put("boltzmann.csv", &output::boltzmann_csv(&cmp))?;
            if cfg.plot.svg {
                let series = [
                    Series::new("Boltzmann on empirical means", cmp.boltzmann_curve.regret_series()),
                    Series::new("gradient bandit", cmp.gradient_curve.regret_series()),
                ];
                sink.put("boltzmann_regret.svg", &line_plot_svg("Mean cumulative regret", "t", "regret", &series, axes))?;
            }
            let b = &cfg.boltzmann;
            json!({
                "kind": cfg.kind,
                "eta": eta,
                "c": b.c,
                "comparison": cmp,
                "linear_fraction": b.linear_fraction,
                "sublinear_fraction": b.sublinear_fraction,
                "boltzmann_linear_seeds": cmp.linear_count(b.linear_fraction),
                "gradient_sublinear_seeds": cmp.sublinear_count(b.sublinear_fraction),
            })
        }
    };
    sink.json("summary.json", &summary)?;
    Ok(ExperimentOutcome { summary, files: sink.files })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::RewardDist;

    fn read_all(dir: &Path, files: &[String]) -> Vec<Vec<u8>> {
        files.iter().map(|f| std::fs::read(dir.join(f)).unwrap()).collect()
    }

    #[test]
    fn outputs_are_reproducible() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Convergence);
        cfg.horizon = 3000;
        cfg.instance.k = 4;
        cfg.instance.reward = RewardDist::TwoPoint { offset: 0.0 };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let oa = run_experiment(&cfg, &[1, 2], a.path(), Execution::Parallel).unwrap();
        let ob = run_experiment(&cfg, &[1, 2], b.path(), Execution::Sequential).unwrap();
        assert_eq!(oa.files, ob.files);
        assert_eq!(read_all(a.path(), &oa.files), read_all(b.path(), &ob.files));
        assert!(oa.files.contains(&"mean_curve.csv".to_string()));
    }

    #[test]
    fn every_kind_runs() {
        for kind in [
            ExperimentKind::SimplexScan,
            ExperimentKind::Plateau,
            ExperimentKind::Regret,
            ExperimentKind::BoltzmannWrong,
        ] {
            let mut cfg = ExperimentConfig::new(kind);
            cfg.horizon = 500;
            cfg.scan.resolution = 12;
            if kind == ExperimentKind::BoltzmannWrong {
                cfg.instance.k = 2;
                cfg.instance.means = Some(vec![1.0, 0.5]);
                cfg.instance.reward = RewardDist::TwoPoint { offset: 0.0 };
            }
            let dir = tempfile::tempdir().unwrap();
            let out = run_experiment(&cfg, &[5], dir.path(), Execution::default()).unwrap();
            assert!(out.files.contains(&"summary.json".to_string()));
        }
    }
}
