//! `sgb`: probe suite, experiments and figures from the command line.
//!
//! Exit codes: 0 on success, 1 when a probe reports violations, 2 on usage or
//! configuration errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use sgb_core::env::{make_instance, RewardDist};
use sgb_core::experiments::{self, ExperimentConfig, Figure};
use sgb_core::learner::LearningRate;
use sgb_core::par::{self, Execution};
use sgb_core::policy::PolicyParams;
use sgb_core::probes::{self, ConcentrationSpec, Family, Probe, ProbeReport};
use sgb_core::rng::derive_seed;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const DEFAULT_SEED_COUNT: usize = 10;
const COVERAGE_DELTAS: [f64; 3] = [0.01, 0.05, 0.2];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("invalid config at {pointer}: {message}")]
    Schema { pointer: String, message: String },

    #[error(transparent)]
    Core(#[from] sgb_core::Error),

    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        EXIT_USAGE
    }
}

#[derive(Debug, Parser)]
#[command(name = "sgb", version, about = "Stochastic gradient bandit experiments and inequality probes")]
pub struct Cli {
    /// Worker threads (default: all available cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Base seed; falls back to SGB_SEED.
    #[arg(long, env = "SGB_SEED")]
    pub seed: Option<u64>,

    /// Output directory, created if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Overrides {
    /// Horizon.
    #[arg(long = "t")]
    pub horizon: Option<u64>,

    /// Number of runs, seeded from --seed.
    #[arg(long)]
    pub seeds: Option<usize>,

    /// Constant learning rate.
    #[arg(long)]
    pub eta: Option<f64>,

    /// Number of arms.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run inequality probes: `all` or one probe name.
    Probe {
        name: String,
        /// Trials per probe instead of the per-probe defaults.
        #[arg(long)]
        trials: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Reproduce one figure with its default configuration.
    Figure {
        #[arg(value_enum)]
        which: FigureArg,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Concentration checks.
    Conc {
        #[command(subcommand)]
        what: ConcCommand,
    },
    /// Simplex scan of gradient scales for three arms.
    Scan {
        /// Optional config with a `scan` section.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ConcCommand {
    /// Uniform-in-time coverage of the martingale bound.
    Coverage {
        /// Sequence length.
        #[arg(long = "t", default_value_t = 1000)]
        length: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Confidence level; all of 0.01, 0.05 and 0.2 when absent.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, value_enum, default_value_t = FamilyArg::FairCoin)]
        family: FamilyArg,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureArg {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Regret,
    Boltzmann,
}

impl From<FigureArg> for Figure {
    fn from(f: FigureArg) -> Figure {
        match f {
            FigureArg::Fig1 => Figure::Fig1,
            FigureArg::Fig2 => Figure::Fig2,
            FigureArg::Fig3 => Figure::Fig3,
            FigureArg::Fig4 => Figure::Fig4,
            FigureArg::Regret => Figure::Regret,
            FigureArg::Boltzmann => Figure::Boltzmann,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyArg {
    FairCoin,
    /// Indicator-weighted rewards along a gradient bandit run on a 3-arm instance.
    PolicyNoise,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    /// Arguments after the program name.
    argv: &'a [String],
    subcommand: &'a str,
    seed: Option<u64>,
    seeds: Option<&'a [u64]>,
    config: Value,
    files: Vec<String>,
    exit_code: i32,
}

fn pointer_from_path(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Parse and validate a config file. Unknown keys and out-of-range values are
/// reported with the JSON pointer of the offending field.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| CliError::Schema {
        pointer: pointer_from_path(e.path()),
        message: e.inner().to_string(),
    })?;
    cfg.validate().map_err(schema_or_core)?;
    Ok(cfg)
}

fn schema_or_core(e: sgb_core::Error) -> CliError {
    match e {
        sgb_core::Error::Schema { pointer, message } => CliError::Schema { pointer, message },
        other => CliError::Core(other),
    }
}

fn apply_overrides(cfg: &mut ExperimentConfig, o: &Overrides) -> Result<(), CliError> {
    if let Some(t) = o.horizon {
        cfg.horizon = t;
    }
    if let Some(eta) = o.eta {
        cfg.learner.eta = LearningRate::Constant(eta);
    }
    if let Some(k) = o.k {
        if cfg.instance.means.is_some() && k != cfg.instance.k {
            return Err(CliError::Usage(format!("--k {k} conflicts with the {} listed means", cfg.instance.k)));
        }
        cfg.instance.k = k;
    }
    if o.seeds.is_some() {
        cfg.seeds = None;
    }
    cfg.validate().map_err(|e| match e {
        sgb_core::Error::Schema { pointer, message } => {
            let flag = match pointer.as_str() {
                "/horizon" => "--t",
                "/learner/eta" => "--eta",
                "/instance/k" => "--k",
                _ => return CliError::Schema { pointer, message },
            };
            CliError::Usage(format!("{flag}: {message}"))
        }
        other => CliError::Core(other),
    })
}

fn require_seed(common: &Common) -> Result<u64, CliError> {
    common
        .seed
        .ok_or_else(|| CliError::Usage("--seed (or SGB_SEED) is required for this subcommand".into()))
}

fn out_dir(common_out: &Option<PathBuf>, cfg_out: Option<&str>) -> PathBuf {
    common_out
        .clone()
        .or_else(|| cfg_out.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn write_text(dir: &Path, name: &str, text: &str, files: &mut Vec<String>) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), text)?;
    files.push(name.to_string());
    Ok(())
}

struct Ctx<'a> {
    argv: &'a [String],
    exec: Execution,
}

impl Ctx<'_> {
    #[allow(clippy::too_many_arguments)]
    fn manifest(
        &self,
        dir: &Path,
        subcommand: &str,
        seed: Option<u64>,
        seeds: Option<&[u64]>,
        config: Value,
        mut files: Vec<String>,
        exit_code: i32,
    ) -> Result<i32, CliError> {
        files.push("manifest.json".into());
        let m = Manifest {
            tool: "sgb",
            version: env!("CARGO_PKG_VERSION"),
            argv: self.argv.get(1..).unwrap_or_default(),
            subcommand,
            seed,
            seeds,
            config,
            files,
            exit_code,
        };
        let mut text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        text.push('\n');
        fs::create_dir_all(dir)?;
        fs::write(dir.join("manifest.json"), text)?;
        Ok(exit_code)
    }
}

fn print_probe_table(reports: &[ProbeReport]) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{:<32} {:>9} {:>10} {:>14} {:>10}  status", "probe", "trials", "violations", "worst_slack", "max_ratio");
    for r in reports {
        let _ = writeln!(
            out,
            "{:<32} {:>9} {:>10} {:>14.6e} {:>10.6}  {}",
            r.probe_name,
            r.trials,
            r.violations,
            r.worst_slack,
            r.max_ratio,
            if r.passed() { "ok" } else { "VIOLATED" }
        );
    }
}

/// 0 when every report is clean, 1 otherwise.
pub fn probe_exit_code(reports: &[ProbeReport]) -> i32 {
    if reports.iter().all(ProbeReport::passed) {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    }
}

fn cmd_probe(ctx: &Ctx, name: &str, trials: Option<u64>, common: &Common) -> Result<i32, CliError> {
    let seed = require_seed(common)?;
    let reports = if name == "all" {
        probes::run_all(trials, seed, ctx.exec)?
    } else {
        let probe = Probe::from_name(name).ok_or_else(|| {
            let names: Vec<&str> = Probe::ALL.iter().map(|p| p.name()).collect();
            CliError::Usage(format!("unknown probe '{name}'; expected all or one of {}", names.join(", ")))
        })?;
        probes::run_probe(probe, trials, seed, ctx.exec)?
    };
    print_probe_table(&reports);
    let dir = out_dir(&common.out, None);
    let mut files = Vec::new();
    let mut text = serde_json::to_string_pretty(&reports).expect("reports serialize");
    text.push('\n');
    write_text(&dir, "probe_reports.json", &text, &mut files)?;
    let code = probe_exit_code(&reports);
    ctx.manifest(&dir, "probe", Some(seed), None, json!({ "probe": name, "trials": trials }), files, code)
}

fn run_config(ctx: &Ctx, subcommand: &str, cfg: ExperimentConfig, common: &Common, count: usize) -> Result<i32, CliError> {
    let (seed, seeds) = if cfg.kind.is_stochastic() {
        let seed = match (&cfg.seeds, common.seed) {
            (Some(_), s) => s,
            (None, s) => Some(s.ok_or_else(|| {
                CliError::Usage("--seed (or SGB_SEED) is required for this subcommand".into())
            })?),
        };
        (seed, cfg.resolve_seeds(seed, count)?)
    } else {
        (common.seed, Vec::new())
    };
    let dir = out_dir(&common.out, cfg.output.as_deref());
    let outcome = experiments::run_experiment(&cfg, &seeds, &dir, ctx.exec).map_err(schema_or_core)?;
    println!("{}", serde_json::to_string_pretty(&outcome.summary).expect("summary serializes"));
    let config = serde_json::to_value(&cfg).expect("config serializes");
    let seeds_ref = if seeds.is_empty() { None } else { Some(seeds.as_slice()) };
    ctx.manifest(&dir, subcommand, seed, seeds_ref, config, outcome.files, EXIT_OK)
}

fn cmd_conc(ctx: &Ctx, length: u64, trials: u64, delta: Option<f64>, family: FamilyArg, common: &Common) -> Result<i32, CliError> {
    let seed = require_seed(common)?;
    let deltas: Vec<f64> = delta.map_or(COVERAGE_DELTAS.to_vec(), |d| vec![d]);
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
        return Err(CliError::Usage(format!("--delta: must lie in (0, 1), got {d}")));
    }
    if length == 0 {
        return Err(CliError::Usage("--t: sequence length must be at least 1".into()));
    }
    let fam = match family {
        FamilyArg::FairCoin => Family::FairCoin,
        FamilyArg::PolicyNoise => Family::PolicyNoise {
            inst: make_instance(3, vec![0.9, 0.5, 0.1], vec![RewardDist::TwoPoint { offset: 0.1 }; 3], 1.0)?,
            theta1: PolicyParams::zeros(3),
            eta: 0.1,
            arm: 0,
        },
    };
    let mut csv = String::from("delta,trials,violations,fraction,max_ratio\n");
    let mut rows = Vec::new();
    let mut code = EXIT_OK;
    for (i, d) in deltas.iter().enumerate() {
        let spec = ConcentrationSpec { length, trials, delta: *d, family: fam.clone() };
        let cov = probes::coverage_test(&spec, derive_seed(seed, i as u64), ctx.exec)?;
        if cov.fraction > *d {
            code = EXIT_VIOLATION;
        }
        println!(
            "delta={d} trials={} violations={} fraction={} max_ratio={:.6}",
            cov.trials, cov.violations, cov.fraction, cov.max_ratio
        );
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            sgb_core::learner::fmt_f64(*d),
            cov.trials,
            cov.violations,
            sgb_core::learner::fmt_f64(cov.fraction),
            sgb_core::learner::fmt_f64(cov.max_ratio)
        ));
        rows.push(json!({ "delta": d, "coverage": cov }));
    }
    let dir = out_dir(&common.out, None);
    let mut files = Vec::new();
    write_text(&dir, "coverage.csv", &csv, &mut files)?;
    let mut text = serde_json::to_string_pretty(&rows).expect("rows serialize");
    text.push('\n');
    write_text(&dir, "coverage.json", &text, &mut files)?;
    let config = json!({ "length": length, "trials": trials, "deltas": deltas, "family": family });
    ctx.manifest(&dir, "conc coverage", Some(seed), None, config, files, code)
}

fn dispatch(cli: Cli, argv: &[String]) -> Result<i32, CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        par::set_jobs(jobs);
    }
    let ctx = Ctx { argv, exec: Execution::Parallel };
    match cli.command {
        Command::Probe { name, trials, common } => cmd_probe(&ctx, &name, trials, &common),
        Command::Run { config, common, overrides } => {
            let mut cfg = load_config(&config)?;
            apply_overrides(&mut cfg, &overrides)?;
            let count = overrides.seeds.unwrap_or(DEFAULT_SEED_COUNT);
            run_config(&ctx, "run", cfg, &common, count)
        }
        Command::Figure { which, common, overrides } => {
            let fig = Figure::from(which);
            let mut cfg = fig.config();
            apply_overrides(&mut cfg, &overrides)?;
            let count = overrides.seeds.unwrap_or(fig.default_seed_count());
            run_config(&ctx, &format!("figure {}", fig.name()), cfg, &common, count)
        }
        Command::Conc { what: ConcCommand::Coverage { length, trials, delta, family, common } } => {
            cmd_conc(&ctx, length, trials, delta, family, &common)
        }
        Command::Scan { config, out } => {
            let cfg = match config {
                Some(p) => {
                    let mut c = load_config(&p)?;
                    c.kind = experiments::ExperimentKind::SimplexScan;
                    c
                }
                None => Figure::Fig1.config(),
            };
            run_config(&ctx, "scan", cfg, &Common { seed: None, out }, 0)
        }
    }
}

/// Parse `argv` (including the program name), run the subcommand and return
/// the process exit code. Errors are reported on standard error.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli, &argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn load_config_reports_pointers() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.json", r#"{"kind": "convergence", "instance": {"k": 1}}"#);
        match load_config(&p) {
            Err(CliError::Schema { pointer, .. }) => assert_eq!(pointer, "/instance/k"),
            other => panic!("{other:?}"),
        }
        let p = write(dir.path(), "b.json", r#"{"kind": "convergence", "learner": {"eta": "fast"}}"#);
        match load_config(&p) {
            Err(CliError::Schema { pointer, .. }) => assert_eq!(pointer, "/learner/eta"),
            other => panic!("{other:?}"),
        }
        let p = write(dir.path(), "c.json", r#"{"kind": "convergence", "instance": {"sigma": 1}}"#);
        match load_config(&p) {
            Err(CliError::Schema { pointer, message }) => {
                assert!(pointer.starts_with("/instance"), "{pointer}");
                assert!(message.contains("sigma"));
            }
            other => panic!("{other:?}"),
        }
        let p = write(dir.path(), "d.json", r#"{"kind": "convergence"}"#);
        let cfg = load_config(&p).unwrap();
        assert_eq!(cfg.learner.eta, LearningRate::Constant(0.01));
        let p = write(dir.path(), "e.json", r#"{"kind": "convergence", "learner": {"eta": "theoretical"}}"#);
        assert_eq!(load_config(&p).unwrap().learner.eta, LearningRate::Theoretical);
        assert!(matches!(load_config(&dir.path().join("missing.json")), Err(CliError::Usage(_))));
    }

    #[test]
    fn violations_exit_1() {
        let mut clean = ProbeReport::new("nl");
        clean.observe(0.5, 1.0, || Value::Null);
        assert_eq!(probe_exit_code(&[clean.clone()]), EXIT_OK);
        let mut bad = ProbeReport::new("nl");
        bad.observe(2.0, 1.0, || Value::Null);
        assert_eq!(probe_exit_code(&[clean, bad]), EXIT_VIOLATION);
    }

    #[test]
    fn overrides_apply_last() {
        let mut cfg = Figure::Fig3.config();
        let o = Overrides { horizon: Some(1000), seeds: Some(3), eta: Some(0.1), k: Some(4) };
        apply_overrides(&mut cfg, &o).unwrap();
        assert_eq!((cfg.horizon, cfg.instance.k), (1000, 4));
        assert_eq!(cfg.learner.eta, LearningRate::Constant(0.1));
        let bad = Overrides { horizon: Some(5), seeds: None, eta: None, k: None };
        match apply_overrides(&mut cfg, &bad) {
            Err(CliError::Usage(m)) => assert!(m.starts_with("--t")),
            other => panic!("{other:?}"),
        }
        let mut plateau = Figure::Fig2.config();
        let k = Overrides { horizon: None, seeds: None, eta: None, k: Some(3) };
        assert!(apply_overrides(&mut plateau, &k).is_err());
    }
}
