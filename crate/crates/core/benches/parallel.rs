//! Sequential against parallel execution for the probe fuzzer and seed grids.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sgb_core::experiments::{run_convergence, ExperimentConfig, ExperimentKind};
use sgb_core::par::Execution;
use sgb_core::probes::{run_probe, Probe};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn probe_fuzz(c: &mut Criterion) {
    let mut g = c.benchmark_group("strong_growth_fuzz_4096");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(run_probe(Probe::StrongGrowth, Some(4096), 3, exec).unwrap()))
        });
    }
    g.finish();
}

fn seed_grid(c: &mut Criterion) {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Convergence);
    cfg.horizon = 20_000;
    let (inst, _) = cfg.instance.resolve().unwrap();
    let lc = cfg.learner.config(cfg.horizon);
    let seeds: Vec<u64> = (0..8).collect();
    let mut g = c.benchmark_group("convergence_8_seeds_t20000");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(run_convergence(&lc, &inst, &seeds, exec).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, probe_fuzz, seed_grid);
criterion_main!(benches);
