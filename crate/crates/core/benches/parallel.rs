//! One worker thread against the full pool for the parallel hot spots.
//! Build with `--no-default-features` to time the sequential fallback.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mlcart::cart::{cp_grid, cp_sweep, cross_validate_on, GrowControls, TrainingData};
use mlcart::experiment::{ensure_aggregates, generate_synthetic, run_experiment, ExperimentConfig, ModelName, SyntheticSpec};
use mlcart::par;
use mlcart::preprocess::{select_variable_set, VariableSet};

fn pools() -> Vec<(&'static str, Option<usize>)> {
    vec![("1-thread", Some(1)), ("full-pool", None)]
}

fn training() -> TrainingData {
    let ds = ensure_aggregates(&generate_synthetic(&SyntheticSpec::default()).unwrap().dataset).unwrap();
    let preds = select_variable_set(&ds, VariableSet::IndMetaAgg, &[]).unwrap();
    TrainingData::from_dataset(&ds, &preds).unwrap()
}

fn bench_cv(c: &mut Criterion) {
    let data = training();
    let controls = GrowControls { cp: 0.004, ..GrowControls::default() };
    let grid = cp_grid(0.02, 0.002);
    let mut g = c.benchmark_group("tree");
    g.sample_size(10);
    for (name, jobs) in pools() {
        g.bench_with_input(BenchmarkId::new("cross-validate", name), &jobs, |b, &jobs| {
            b.iter(|| par::with_jobs(jobs, || black_box(cross_validate_on(&data, &controls, false).unwrap())))
        });
        g.bench_with_input(BenchmarkId::new("cp-sweep", name), &jobs, |b, &jobs| {
            b.iter(|| par::with_jobs(jobs, || black_box(cp_sweep(&data, &grid, &controls).unwrap())))
        });
    }
    g.finish();
}

fn bench_experiment(c: &mut Criterion) {
    let ds = generate_synthetic(&SyntheticSpec::default()).unwrap().dataset;
    let config = ExperimentConfig {
        repetitions: 8,
        roster: vec![ModelName::TreeIndMetaAgg, ModelName::GlmIndMeta, ModelName::GlmmEdu],
        ..ExperimentConfig::default()
    };
    let mut g = c.benchmark_group("experiment");
    g.sample_size(10);
    for (name, jobs) in pools() {
        g.bench_with_input(BenchmarkId::new("8-repetitions", name), &jobs, |b, &jobs| {
            b.iter(|| par::with_jobs(jobs, || black_box(run_experiment(&ds, &config).unwrap())))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_cv, bench_experiment);
criterion_main!(benches);
