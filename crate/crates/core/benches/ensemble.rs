//! Sequential against data-parallel execution of the two hot loops: ensemble
//! sampling and a modulation sweep. Built without the `parallel` feature
//! both variants run on one thread.

use beable_core::mechanism::{sweep, SweepConfig};
use beable_core::sampler::{sample_ensemble, EnsembleConfig, RateSchedule};
use beable_core::{propagate, ControlField, LevelSystem, QuantumState, Workers};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn drive() -> (LevelSystem, ControlField) {
    let sys = LevelSystem::seven_level_example();
    let freqs: Vec<f64> = sys.edges().iter().map(|&(n, m)| sys.transition(n, m).abs()).collect();
    let field = ControlField::from_fn(0.025, 4000, |t| {
        let envelope = (std::f64::consts::PI * t / 100.0).sin().powi(2);
        envelope * freqs.iter().enumerate().map(|(k, w)| 0.8 * (w * t + k as f64).cos()).sum::<f64>()
    })
    .expect("valid field");
    (sys, field)
}

fn bench_ensemble(c: &mut Criterion) {
    let (sys, field) = drive();
    let prop = propagate(&sys, &field, &QuantumState::basis(sys.count, 0)).expect("propagation");
    let schedule = RateSchedule::new(&sys, &field, &prop, 1, Workers::available()).expect("schedule");
    let cfg = EnsembleConfig::new(5_000, 1, 0);
    let mut group = c.benchmark_group("sample_ensemble_5k");
    group.sample_size(10);
    for (name, workers) in [("sequential", Workers::sequential()), ("parallel", Workers::available())] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &workers, |b, &w| {
            b.iter(|| sample_ensemble(&schedule, &prop, &cfg, w).expect("sampling"))
        });
    }
    group.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let (sys, field) = drive();
    let initial = QuantumState::basis(sys.count, 0);
    let cfg = SweepConfig::standard(0.1, 1);
    let mut group = c.benchmark_group("modulation_sweep_160");
    group.sample_size(10);
    for (name, workers) in [("sequential", Workers::sequential()), ("parallel", Workers::available())] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &workers, |b, &w| {
            b.iter(|| sweep(&sys, &field, &initial, 6, &cfg, w).expect("sweep"))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_ensemble, bench_sweep);
criterion_main!(benches);
