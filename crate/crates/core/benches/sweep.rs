//! Sequential vs parallel execution on the three data-parallel workloads.
//! Build with `--no-default-features` to compare against a rayon-free binary.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use poa_core::ar_simulator::{generate_series, ArConfig};
use poa_core::demand_models::HalfNormalDemand;
use poa_core::generalized_model::NewsvendorModel;
use poa_core::solver::{stackelberg_oracle, ChainConfig};
use poa_core::sweep::{linspace, sweep};
use poa_core::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench_sweep(c: &mut Criterion) {
    let model = NewsvendorModel::new(HalfNormalDemand::new(1.0).unwrap());
    let rs = linspace(0.01, 0.99, 400);
    let mut group = c.benchmark_group("r_sweep_400");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sweep(black_box(&model), ChainConfig::PullRetailerLeader, &rs, exec))
        });
    }
    group.finish();
}

fn bench_ar(c: &mut Criterion) {
    let config = ArConfig {
        n_samples: 200_000,
        ..ArConfig::default()
    };
    let mut group = c.benchmark_group("ar_series_200k");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| generate_series(black_box(&config), exec).unwrap()));
    }
    group.finish();
}

fn bench_stackelberg(c: &mut Criterion) {
    let model = NewsvendorModel::new(HalfNormalDemand::new(1.0).unwrap());
    let mut group = c.benchmark_group("stackelberg_oracle");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| stackelberg_oracle(black_box(&model), 0.5, ChainConfig::PushManufacturerLeader, 200, 2000, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_sweep, bench_ar, bench_stackelberg);
criterion_main!(benches);
