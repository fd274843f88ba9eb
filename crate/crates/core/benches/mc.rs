//! Benchmarks the Monte Carlo path engine: rayon-parallel panel evaluation
//! against the sequential fallback, and the single-path simulator.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use runway_capex::cost::{CapacitySpec, CostParams};
use runway_capex::demand::DemandParams;
use runway_capex::mc::{mc_panel, mc_panel_seq, simulate_path, SimConfig};

fn bench_panel(c: &mut Criterion) {
    let cost = CostParams::default();
    let demand = DemandParams::default();
    let capacity = CapacitySpec::default();
    let points = [(5.0, 40.0), (10.0, 40.0), (20.0, 80.0), (50.0, 80.0)];
    let mut group = c.benchmark_group("mc_panel");
    group.sample_size(10);
    for n_paths in [200u64, 1_000] {
        let cfg = SimConfig {
            dt: 0.01,
            horizon: 100.0,
            n_paths,
            seed: 42,
        };
        group.bench_with_input(BenchmarkId::new("parallel", n_paths), &cfg, |b, cfg| {
            b.iter(|| mc_panel(&points, &cost, &demand, &capacity, cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", n_paths), &cfg, |b, cfg| {
            b.iter(|| mc_panel_seq(&points, &cost, &demand, &capacity, cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_single_path(c: &mut Criterion) {
    let demand = DemandParams::default();
    let cfg = SimConfig {
        dt: 1.0 / 250.0,
        horizon: 200.0,
        n_paths: 1,
        seed: 42,
    };
    c.bench_function("simulate_path_50k_steps", |b| {
        b.iter(|| simulate_path(&demand, 10.0, &cfg, 0).unwrap())
    });
}

criterion_group!(benches, bench_panel, bench_single_path);
criterion_main!(benches);
