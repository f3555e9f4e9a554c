use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sosarp::experiments::{log_space, run_scan, ScanConfig, ScanKind, DEFAULT_SEED};
use sosarp::par::Execution;

fn config(kind: ScanKind, values: Vec<f64>, execution: Execution) -> ScanConfig {
    ScanConfig {
        kind,
        n: 2,
        p: 3,
        seeds: 4,
        base_seed: DEFAULT_SEED,
        values,
        execution,
    }
}

fn scans(c: &mut Criterion) {
    let mut group = c.benchmark_group("scan");
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    let cases = [
        ("tensor", ScanKind::TensorScale { delta: 1.0 }, vec![1.0, 10.0, 100.0, 1000.0]),
        ("delta", ScanKind::Delta, log_space(1e-3, 1.0, 4)),
    ];
    for (name, kind, values) in cases {
        // Without the feature both variants run the sequential path.
        for (label, exec) in [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)] {
            let cfg = config(kind, values.clone(), exec);
            group.bench_with_input(BenchmarkId::new(name, label), &cfg, |b, cfg| {
                b.iter(|| run_scan(cfg).expect("scan runs"))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, scans);
criterion_main!(benches);
