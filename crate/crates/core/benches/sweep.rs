use criterion::{criterion_group, criterion_main, Criterion};

use rapnet::experiment::{run_sweep, Execution, ParamPoint, ScenarioParams};

fn bench_sweep(c: &mut Criterion) {
    let base = ScenarioParams::default();
    let points: Vec<ParamPoint> = [10, 25, 40]
        .iter()
        .map(|&n| ParamPoint::with_total_agents(&base, n))
        .collect();

    let mut group = c.benchmark_group("sweep_20_reps");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| run_sweep(&points, 20, Execution::Sequential).unwrap())
    });
    group.bench_function("parallel", |b| {
        b.iter(|| run_sweep(&points, 20, Execution::Parallel).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_sweep);
criterion_main!(benches);
