use criterion::{criterion_group, criterion_main, Criterion};
use fsi_rebound::acceptance::canonical_shell;
use fsi_rebound::experiments::{run_sweep_with, Execution, SweepConfig, DEFAULT_MU_VALUES};
use fsi_rebound::integrator::IntegratorSettings;
use std::hint::black_box;

fn sweep(c: &mut Criterion) {
    let settings = IntegratorSettings::default();
    let mut group = c.benchmark_group("default_sweep");
    group.sample_size(10);
    for (name, c2) in [("deformable", 20.0), ("rigid_shell", 0.0)] {
        let cfg = SweepConfig::new(canonical_shell(c2), DEFAULT_MU_VALUES.to_vec());
        for (label, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_function(format!("{name}/{label}"), |b| {
                b.iter(|| run_sweep_with(black_box(&cfg), &settings, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
