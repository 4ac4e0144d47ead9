use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cutcell::cutter::{cut_serial, CutParams, PreparedSurface};
use cutcell::pipeline::background_for;
use cutcell::{pipeline, shapes, ExecPolicy, Mode, RunConfig};

fn cutting(c: &mut Criterion) {
    let surface = shapes::icosphere(4);
    let prepared = PreparedSurface::new(&surface, 1e-6);
    let params = CutParams::default();
    let mut group = c.benchmark_group("cut_serial");
    group.sample_size(10);
    for n in [16, 32] {
        let mesh = background_for(
            &surface,
            &RunConfig {
                cells: [n; 3],
                ..RunConfig::default()
            },
        )
        .unwrap();
        for policy in [ExecPolicy::Sequential, ExecPolicy::Parallel] {
            group.bench_with_input(BenchmarkId::new(format!("{policy:?}"), n), &mesh, |b, mesh| {
                b.iter(|| cut_serial(mesh, &prepared, &params, policy).unwrap())
            });
        }
    }
    group.finish();

    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    for (mode, parts) in [(Mode::Serial, [1; 3]), (Mode::Simulated, [2; 3])] {
        for policy in [ExecPolicy::Sequential, ExecPolicy::Parallel] {
            let config = RunConfig {
                cells: [24; 3],
                parts,
                mode,
                policy,
                ..RunConfig::default()
            };
            group.bench_function(format!("{mode:?}/{policy:?}"), |b| {
                b.iter(|| pipeline::run(&surface, &config).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, cutting);
criterion_main!(benches);
