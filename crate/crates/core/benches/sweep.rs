//! Parallel against single-threaded execution of the two hot paths: a sweep
//! (points in parallel) and a coupled Bogoliubov run (modes in parallel).
//!
//! `cargo bench` compares the rayon pool with a one-thread pool;
//! `cargo bench --no-default-features` measures the sequential build.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use kickbec::bogoliubov::{evolve_coupled, init_modes_discrete};
use kickbec::gpe::init_homogeneous;
use kickbec::scan::{run_sweep, Engine, Observable, Resolution, SweepParam, SweepSpec};
use kickbec::{with_workers, PhysicalParams, RingGrid};

fn modes(workers: Option<usize>) -> &'static str {
    match workers {
        Some(1) => "one_thread",
        _ => "pool",
    }
}

fn map_sweep(c: &mut Criterion) {
    let spec = SweepSpec {
        param: SweepParam::Period,
        lo: 5.0,
        hi: 20.0,
        n_samples: 64,
        base: PhysicalParams::single(1.0, 0.2, 10.0),
        engine: Engine::PerturbativeMap,
        n_kicks: 200,
        observable: Observable::NexFinal,
        resolution: Resolution::default(),
    };
    let mut group = c.benchmark_group("map_sweep");
    for workers in [None, Some(1)] {
        group.bench_function(BenchmarkId::from_parameter(modes(workers)), |b| {
            b.iter(|| with_workers(workers, || run_sweep(black_box(&spec)).unwrap()))
        });
    }
    group.finish();
}

fn coupled_run(c: &mut Criterion) {
    let params = PhysicalParams::single(1.0, 0.2, 10.0);
    let resolution = Resolution { n_points: 128, l_max: 16, ..Resolution::default() };
    let grid = RingGrid::new(resolution.n_points).unwrap();
    let evolution = resolution.evolution(&params, 5);
    let field = init_homogeneous(&grid);
    let modes0 = init_modes_discrete(&params, &grid, &evolution).unwrap();
    let mut group = c.benchmark_group("coupled_run");
    group.sample_size(10);
    for workers in [None, Some(1)] {
        group.bench_function(BenchmarkId::from_parameter(modes(workers)), |b| {
            b.iter(|| with_workers(workers, || evolve_coupled(&field, &modes0, &params, &evolution).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, map_sweep, coupled_run);
criterion_main!(benches);
