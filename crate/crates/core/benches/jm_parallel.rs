use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use steering_core::compat::{jm_decide_batch, jm_decide_with, JmOptions};
use steering_core::random::{random_measurement_assemblage, rng_from_seed};
use steering_core::Parallelism;

const MODES: [(&str, Parallelism); 2] = [("sequential", Parallelism::Sequential), ("rayon", Parallelism::Rayon)];

fn single_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("jm_single_solve");
    group.sample_size(10);
    for settings in [6, 8, 10] {
        let m = random_measurement_assemblage(2, settings, 2, &mut rng_from_seed(settings as u64));
        for (name, mode) in MODES {
            let mut opts = JmOptions::default();
            opts.sdp.parallelism = mode;
            group.bench_with_input(BenchmarkId::new(name, 1usize << settings), &m, |b, m| {
                b.iter(|| jm_decide_with(black_box(m), &opts).unwrap())
            });
        }
    }
    group.finish();
}

fn batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("jm_batch");
    group.sample_size(10);
    let mut rng = rng_from_seed(99);
    let sets: Vec<_> = (0..64)
        .map(|i| random_measurement_assemblage(2 + i % 2, 3, 2 + i % 2, &mut rng))
        .collect();
    let opts = JmOptions::default();
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::new(name, sets.len()), |b| {
            b.iter(|| jm_decide_batch(black_box(&sets), &opts, mode))
        });
    }
    group.finish();
}

criterion_group!(benches, single_solve, batch);
criterion_main!(benches);
