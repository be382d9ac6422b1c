//! Per-push cost of the window covariance recursion must not depend on the
//! window length: compare T = 30 against T = 150 at fixed ambient dimension.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use great_core::window::{DataWindow, DiscountedWindow};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn samples(n: usize, count: usize) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..count)
        .map(|_| DVector::from_fn(n, |_, _| rng.sample(StandardNormal)))
        .collect()
}

fn bench_push(c: &mut Criterion) {
    let n = 40;
    let data = samples(n, 4096);
    let mut group = c.benchmark_group("window_push");
    for t in [30usize, 150] {
        group.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| {
            let mut window = DataWindow::new(n, t).unwrap();
            for u in data.iter().take(t) {
                window.push(u).unwrap();
            }
            let mut i = t;
            b.iter(|| {
                window.push(&data[i % data.len()]).unwrap();
                i += 1;
            });
        });
    }
    group.finish();
}

fn bench_discounted_push(c: &mut Criterion) {
    let n = 40;
    let data = samples(n, 4096);
    c.bench_function("discounted_push", |b| {
        let mut window = DiscountedWindow::new(n, 0.985).unwrap();
        let mut i = 0;
        b.iter(|| {
            window.push(&data[i % data.len()]).unwrap();
            i += 1;
        });
    });
}

criterion_group!(benches, bench_push, bench_discounted_push);
criterion_main!(benches);
