//! Cost of one tracker update (gradient + exponential map) at the sizes used
//! in the identification study, and of the rank-one step it degenerates to.

use criterion::{criterion_group, criterion_main, Criterion};
use great_core::baselines::grouse_step;
use great_core::grassmann::orthonormalize;
use great_core::great::gd_step;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn bench_gd_step(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (n, d, t) = (40, 13, 120);
    let w = DMatrix::<f64>::from_fn(n, t, |_, _| rng.sample(StandardNormal));
    let cov = &w * w.transpose();
    let est = orthonormalize(&DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal))).unwrap();
    c.bench_function("gd_step_40x13", |b| {
        b.iter(|| gd_step(&est, &cov, 1e-5).unwrap());
    });
}

fn bench_grouse_step(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (n, d) = (40, 13);
    let est = orthonormalize(&DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal))).unwrap();
    let u = DVector::<f64>::from_fn(n, |_, _| rng.sample(StandardNormal));
    c.bench_function("grouse_step_40x13", |b| {
        b.iter(|| grouse_step(&est, &u, 1e-5).unwrap());
    });
}

criterion_group!(benches, bench_gd_step, bench_grouse_step);
criterion_main!(benches);
