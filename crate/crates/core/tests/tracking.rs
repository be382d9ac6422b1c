//! Contract tests for the streaming tracker and its interplay with the
//! baselines and the behavioral layer.

use great_core::baselines::grouse_step;
use great_core::behavior::{
    hankel, ltv_simulate, predictor_from_subspace, relative_prediction_error, restricted_behavior,
    stack_sample, LtvSystem,
};
use great_core::grassmann::{chordal_distance, orthonormalize, Subspace};
use great_core::great::{self, inner_loop, StepRule, Tracker, TrackerConfig};
use great_core::window::DataWindow;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal))
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

fn random_subspace(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Subspace {
    orthonormalize(&gaussian(rng, n, d)).unwrap()
}

/// The tracker's output depends only on the previous estimate and the last
/// T samples: replaying those into a fresh window reproduces the update.
#[test]
fn tracker_update_is_recursive() {
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let (n, d, t_len, k) = (6, 2, 5, 3);
    let truth = random_subspace(&mut rng, n, d);
    let config = TrackerConfig::fixed(n, d, t_len, k, 0.01);
    let mut tracker = Tracker::new(config.clone(), random_subspace(&mut rng, n, d)).unwrap();
    let mut history: Vec<DVector<f64>> = Vec::new();
    for step in 0..30 {
        let mut u = truth.basis() * gaussian_vec(&mut rng, d);
        u += gaussian_vec(&mut rng, n) * 1e-3;
        let before = tracker.estimate().clone();
        tracker.step(&u).unwrap();
        history.push(u);
        if step >= t_len {
            // replay the trailing window into a fresh one
            let mut replay = DataWindow::new(n, t_len).unwrap();
            for sample in history.iter().skip(history.len() - t_len) {
                replay.push(sample).unwrap();
            }
            let reproduced = inner_loop(&before, replay.covariance(), &config.step, k).unwrap();
            let gap = chordal_distance(tracker.estimate(), &reproduced).unwrap();
            assert!(gap < 1e-12, "step {step}: replay mismatch {gap:.3e}");
        }
    }
}

#[test]
fn estimate_dimension_never_changes() {
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let config = TrackerConfig::fixed(7, 3, 4, 2, 0.02);
    let mut tracker = Tracker::new(config, random_subspace(&mut rng, 7, 3)).unwrap();
    for _ in 0..25 {
        tracker.step(&gaussian_vec(&mut rng, 7)).unwrap();
        assert_eq!(tracker.estimate().dim(), 3);
        assert_eq!(tracker.estimate().ambient_dim(), 7);
    }
}

/// Before the window fills, samples only accumulate: the estimate stays put.
#[test]
fn tracking_starts_once_window_is_full() {
    let mut rng = ChaCha8Rng::seed_from_u64(82);
    let start = random_subspace(&mut rng, 6, 2);
    let config = TrackerConfig::fixed(6, 2, 8, 3, 0.05);
    let mut tracker = Tracker::new(config, start.clone()).unwrap();
    for step in 1..8 {
        tracker.step(&gaussian_vec(&mut rng, 6)).unwrap();
        assert_eq!(tracker.window().len(), step);
        assert_eq!(tracker.estimate().basis(), start.basis());
    }
    tracker.step(&gaussian_vec(&mut rng, 6)).unwrap();
    assert!(chordal_distance(tracker.estimate(), &start).unwrap() > 1e-6);
}

/// Fixed-step descent with a step below the stability limit never increases
/// the cost on noise-free stationary data.
#[test]
fn inner_descent_is_monotone_below_step_limit() {
    let mut rng = ChaCha8Rng::seed_from_u64(83);
    for _ in 0..20 {
        let truth = random_subspace(&mut rng, 7, 3);
        let w = truth.basis() * gaussian(&mut rng, 3, 9);
        let cov = &w * w.transpose();
        let trace = cov.trace();
        let (sig_min, sig_max) = great_core::certs::signal_bounds(&w, &truth).unwrap();
        let alpha = 0.9 * sig_min * sig_min / (2.0 * sig_max.powi(4));
        let mut est = random_subspace(&mut rng, 7, 3);
        let mut value = great::cost(&est, &cov, trace).unwrap();
        for _ in 0..30 {
            est = great::gd_step(&est, &cov, alpha).unwrap();
            let next = great::cost(&est, &cov, trace).unwrap();
            assert!(next <= value + 1e-10, "cost increased: {value} -> {next}");
            value = next;
        }
    }
}

/// With noise-free stationary data and a step below the stability limit the
/// distance to the true subspace shrinks at every descent step, not only
/// the cost.
#[test]
fn distance_to_truth_decreases_without_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for _ in 0..20 {
        let truth = random_subspace(&mut rng, 7, 3);
        let w = truth.basis() * gaussian(&mut rng, 3, 10);
        let cov = &w * w.transpose();
        let (sig_min, sig_max) = great_core::certs::signal_bounds(&w, &truth).unwrap();
        let alpha = 0.8 * sig_min * sig_min / (2.0 * sig_max.powi(4));
        let mut est = random_subspace(&mut rng, 7, 3);
        let mut dist = chordal_distance(&est, &truth).unwrap();
        for _ in 0..25 {
            est = great::gd_step(&est, &cov, alpha).unwrap();
            let next = chordal_distance(&est, &truth).unwrap();
            assert!(next <= dist + 1e-12, "distance grew: {dist} -> {next}");
            dist = next;
        }
    }
}

/// Armijo line search refuses to move when every backtracked step fails the
/// sufficient-decrease test; with a sane initial step it matches fixed-step
/// quality on easy problems.
#[test]
fn line_search_tracks_stationary_subspace() {
    let mut rng = ChaCha8Rng::seed_from_u64(84);
    let truth = random_subspace(&mut rng, 6, 2);
    let config = TrackerConfig {
        ambient: 6,
        dim: 2,
        window_len: 6,
        inner_iters: 2,
        step: StepRule::armijo(0.5),
    };
    let mut tracker = Tracker::new(config, random_subspace(&mut rng, 6, 2)).unwrap();
    for _ in 0..40 {
        let u = truth.basis() * gaussian_vec(&mut rng, 2);
        tracker.step(&u).unwrap();
    }
    let d = chordal_distance(tracker.estimate(), &truth).unwrap();
    assert!(d < 1e-6, "line-search distance {d:.3e}");
}

/// GROUSE trajectory equals the window tracker at T = 1 on a drifting
/// target.
#[test]
fn grouse_equals_tracker_with_unit_window() {
    let mut rng = ChaCha8Rng::seed_from_u64(85);
    let (n, d) = (8, 3);
    let truth = random_subspace(&mut rng, n, d);
    let start = random_subspace(&mut rng, n, d);
    let config = TrackerConfig::fixed(n, d, 1, 1, 5e-3);
    let mut tracker = Tracker::new(config, start.clone()).unwrap();
    let mut est = start;
    for _ in 0..200 {
        let mut u = truth.basis() * gaussian_vec(&mut rng, d);
        u += gaussian_vec(&mut rng, n) * 1e-3;
        tracker.step(&u).unwrap();
        est = grouse_step(&est, &u, 5e-3).unwrap();
        let gap = chordal_distance(tracker.estimate(), &est).unwrap();
        assert!(gap < 1e-10, "gap {gap:.3e}");
    }
}

/// Hankel data from a persistently excited LTI system spans the behavior.
#[test]
fn hankel_data_spans_lti_behavior() {
    let mut rng = ChaCha8Rng::seed_from_u64(86);
    let k = 2;
    let mut a = gaussian(&mut rng, k, k);
    a *= 0.6 / great_core::svd::singular_values(&a)[0];
    let sys = LtvSystem::lti(
        a,
        gaussian(&mut rng, k, 1),
        DMatrix::identity(2, 2).rows(0, 2).into_owned(),
        DMatrix::zeros(2, 1),
        300,
    )
    .unwrap();
    let l = 4;
    let inputs: Vec<_> = (0..300).map(|_| gaussian_vec(&mut rng, 1)).collect();
    let outputs = ltv_simulate(&sys, &DVector::zeros(k), &inputs).unwrap();
    let hv = hankel(&inputs, l + 1).unwrap();
    let hy = hankel(&outputs, l + 1).unwrap();
    let mut stacked = DMatrix::zeros(hv.nrows() + hy.nrows(), hv.ncols());
    stacked
        .view_mut((0, 0), (hv.nrows(), hv.ncols()))
        .copy_from(&hv);
    stacked
        .view_mut((hv.nrows(), 0), (hy.nrows(), hy.ncols()))
        .copy_from(&hy);
    let dim = sys.behavior_dim(l);
    let sv = great_core::svd::singular_values(&stacked);
    assert!(sv[dim - 1] > 1e-6 * sv[0]);
    assert!(sv[dim] < 1e-8 * sv[0]);
    let span = great::initialize(&stacked, dim).unwrap();
    let behavior = restricted_behavior(&sys, 0, l).unwrap();
    let gap = chordal_distance(&span, &behavior).unwrap();
    assert!(gap < 1e-8, "gap {gap:.3e}");
}

/// End to end: track an LTI behavior online from stacked samples and read a
/// predictor off the estimate.
#[test]
fn tracked_behavior_predicts_noise_free_lti() {
    let mut rng = ChaCha8Rng::seed_from_u64(87);
    let k = 2;
    let mut a = gaussian(&mut rng, k, k);
    a *= 0.55 / great_core::svd::singular_values(&a)[0];
    let horizon = 400;
    let sys = LtvSystem::lti(
        a,
        gaussian(&mut rng, k, 1),
        DMatrix::identity(2, 2).rows(0, 2).into_owned(),
        DMatrix::zeros(2, 1),
        horizon,
    )
    .unwrap();
    let (t_ini, t_fut) = (3, 3);
    let l = t_ini + t_fut - 1;
    let inputs: Vec<_> = (0..horizon).map(|_| gaussian_vec(&mut rng, 1)).collect();
    let outputs = ltv_simulate(&sys, &DVector::zeros(k), &inputs).unwrap();
    let samples: Vec<_> = (0..horizon - l)
        .map(|t| stack_sample(&inputs[t..=t + l], &outputs[t..=t + l]).unwrap())
        .collect();
    let dim = sys.behavior_dim(l);
    let n = (1 + 2) * (l + 1);
    let t_window = 40;
    let mut w_ini = DMatrix::zeros(n, 60);
    for (j, sample) in samples.iter().take(60).enumerate() {
        w_ini.set_column(j, sample);
    }
    let config = TrackerConfig::fixed(n, dim, t_window, 2, 1e-3);
    let mut tracker = Tracker::from_initial_data(config, &w_ini).unwrap();
    for sample in samples.iter().skip(60).take(200) {
        tracker.step(sample).unwrap();
    }
    let predictor = predictor_from_subspace(tracker.estimate(), 1, 2, t_ini, t_fut).unwrap();
    let mut worst: f64 = 0.0;
    for t0 in 300..330 {
        let predicted = predictor
            .predict(
                &inputs[t0 - t_ini + 1..=t0],
                &outputs[t0 - t_ini + 1..=t0],
                &inputs[t0 + 1..=t0 + t_fut],
            )
            .unwrap();
        let err = relative_prediction_error(&predicted, &outputs[t0 + 1..=t0 + t_fut]).unwrap();
        worst = worst.max(err);
    }
    assert!(worst < 1e-4, "worst relative error {worst:.3e}");
}
