//! The tracker: projection-error cost, Riemannian gradient descent on the
//! Grassmannian, and the outer streaming loop.
//!
//! Given the data window `W` (through its covariance `C = W Wᵀ`), the cost of
//! an estimate `Û` is the projection error
//!
//! `F(Û) = ‖P_Û^⊥ W‖_F² = tr(W Wᵀ) − tr(Ûᵀ C Û)`,
//!
//! whose Riemannian gradient is `grad F(Û) = −2 P_Û^⊥ C Û`. Each incoming
//! sample triggers `K` gradient-descent steps along the exponential map,
//! warm-started from the previous estimate. The per-sample cost is
//! `O(K n² d)` because only the covariance is touched, never the raw window.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grassmann::{exp_map, Subspace, TangentVector, RANK_TOL, ZERO_GRADIENT_TOL};
use crate::svd::thin_svd;
use crate::window::DataWindow;

/// Step-size rule for the inner gradient-descent loop.
#[derive(Debug, Clone, PartialEq)]
pub enum StepRule {
    /// Constant step size `α > 0`. This is the only mode the certificates
    /// in [`crate::certs`] cover.
    Fixed(f64),
    /// Armijo backtracking: start from `init`, shrink by `shrink` until the
    /// sufficient-decrease condition
    /// `F(new) ≤ F(old) − sufficient_decrease · s · ‖grad‖_F²` holds, giving
    /// up (and leaving the estimate unchanged) after `max_backtracks` trials.
    Armijo {
        init: f64,
        sufficient_decrease: f64,
        shrink: f64,
        max_backtracks: usize,
    },
}

impl StepRule {
    /// Armijo backtracking with the default constants (1e-4, 0.5, 20).
    pub fn armijo(init: f64) -> Self {
        StepRule::Armijo {
            init,
            sufficient_decrease: 1e-4,
            shrink: 0.5,
            max_backtracks: 20,
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, StepRule::Fixed(_))
    }
}

/// Static configuration of a tracker instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    /// Ambient dimension n.
    pub ambient: usize,
    /// Subspace dimension d.
    pub dim: usize,
    /// Window length T (tracking starts once the window holds T samples).
    pub window_len: usize,
    /// Gradient-descent iterations K per incoming sample.
    pub inner_iters: usize,
    /// Step-size rule.
    pub step: StepRule,
}

impl TrackerConfig {
    /// Fixed-step configuration.
    pub fn fixed(
        ambient: usize,
        dim: usize,
        window_len: usize,
        inner_iters: usize,
        alpha: f64,
    ) -> Self {
        Self {
            ambient,
            dim,
            window_len,
            inner_iters,
            step: StepRule::Fixed(alpha),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 || self.dim > self.ambient {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= d <= n, got d={}, n={}",
                self.dim, self.ambient
            )));
        }
        // T >= d is required by the certificates (see `certs`), not by the
        // update itself; T = 1 recovers the rank-one tracker.
        if self.window_len < 1 {
            return Err(Error::InvalidParameter(
                "window length T must be at least 1".into(),
            ));
        }
        if self.inner_iters < 1 {
            return Err(Error::InvalidParameter("K must be at least 1".into()));
        }
        match self.step {
            StepRule::Fixed(alpha) if alpha <= 0.0 => Err(Error::InvalidParameter(format!(
                "fixed step size must be positive, got {alpha}"
            ))),
            StepRule::Armijo { init, .. } if init <= 0.0 => Err(Error::InvalidParameter(
                "line-search initial step must be positive".into(),
            )),
            _ => Ok(()),
        }
    }
}

fn check_cov(est: &Subspace, cov: &DMatrix<f64>) -> Result<()> {
    let n = est.ambient_dim();
    if cov.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "covariance shape {:?} vs ambient dimension {}",
            cov.shape(),
            n
        )));
    }
    Ok(())
}

/// Projection-error cost `tr(W Wᵀ) − tr(Ûᵀ C Û)` with `C = W Wᵀ`.
///
/// `trace_ww` is `tr(W Wᵀ)`, maintained by the window. The value is
/// nonnegative up to round-off.
pub fn cost(est: &Subspace, cov: &DMatrix<f64>, trace_ww: f64) -> Result<f64> {
    check_cov(est, cov)?;
    Ok(trace_ww - negative_cost_part(est, cov))
}

/// `tr(Ûᵀ C Û)`; the cost is `trace_ww` minus this. The additive constant
/// cancels in descent conditions, so the line search works with this part.
fn negative_cost_part(est: &Subspace, cov: &DMatrix<f64>) -> f64 {
    let cu = cov * est.basis();
    (est.basis().transpose() * cu).trace()
}

/// Riemannian gradient of the cost, `−2 P_Û^⊥ C Û`.
pub fn riemannian_gradient(est: &Subspace, cov: &DMatrix<f64>) -> Result<TangentVector> {
    check_cov(est, cov)?;
    let cu = cov * est.basis();
    let mut dir = est.complement_project_matrix(&cu)?;
    dir *= -2.0;
    Ok(TangentVector::from_parts(est.clone(), dir))
}

/// One gradient-descent step: `Exp_Û(−α · grad F(Û))`.
///
/// Gradients with Frobenius norm below [`ZERO_GRADIENT_TOL`] are treated as
/// zero and the estimate is returned unchanged.
pub fn gd_step(est: &Subspace, cov: &DMatrix<f64>, alpha: f64) -> Result<Subspace> {
    if alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive, got {alpha}"
        )));
    }
    let grad = riemannian_gradient(est, cov)?;
    if grad.norm() < ZERO_GRADIENT_TOL {
        return Ok(est.clone());
    }
    Ok(exp_map(&grad, -alpha))
}

/// Runs `iters` sequential descent steps under the given step rule.
pub fn inner_loop(
    est: &Subspace,
    cov: &DMatrix<f64>,
    step: &StepRule,
    iters: usize,
) -> Result<Subspace> {
    let mut current = est.clone();
    for _ in 0..iters {
        current = match *step {
            StepRule::Fixed(alpha) => gd_step(&current, cov, alpha)?,
            StepRule::Armijo {
                init,
                sufficient_decrease,
                shrink,
                max_backtracks,
            } => armijo_step(
                &current,
                cov,
                init,
                sufficient_decrease,
                shrink,
                max_backtracks,
            )?,
        };
    }
    Ok(current)
}

fn armijo_step(
    est: &Subspace,
    cov: &DMatrix<f64>,
    init: f64,
    sufficient_decrease: f64,
    shrink: f64,
    max_backtracks: usize,
) -> Result<Subspace> {
    let grad = riemannian_gradient(est, cov)?;
    let grad_norm_sq = grad.norm() * grad.norm();
    if grad_norm_sq.sqrt() < ZERO_GRADIENT_TOL {
        return Ok(est.clone());
    }
    let base_value = -negative_cost_part(est, cov);
    let mut s = init;
    for _ in 0..=max_backtracks {
        let candidate = exp_map(&grad, -s);
        let value = -negative_cost_part(&candidate, cov);
        if value <= base_value - sufficient_decrease * s * grad_norm_sq {
            return Ok(candidate);
        }
        s *= shrink;
    }
    Ok(est.clone())
}

/// Initial estimate: span of the `d` leading left singular vectors of the
/// initialization data, i.e. the minimizer of `‖P^⊥ W_ini‖_F²` over Gr(n, d).
pub fn initialize(w_ini: &DMatrix<f64>, dim: usize) -> Result<Subspace> {
    let (n, t0) = w_ini.shape();
    if dim < 1 || dim > n || t0 < dim {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= d <= n and t0 >= d, got n={n}, d={dim}, t0={t0}"
        )));
    }
    let svd = thin_svd(w_ini);
    let tol = RANK_TOL * svd.sigma[0];
    if svd.sigma[dim - 1] <= tol {
        return Err(Error::RankDeficient {
            sigma_min: svd.sigma[dim - 1],
            tol,
        });
    }
    Ok(Subspace::from_orthonormal(
        svd.u.columns(0, dim).into_owned(),
    ))
}

/// The streaming tracker: estimate, window, and step counter.
///
/// One instance is strictly sequential; independent instances may run on
/// different threads.
#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    estimate: Subspace,
    window: DataWindow,
    time: u64,
}

impl Tracker {
    /// A tracker starting from `initial` with an empty window. Updates begin
    /// once the window has filled to its capacity T; earlier samples only
    /// accumulate.
    pub fn new(config: TrackerConfig, initial: Subspace) -> Result<Self> {
        config.validate()?;
        if initial.ambient_dim() != config.ambient || initial.dim() != config.dim {
            return Err(Error::DimensionMismatch(format!(
                "initial estimate is Gr({}, {}), config wants Gr({}, {})",
                initial.ambient_dim(),
                initial.dim(),
                config.ambient,
                config.dim
            )));
        }
        let window = DataWindow::new(config.ambient, config.window_len)?;
        Ok(Self {
            config,
            estimate: initial,
            window,
            time: 0,
        })
    }

    /// A tracker whose window is pre-filled with the trailing T columns of
    /// `w_ini` and whose estimate is [`initialize`]`(w_ini, d)`.
    pub fn from_initial_data(config: TrackerConfig, w_ini: &DMatrix<f64>) -> Result<Self> {
        let estimate = initialize(w_ini, config.dim)?;
        let mut tracker = Self::new(config, estimate)?;
        let t0 = w_ini.ncols();
        let first = t0.saturating_sub(tracker.config.window_len);
        for j in first..t0 {
            tracker.window.push(&w_ini.column(j).into_owned())?;
        }
        Ok(tracker)
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn estimate(&self) -> &Subspace {
        &self.estimate
    }

    pub fn window(&self) -> &DataWindow {
        &self.window
    }

    /// Number of samples consumed so far.
    pub fn time(&self) -> u64 {
        self.time
    }

    /// Consumes one sample: pushes it into the window and, once the window
    /// is full, runs the inner loop warm-started from the current estimate.
    pub fn step(&mut self, u: &DVector<f64>) -> Result<()> {
        self.window.push(u)?;
        self.time += 1;
        if self.window.is_full() {
            self.estimate = inner_loop(
                &self.estimate,
                self.window.covariance(),
                &self.config.step,
                self.config.inner_iters,
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::{chordal_distance, orthonormalize};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal))
    }

    fn random_subspace(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Subspace {
        orthonormalize(&gaussian(rng, n, d)).unwrap()
    }

    #[test]
    fn cost_zero_when_samples_inside_estimate() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let u = random_subspace(&mut rng, 6, 2);
        let w = u.basis() * gaussian(&mut rng, 2, 8);
        let cov = &w * w.transpose();
        let c = cost(&u, &cov, cov.trace()).unwrap();
        assert_abs_diff_eq!(c, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn cost_full_energy_when_orthogonal() {
        // estimate spans e1,e2; samples live in e3..e5
        let est = orthonormalize(&DMatrix::<f64>::identity(5, 2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut w = DMatrix::zeros(5, 6);
        for j in 0..6 {
            for i in 2..5 {
                w[(i, j)] = rng.sample::<f64, _>(StandardNormal);
            }
        }
        let cov = &w * w.transpose();
        let c = cost(&est, &cov, cov.trace()).unwrap();
        assert_abs_diff_eq!(c, w.norm_squared(), epsilon = 1e-9);
    }

    #[test]
    fn cost_reduces_to_squared_chordal_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let truth = random_subspace(&mut rng, 7, 3);
        let est = random_subspace(&mut rng, 7, 3);
        let w = truth.basis().clone();
        let cov = &w * w.transpose();
        let c = cost(&est, &cov, cov.trace()).unwrap();
        let d = chordal_distance(&est, &truth).unwrap();
        assert_abs_diff_eq!(c, d * d, epsilon = 1e-10);
    }

    #[test]
    fn gradient_zero_at_stationary_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let u = random_subspace(&mut rng, 6, 2);
        let w = u.basis() * gaussian(&mut rng, 2, 9);
        let cov = &w * w.transpose();
        assert!(riemannian_gradient(&u, &cov).unwrap().norm() < 1e-10);
        // isotropic covariance is stationary everywhere
        let eye = DMatrix::identity(6, 6);
        assert!(riemannian_gradient(&u, &eye).unwrap().norm() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let w = gaussian(&mut rng, 8, 12);
        let cov = &w * w.transpose();
        let trace = cov.trace();
        let u = random_subspace(&mut rng, 8, 3);
        let grad = riemannian_gradient(&u, &cov).unwrap();
        let h = 1e-5;
        for _ in 0..10 {
            let x = crate::grassmann::tangent_project(&u, &gaussian(&mut rng, 8, 3)).unwrap();
            let xn = x.norm();
            let x = TangentVector::from_parts(u.clone(), x.direction() / xn);
            let fp = cost(&exp_map(&x, h), &cov, trace).unwrap();
            let fm = cost(&exp_map(&x, -h), &cov, trace).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            let analytic = grad
                .direction()
                .iter()
                .zip(x.direction().iter())
                .map(|(a, b)| a * b)
                .sum::<f64>();
            let rel = (fd - analytic).abs() / analytic.abs().max(1e-12);
            assert!(rel < 1e-5, "relative error {rel:.3e}");
        }
    }

    #[test]
    fn gd_step_descends_for_small_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let w = gaussian(&mut rng, 7, 10);
        let cov = &w * w.transpose();
        let trace = cov.trace();
        let u = random_subspace(&mut rng, 7, 2);
        let before = cost(&u, &cov, trace).unwrap();
        let after = cost(&gd_step(&u, &cov, 1e-4).unwrap(), &cov, trace).unwrap();
        assert!(after < before);
    }

    #[test]
    fn gd_step_noop_on_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let u = random_subspace(&mut rng, 5, 2);
        let w = u.basis() * gaussian(&mut rng, 2, 6);
        let cov = &w * w.transpose();
        let moved = gd_step(&u, &cov, 0.1).unwrap();
        assert!(chordal_distance(&u, &moved).unwrap() < 1e-12);
    }

    #[test]
    fn inner_loop_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let w = gaussian(&mut rng, 6, 9);
        let cov = &w * w.transpose();
        let u = random_subspace(&mut rng, 6, 2);
        let step = StepRule::Fixed(1e-3);
        let once = inner_loop(&u, &cov, &step, 1).unwrap();
        let single = gd_step(&u, &cov, 1e-3).unwrap();
        assert!(chordal_distance(&once, &single).unwrap() < 1e-12);
        let ten = inner_loop(&u, &cov, &step, 10).unwrap();
        let five_five =
            inner_loop(&inner_loop(&u, &cov, &step, 5).unwrap(), &cov, &step, 5).unwrap();
        assert!(chordal_distance(&ten, &five_five).unwrap() < 1e-12);
    }

    #[test]
    fn armijo_never_increases_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let w = gaussian(&mut rng, 6, 9);
        let cov = &w * w.transpose();
        let trace = cov.trace();
        let u = random_subspace(&mut rng, 6, 2);
        let step = StepRule::armijo(1.0);
        let mut current = u;
        let mut value = cost(&current, &cov, trace).unwrap();
        for _ in 0..20 {
            current = inner_loop(&current, &cov, &step, 1).unwrap();
            let next = cost(&current, &cov, trace).unwrap();
            assert!(next <= value + 1e-12);
            value = next;
        }
    }

    #[test]
    fn initialize_recovers_exact_low_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let truth = random_subspace(&mut rng, 8, 3);
        let w = truth.basis() * gaussian(&mut rng, 3, 10);
        let est = initialize(&w, 3).unwrap();
        // residual form avoids the cancellation of the trace identity
        let residual = est.complement_project_matrix(&w).unwrap().norm_squared();
        assert!(residual < 1e-18, "residual {residual:.3e}");
        assert!(chordal_distance(&est, &truth).unwrap() < 1e-10);
    }

    #[test]
    fn initialize_full_space() {
        let est = initialize(&DMatrix::identity(4, 4), 4).unwrap();
        let cov = DMatrix::identity(4, 4);
        assert!(cost(&est, &cov, 4.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn initialize_cost_equals_discarded_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let w = gaussian(&mut rng, 7, 12);
        let d = 3;
        let est = initialize(&w, d).unwrap();
        let cov = &w * w.transpose();
        let achieved = cost(&est, &cov, cov.trace()).unwrap();
        let sv = crate::svd::singular_values(&w);
        let discarded: f64 = sv.iter().skip(d).map(|s| s * s).sum();
        assert_abs_diff_eq!(achieved, discarded, epsilon = 1e-9);
        // Eckart-Young: no random subspace does better
        for _ in 0..50 {
            let other = random_subspace(&mut rng, 7, d);
            assert!(cost(&other, &cov, cov.trace()).unwrap() >= achieved - 1e-9);
        }
    }

    #[test]
    fn track_converges_on_stationary_subspace() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let truth = random_subspace(&mut rng, 6, 2);
        let config = TrackerConfig::fixed(6, 2, 8, 4, 0.02);
        let start = random_subspace(&mut rng, 6, 2);
        let mut tracker = Tracker::new(config, start).unwrap();
        for _ in 0..58 {
            let sample =
                truth.basis() * DVector::from_fn(2, |_, _| rng.sample::<f64, _>(StandardNormal));
            tracker.step(&sample).unwrap();
        }
        let d = chordal_distance(tracker.estimate(), &truth).unwrap();
        assert!(d < 1e-6, "distance {d:.3e}");
    }

    #[test]
    fn track_keeps_estimate_when_window_inside_it() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let est = random_subspace(&mut rng, 5, 2);
        let config = TrackerConfig::fixed(5, 2, 3, 5, 0.05);
        let mut tracker = Tracker::new(config, est.clone()).unwrap();
        for _ in 0..10 {
            let sample =
                est.basis() * DVector::from_fn(2, |_, _| rng.sample::<f64, _>(StandardNormal));
            tracker.step(&sample).unwrap();
        }
        assert!(chordal_distance(tracker.estimate(), &est).unwrap() < 1e-12);
    }

    #[test]
    fn config_rejects_bad_parameters() {
        assert!(TrackerConfig::fixed(5, 2, 1, 3, 0.1).validate().is_ok()); // T = 1 is the rank-one tracker
        assert!(TrackerConfig::fixed(5, 2, 0, 3, 0.1).validate().is_err()); // T = 0
        assert!(TrackerConfig::fixed(5, 2, 4, 0, 0.1).validate().is_err()); // K = 0
        assert!(TrackerConfig::fixed(5, 2, 4, 3, 0.0).validate().is_err()); // alpha = 0
        assert!(TrackerConfig::fixed(5, 6, 8, 3, 0.1).validate().is_err()); // d > n
    }
}
