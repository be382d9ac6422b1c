//! Closed-form certificates for the tracker: noise bounds, decay rates,
//! feasibility checks, invariant-tube radii and step-size tuning.
//!
//! The certificates are driven by a small set of constants:
//!
//! - `ε` bounds the measurement error on each sample,
//! - `c` bounds the chordal distance between consecutive true subspaces,
//! - `σ̲ ≤ σ̄` bound the extreme singular values of the signal part
//!   `P_U W` of the data window,
//! - `r_b < 1` is the radius of the invariant tube,
//! - `α, T, K` are the tracker's design parameters.
//!
//! From these, the noise level of a window is bounded by
//! `δ = c ‖W D‖_F + ε √T (c (T−1) + 1)` with `D = diag(T−1, …, 0)` weighting
//! columns by age. A single descent step contracts the squared chordal
//! distance at rate `ρ = α σ̲² − 2 α² σ̄⁴`, degraded by the Κ∞ penalty
//! `γ_r(δ)`. Whenever the signal-to-noise condition `γ_{r_b}(δ) ≤
//! (1−ρ̃) r_b² + (1−ρ̃)(c² − 2 c r_b)/(1−ρ̃^K)` holds with
//! `ρ̃ = 1 − 4 (1−r_b²) ρ ∈ [0, 1)`, the squared distance to the true
//! subspace obeys the per-step tube bound and its geometric-series limit,
//! the ultimate bound.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grassmann::Subspace;
use crate::svd::singular_values;

/// The constants feeding every certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateParams {
    /// Measurement-error bound ε ≥ 0.
    pub noise_bound: f64,
    /// Per-step subspace drift bound c ≥ 0.
    pub drift_bound: f64,
    /// Lower signal singular-value bound σ̲ > 0.
    pub sigma_min: f64,
    /// Upper signal singular-value bound σ̄ ≥ σ̲.
    pub sigma_max: f64,
    /// Invariant-tube radius r_b ∈ [c, 1).
    pub tube_radius: f64,
    /// Step size α > 0.
    pub step_size: f64,
    /// Window length T ≥ d.
    pub window_len: usize,
    /// Inner gradient-descent iterations K ≥ 1.
    pub inner_iters: usize,
    /// Subspace dimension d ≥ 1.
    pub dim: usize,
}

impl CertificateParams {
    pub fn validate(&self) -> Result<()> {
        let reject = |msg: String| Err(Error::InvalidParameter(msg));
        if self.noise_bound < 0.0 {
            return reject(format!(
                "noise bound must be >= 0, got {}",
                self.noise_bound
            ));
        }
        if self.drift_bound < 0.0 {
            return reject(format!(
                "drift bound must be >= 0, got {}",
                self.drift_bound
            ));
        }
        if !(self.sigma_min > 0.0 && self.sigma_min <= self.sigma_max) {
            return reject(format!(
                "need 0 < sigma_min <= sigma_max, got {} and {}",
                self.sigma_min, self.sigma_max
            ));
        }
        if !(self.tube_radius >= self.drift_bound && self.tube_radius < 1.0) {
            return reject(format!(
                "tube radius must lie in [c, 1) = [{}, 1), got {}",
                self.drift_bound, self.tube_radius
            ));
        }
        if self.step_size <= 0.0 {
            return reject(format!("step size must be > 0, got {}", self.step_size));
        }
        if self.dim < 1 {
            return reject("subspace dimension must be >= 1".into());
        }
        if self.window_len < self.dim {
            return reject(format!(
                "window length T = {} must be at least d = {}",
                self.window_len, self.dim
            ));
        }
        if self.inner_iters < 1 {
            return reject("inner iteration count must be >= 1".into());
        }
        Ok(())
    }

    /// Copy with a different step size (used by the step-size search).
    pub fn with_step_size(&self, alpha: f64) -> Self {
        Self {
            step_size: alpha,
            ..self.clone()
        }
    }

    /// Upper end of the step-size interval with positive contraction,
    /// `σ̲² / (2 σ̄⁴)`.
    pub fn step_size_limit(&self) -> f64 {
        self.sigma_min * self.sigma_min / (2.0 * self.sigma_max.powi(4))
    }
}

/// Noise bound of a data window:
/// `δ = c ‖W D‖_F + ε √T (c (T−1) + 1)`, `D = diag(T−1, …, 0)`.
///
/// `data` must hold exactly T columns ordered oldest → newest, so the oldest
/// column carries weight T−1 and the newest weight 0.
pub fn delta_bound(data: &DMatrix<f64>, p: &CertificateParams) -> Result<f64> {
    p.validate()?;
    let t = p.window_len;
    if data.ncols() != t {
        return Err(Error::DimensionMismatch(format!(
            "data has {} columns, window length is {}",
            data.ncols(),
            t
        )));
    }
    let mut weighted_sq = 0.0;
    for j in 0..t {
        let age = (t - 1 - j) as f64;
        weighted_sq += age * age * data.column(j).norm_squared();
    }
    let c = p.drift_bound;
    let eps = p.noise_bound;
    Ok(c * weighted_sq.sqrt() + eps * (t as f64).sqrt() * (c * (t as f64 - 1.0) + 1.0))
}

/// The Κ∞ noise penalty
/// `γ_r(δ) = 8αrσ̄(1+4ασ̄²)δ + (4αr + 16α²σ̄²(r+2))δ² + 32α²σ̄δ³ + 8α²δ⁴`.
pub fn gamma(r: f64, delta: f64, alpha: f64, sigma_max: f64) -> f64 {
    let a2 = alpha * alpha;
    let s2 = sigma_max * sigma_max;
    8.0 * alpha * r * sigma_max * (1.0 + 4.0 * alpha * s2) * delta
        + (4.0 * alpha * r + 16.0 * a2 * s2 * (r + 2.0)) * delta * delta
        + 32.0 * a2 * sigma_max * delta.powi(3)
        + 8.0 * a2 * delta.powi(4)
}

/// Per-iteration contraction coefficient `ρ = α σ̲² − 2 α² σ̄⁴`;
/// positive exactly for `α ∈ (0, σ̲²/(2σ̄⁴))`.
pub fn rho(alpha: f64, sigma_min: f64, sigma_max: f64) -> f64 {
    alpha * sigma_min * sigma_min - 2.0 * alpha * alpha * sigma_max.powi(4)
}

/// Squared-distance decay factor `ρ̃ = 1 − 4 (1 − r_b²) ρ`.
pub fn rho_tilde(alpha: f64, sigma_min: f64, sigma_max: f64, tube_radius: f64) -> f64 {
    1.0 - 4.0 * (1.0 - tube_radius * tube_radius) * rho(alpha, sigma_min, sigma_max)
}

/// Outcome of the signal-to-noise feasibility check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assumption4Report {
    /// Whether the inequality holds for the supplied noise level.
    pub holds: bool,
    /// Signed slack, right-hand side minus left-hand side.
    pub slack: f64,
    /// The decay factor ρ̃ the check was evaluated at.
    pub rho_tilde: f64,
}

/// Checks the signal-to-noise condition
/// `γ_{r_b}(δ_sup) ≤ (1−ρ̃) r_b² + (1−ρ̃)(c² − 2 c r_b)/(1−ρ̃^K)`.
///
/// Fails with [`Error::InvalidRho`] when `ρ̃ ∉ [0, 1)`; a negative ρ̃ is
/// reported rather than clamped.
pub fn assumption4_check(p: &CertificateParams, delta_sup: f64) -> Result<Assumption4Report> {
    p.validate()?;
    let rt = rho_tilde(p.step_size, p.sigma_min, p.sigma_max, p.tube_radius);
    if !(0.0..1.0).contains(&rt) {
        return Err(Error::InvalidRho(rt));
    }
    let rb = p.tube_radius;
    let c = p.drift_bound;
    let k = p.inner_iters as f64;
    let lhs = gamma(rb, delta_sup, p.step_size, p.sigma_max);
    let rhs = (1.0 - rt) * rb * rb + (1.0 - rt) * (c * c - 2.0 * c * rb) / (1.0 - rt.powf(k));
    Ok(Assumption4Report {
        holds: lhs <= rhs,
        slack: rhs - lhs,
        rho_tilde: rt,
    })
}

/// Right-hand side of the single-step decay bound:
/// `d² − ρ ‖grad d²‖_F² + γ_{r_b}(δ)`.
///
/// Valid as an envelope whenever the estimate lies within `r_b` of the true
/// subspace and `δ` bounds `‖P_U^⊥ W‖_F`.
pub fn single_step_bound(
    dist_sq: f64,
    delta: f64,
    p: &CertificateParams,
    grad_norm_sq: f64,
) -> f64 {
    dist_sq - rho(p.step_size, p.sigma_min, p.sigma_max) * grad_norm_sq
        + gamma(p.tube_radius, delta, p.step_size, p.sigma_max)
}

/// Squared-distance tube bound after `steps` outer iterations:
/// `ρ̃^{K·steps} d₀² + ((1−ρ̃^{K·steps})/(1−ρ̃)) γ_{r_b}(δ_sup)
///  + ((1−ρ̃^{K·steps})/(1−ρ̃^K)) ρ̃^K (2r_b − c) c`.
///
/// `steps` counts outer iterations since initialization and `initial_dist_sq`
/// is the squared chordal distance at initialization time. Fails with
/// [`Error::AssumptionViolated`] when the feasibility check does not hold.
pub fn theorem1_bound(
    steps: u64,
    initial_dist_sq: f64,
    delta_sup: f64,
    p: &CertificateParams,
) -> Result<f64> {
    let report = assumption4_check(p, delta_sup)?;
    if !report.holds {
        return Err(Error::AssumptionViolated {
            slack: report.slack,
        });
    }
    let rt = report.rho_tilde;
    let k = p.inner_iters as f64;
    let rt_k = rt.powf(k);
    let rt_kt = rt.powf(k * steps as f64);
    let g = gamma(p.tube_radius, delta_sup, p.step_size, p.sigma_max);
    let c = p.drift_bound;
    Ok(rt_kt * initial_dist_sq
        + (1.0 - rt_kt) / (1.0 - rt) * g
        + (1.0 - rt_kt) / (1.0 - rt_k) * rt_k * (2.0 * p.tube_radius - c) * c)
}

/// Limiting squared bound as the step count grows:
/// `γ_{r_b}(δ_sup)/(1−ρ̃) + (ρ̃^K/(1−ρ̃^K)) (2r_b − c) c`.
pub fn ultimate_bound(delta_sup: f64, p: &CertificateParams) -> Result<f64> {
    let report = assumption4_check(p, delta_sup)?;
    if !report.holds {
        return Err(Error::AssumptionViolated {
            slack: report.slack,
        });
    }
    let rt = report.rho_tilde;
    let rt_k = rt.powf(p.inner_iters as f64);
    let g = gamma(p.tube_radius, delta_sup, p.step_size, p.sigma_max);
    Ok(
        g / (1.0 - rt)
            + rt_k / (1.0 - rt_k) * (2.0 * p.tube_radius - p.drift_bound) * p.drift_bound,
    )
}

/// Per-step tube radii together with their limit.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeBound {
    /// Squared bound at steps 1, 2, …, horizon since initialization.
    pub per_step: Vec<f64>,
    /// Limiting squared bound.
    pub ultimate: f64,
    /// Contraction factor the bounds decay with.
    pub rho_tilde: f64,
}

/// Evaluates the tube over a horizon of outer steps.
pub fn tube_bound(
    horizon: u64,
    initial_dist_sq: f64,
    delta_sup: f64,
    p: &CertificateParams,
) -> Result<TubeBound> {
    let per_step = (1..=horizon)
        .map(|t| theorem1_bound(t, initial_dist_sq, delta_sup, p))
        .collect::<Result<Vec<f64>>>()?;
    Ok(TubeBound {
        per_step,
        ultimate: ultimate_bound(delta_sup, p)?,
        rho_tilde: rho_tilde(p.step_size, p.sigma_min, p.sigma_max, p.tube_radius),
    })
}

/// What to tune the step size for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepSizeObjective {
    /// Maximize the convergence rate; closed form `α = σ̲²/(4σ̄⁴)`.
    MaxRate,
    /// Minimize the ultimate bound over feasible step sizes.
    MinUltimate,
}

/// Result of a step-size optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizeResult {
    pub alpha: f64,
    /// Golden-section iterations used (0 for the closed form).
    pub iterations: usize,
}

/// Relative interval width at which the golden-section search stops.
pub const GOLDEN_SECTION_TOL: f64 = 1e-8;

/// Tunes the step size over `(0, σ̲²/(2σ̄⁴))`.
///
/// `MaxRate` returns the closed-form maximizer of ρ. `MinUltimate` scans a
/// coarse grid for the feasible region (the ultimate bound is +∞ where the
/// feasibility check fails) and refines by golden-section search to
/// [`GOLDEN_SECTION_TOL`] relative width. The step size stored in `p` is
/// ignored.
pub fn optimize_step_size(
    objective: StepSizeObjective,
    delta_sup: f64,
    p: &CertificateParams,
) -> Result<StepSizeResult> {
    p.with_step_size(1.0).validate()?;
    let limit = p.step_size_limit();
    match objective {
        StepSizeObjective::MaxRate => Ok(StepSizeResult {
            alpha: p.sigma_min * p.sigma_min / (4.0 * p.sigma_max.powi(4)),
            iterations: 0,
        }),
        StepSizeObjective::MinUltimate => {
            let objective_fn = |alpha: f64| -> f64 {
                ultimate_bound(delta_sup, &p.with_step_size(alpha)).unwrap_or(f64::INFINITY)
            };
            // bracket the feasible valley on a coarse grid first
            const GRID: usize = 200;
            let mut best = (f64::INFINITY, 0usize);
            for i in 1..GRID {
                let alpha = limit * i as f64 / GRID as f64;
                let v = objective_fn(alpha);
                if v < best.0 {
                    best = (v, i);
                }
            }
            if !best.0.is_finite() {
                return Err(Error::Infeasible { upper: limit });
            }
            let mut lo = limit * (best.1 as f64 - 1.0) / GRID as f64;
            let mut hi = limit * (best.1 as f64 + 1.0) / GRID as f64;
            let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
            let mut c1 = hi - inv_phi * (hi - lo);
            let mut d1 = lo + inv_phi * (hi - lo);
            let mut fc = objective_fn(c1);
            let mut fd = objective_fn(d1);
            let mut iterations = 0;
            while hi - lo > GOLDEN_SECTION_TOL * limit {
                iterations += 1;
                if fc < fd {
                    hi = d1;
                    d1 = c1;
                    fd = fc;
                    c1 = hi - inv_phi * (hi - lo);
                    fc = objective_fn(c1);
                } else {
                    lo = c1;
                    c1 = d1;
                    fc = fd;
                    d1 = lo + inv_phi * (hi - lo);
                    fd = objective_fn(d1);
                }
            }
            let alpha = 0.5 * (lo + hi);
            if !objective_fn(alpha).is_finite() {
                return Err(Error::Infeasible { upper: limit });
            }
            Ok(StepSizeResult { alpha, iterations })
        }
    }
}

/// Extreme singular values `(σ_d, σ_1)` of the signal part `P_U W`.
///
/// Calibration utility for synthetic runs where the true subspace is known:
/// taking the min/max over a horizon gives tight `σ̲, σ̄`.
pub fn signal_bounds(data: &DMatrix<f64>, truth: &Subspace) -> Result<(f64, f64)> {
    if data.nrows() != truth.ambient_dim() {
        return Err(Error::DimensionMismatch(format!(
            "data rows {} vs ambient dimension {}",
            data.nrows(),
            truth.ambient_dim()
        )));
    }
    // singular values of U (U^T W) equal those of U^T W
    let coeffs = truth.basis().transpose() * data;
    let sv = singular_values(&coeffs);
    let d = truth.dim();
    Ok((sv[d - 1], sv[0]))
}
