//! Baseline trackers for comparison: GROUSE, the rank-one Grassmannian
//! gradient step (equivalent to the window tracker with T = 1), and PAST,
//! the projection-approximation recursive-least-squares tracker over
//! non-orthonormal representations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grassmann::{orthonormalize, Subspace, ZERO_GRADIENT_TOL};

/// One GROUSE step: the descent step on the single-sample cost
/// `‖P_Û^⊥ u‖²`, whose gradient `−2 (P_Û^⊥ u)(Ûᵀu)ᵀ` is rank one. The
/// geodesic update is applied in closed form at O(nd) cost:
///
/// `Û⁺ = Û + ((cos(ασ) − 1) Û b̂ + sin(ασ) â) b̂ᵀ`
///
/// with `â, b̂` the unit residual/coefficient vectors and `σ = 2‖r‖‖y‖` the
/// gradient's only singular value.
pub fn grouse_step(est: &Subspace, u: &DVector<f64>, alpha: f64) -> Result<Subspace> {
    if u.len() != est.ambient_dim() {
        return Err(Error::DimensionMismatch(format!(
            "sample length {} vs ambient dimension {}",
            u.len(),
            est.ambient_dim()
        )));
    }
    if alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive, got {alpha}"
        )));
    }
    let y = est.basis().transpose() * u; // coefficients
    let r = u - est.basis() * &y; // residual
    let (rn, yn) = (r.norm(), y.norm());
    let sigma = 2.0 * rn * yn; // gradient norm
    if sigma < ZERO_GRADIENT_TOL {
        return Ok(est.clone());
    }
    let a_hat = r / rn;
    let b_hat = y / yn;
    let angle = alpha * sigma;
    let along = est.basis() * &b_hat;
    let delta = (along * (angle.cos() - 1.0) + a_hat * angle.sin()) * b_hat.transpose();
    Ok(Subspace::from_orthonormal(est.basis() + delta))
}

/// State of the PAST recursion: a non-orthonormal weight matrix `W` and the
/// inverse correlation `P`, discounted by a forgetting factor β.
#[derive(Debug, Clone)]
pub struct PastState {
    weights: DMatrix<f64>,
    inverse_correlation: DMatrix<f64>,
    forget: f64,
}

/// Initial scale of the inverse correlation, `P₀ = PAST_P0 · I`.
pub const PAST_P0: f64 = 1e3;

impl PastState {
    /// Starts from the basis of `initial` with `P = 1e3 · I`.
    pub fn new(initial: &Subspace, forget: f64) -> Result<Self> {
        if !(forget > 0.0 && forget <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "forgetting factor must lie in (0, 1], got {forget}"
            )));
        }
        Ok(Self {
            weights: initial.basis().clone(),
            inverse_correlation: DMatrix::identity(initial.dim(), initial.dim()) * PAST_P0,
            forget,
        })
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn inverse_correlation(&self) -> &DMatrix<f64> {
        &self.inverse_correlation
    }

    pub fn forget(&self) -> f64 {
        self.forget
    }

    /// One RLS update:
    /// `y = Wᵀu`, `h = P y`, `g = h/(β + yᵀh)`,
    /// `P ← (P − g hᵀ)/β` (symmetrized), `W ← W + (u − W y) gᵀ`.
    pub fn step(&mut self, u: &DVector<f64>) -> Result<()> {
        if u.len() != self.weights.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "sample length {} vs ambient dimension {}",
                u.len(),
                self.weights.nrows()
            )));
        }
        let y = self.weights.transpose() * u;
        let h = &self.inverse_correlation * &y;
        let g = &h / (self.forget + y.dot(&h));
        let mut p = (&self.inverse_correlation - &g * h.transpose()) / self.forget;
        p = (&p + p.transpose()) * 0.5;
        self.inverse_correlation = p;
        let innovation = u - &self.weights * &y;
        self.weights += innovation * g.transpose();
        Ok(())
    }

    /// The tracked subspace, `orthonormalize(W)`.
    pub fn subspace(&self) -> Result<Subspace> {
        orthonormalize(&self.weights)
    }
}
