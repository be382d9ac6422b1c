//! Coordinate-free subspace arithmetic on the Grassmann manifold Gr(n, d).
//!
//! A point of Gr(n, d) is represented by an orthonormal basis matrix
//! `U ∈ R^{n×d}`, `UᵀU = I_d`. All quantities computed here (distances,
//! projections, geodesics) are invariant under the choice of basis.
//!
//! Distances are derived from the principal angles `0 ≤ θ_1 ≤ … ≤ θ_d ≤ π/2`
//! between two subspaces:
//!
//! - chordal: `d₂(U, V) = sqrt(Σ sin²θ_i) = sqrt(tr(P_U^⊥ P_V))`,
//! - gap: `d_∞(U, V) = sin θ_d = ‖P_U − P_V‖₂`,
//!
//! where `P_U = UUᵀ` is the orthogonal projector onto the subspace. The
//! distance routines work with the singular values of `P_U^⊥ V`, which are
//! exactly `sin θ_i`; unlike the arccos of `σ(UᵀV)` this stays accurate when
//! the subspaces nearly coincide, which is where the tracker operates.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::svd::{singular_values, thin_svd};

/// Frobenius tolerance on `‖UᵀU − I_d‖` accepted by [`Subspace::new`].
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// Relative rank tolerance: a matrix is full column rank when
/// `σ_d > RANK_TOL · σ_1`.
pub const RANK_TOL: f64 = 1e-10;

/// Gradient norms below this are treated as zero by descent steps.
pub const ZERO_GRADIENT_TOL: f64 = 1e-14;

/// A d-dimensional subspace of R^n held as an orthonormal n×d basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Wraps an already orthonormal basis, verifying `‖BᵀB − I‖_F` against
    /// [`ORTHONORMALITY_TOL`] and `1 ≤ d ≤ n`.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(basis, ORTHONORMALITY_TOL)
    }

    /// Same as [`Subspace::new`] with a caller-chosen orthonormality tolerance.
    pub fn with_tolerance(basis: DMatrix<f64>, tol: f64) -> Result<Self> {
        let (n, d) = basis.shape();
        if d < 1 || d > n {
            return Err(Error::InvalidParameter(format!(
                "subspace dimension must satisfy 1 <= d <= n, got d={d}, n={n}"
            )));
        }
        let gram = basis.transpose() * &basis;
        let defect = (&gram - DMatrix::identity(d, d)).norm();
        if defect > tol {
            return Err(Error::InvalidParameter(format!(
                "basis not orthonormal: ||U^T U - I||_F = {defect:.3e} > {tol:.1e}"
            )));
        }
        Ok(Self { basis })
    }

    /// Internal constructor for bases coming out of QR/SVD factorizations.
    pub(crate) fn from_orthonormal(basis: DMatrix<f64>) -> Self {
        debug_assert!(
            (basis.transpose() * &basis - DMatrix::identity(basis.ncols(), basis.ncols())).norm()
                <= 1e-9
        );
        Self { basis }
    }

    /// The orthonormal basis matrix.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Ambient dimension n.
    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Subspace dimension d.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthogonal projection `P_U x = U(Uᵀx)`.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} vs ambient dimension {}",
                x.len(),
                self.ambient_dim()
            )));
        }
        Ok(&self.basis * (self.basis.transpose() * x))
    }

    /// Complement projection `P_U^⊥ x = x − U(Uᵀx)`.
    pub fn complement_project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(x - self.project(x)?)
    }

    /// Applies `P_U^⊥` to every column of a matrix.
    pub fn complement_project_matrix(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.nrows() != self.ambient_dim() {
            return Err(Error::DimensionMismatch(format!(
                "matrix rows {} vs ambient dimension {}",
                m.nrows(),
                self.ambient_dim()
            )));
        }
        Ok(m - &self.basis * (self.basis.transpose() * m))
    }
}

/// A tangent vector at a base subspace: an n×d matrix with `UᵀV = 0`.
#[derive(Debug, Clone)]
pub struct TangentVector {
    base: Subspace,
    direction: DMatrix<f64>,
}

/// Frobenius tolerance on `‖UᵀV‖` accepted by [`TangentVector::new`].
pub const TANGENCY_TOL: f64 = 1e-10;

impl TangentVector {
    /// Wraps a direction matrix after verifying tangency at `base`.
    pub fn new(base: Subspace, direction: DMatrix<f64>) -> Result<Self> {
        if direction.shape() != base.basis().shape() {
            return Err(Error::DimensionMismatch(format!(
                "direction shape {:?} vs base shape {:?}",
                direction.shape(),
                base.basis().shape()
            )));
        }
        let defect = (base.basis().transpose() * &direction).norm();
        if defect > TANGENCY_TOL {
            return Err(Error::InvalidParameter(format!(
                "direction not tangent: ||U^T V||_F = {defect:.3e}"
            )));
        }
        Ok(Self { base, direction })
    }

    pub(crate) fn from_parts(base: Subspace, direction: DMatrix<f64>) -> Self {
        Self { base, direction }
    }

    pub fn base(&self) -> &Subspace {
        &self.base
    }

    pub fn direction(&self) -> &DMatrix<f64> {
        &self.direction
    }

    /// Frobenius norm of the direction.
    pub fn norm(&self) -> f64 {
        self.direction.norm()
    }

    /// Spectral norm (largest singular value) of the direction.
    pub fn spectral_norm(&self) -> f64 {
        singular_values(&self.direction)[0]
    }
}

/// Principal angles between two equal-dimensional subspaces,
/// sorted ascending in `[0, π/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalAngles {
    angles: Vec<f64>,
}

impl PrincipalAngles {
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// The largest principal angle θ_d.
    pub fn largest(&self) -> f64 {
        *self.angles.last().expect("d >= 1")
    }
}

fn check_same_shape(u: &Subspace, v: &Subspace) -> Result<()> {
    if u.ambient_dim() != v.ambient_dim() || u.dim() != v.dim() {
        return Err(Error::DimensionMismatch(format!(
            "Gr({}, {}) vs Gr({}, {})",
            u.ambient_dim(),
            u.dim(),
            v.ambient_dim(),
            v.dim()
        )));
    }
    Ok(())
}

/// Canonical orthonormal basis for the column space of `m`, computed by SVD.
///
/// Fails with [`Error::RankDeficient`] when `σ_d(m) ≤ RANK_TOL · σ_1(m)`.
pub fn orthonormalize(m: &DMatrix<f64>) -> Result<Subspace> {
    orthonormalize_with_tol(m, RANK_TOL)
}

/// [`orthonormalize`] with a caller-chosen relative rank tolerance.
pub fn orthonormalize_with_tol(m: &DMatrix<f64>, rel_tol: f64) -> Result<Subspace> {
    let (n, d) = m.shape();
    if d < 1 || d > n {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= d <= n, got n={n}, d={d}"
        )));
    }
    let svd = thin_svd(m);
    let tol = rel_tol * svd.sigma[0];
    if svd.sigma[d - 1] <= tol {
        return Err(Error::RankDeficient {
            sigma_min: svd.sigma[d - 1],
            tol,
        });
    }
    Ok(Subspace::from_orthonormal(svd.u))
}

/// Principal angles via `θ_i = arccos(σ_{d−i+1}(UᵀV))`, cosines clamped to
/// `[0, 1]` to absorb SVD round-off.
pub fn principal_angles(u: &Subspace, v: &Subspace) -> Result<PrincipalAngles> {
    check_same_shape(u, v)?;
    let product = u.basis().transpose() * v.basis();
    let mut sigma: Vec<f64> = singular_values(&product)
        .iter()
        .map(|s| s.clamp(0.0, 1.0).acos())
        .collect();
    // singular values come out descending, so the angles are already ascending
    sigma.sort_by(|a, b| a.partial_cmp(b).expect("angles are finite"));
    Ok(PrincipalAngles { angles: sigma })
}

/// Sines of the principal angles, ascending. These are the singular values of
/// `P_U^⊥ V` and stay accurate for nearly coincident subspaces.
fn principal_sines(u: &Subspace, v: &Subspace) -> Result<Vec<f64>> {
    check_same_shape(u, v)?;
    let residual = v.basis() - u.basis() * (u.basis().transpose() * v.basis());
    let mut sines: Vec<f64> = singular_values(&residual)
        .iter()
        .map(|s| s.min(1.0))
        .collect();
    sines.sort_by(|a, b| a.partial_cmp(b).expect("sines are finite"));
    Ok(sines)
}

/// Chordal distance `d₂(U, V) = sqrt(Σ sin²θ_i)`.
pub fn chordal_distance(u: &Subspace, v: &Subspace) -> Result<f64> {
    let sines = principal_sines(u, v)?;
    Ok(sines.iter().map(|s| s * s).sum::<f64>().sqrt())
}

/// Gap distance `d_∞(U, V) = sin θ_d = ‖P_U − P_V‖₂`.
pub fn gap_distance(u: &Subspace, v: &Subspace) -> Result<f64> {
    let sines = principal_sines(u, v)?;
    Ok(*sines.last().expect("d >= 1"))
}

/// Projects an ambient matrix onto the tangent space at `u`:
/// `V = (I − UUᵀ) M`.
pub fn tangent_project(u: &Subspace, m: &DMatrix<f64>) -> Result<TangentVector> {
    if m.shape() != u.basis().shape() {
        return Err(Error::DimensionMismatch(format!(
            "matrix shape {:?} vs basis shape {:?}",
            m.shape(),
            u.basis().shape()
        )));
    }
    let direction = u.complement_project_matrix(m)?;
    Ok(TangentVector::from_parts(u.clone(), direction))
}

/// Moves along the geodesic from the base of `v` in direction `scale · v`.
///
/// With the compact SVD `scale · V = Q₁ S Q₂ᵀ`, the new basis is
/// `[U Q₂  Q₁] [diag cos(s_i); diag sin(s_i)] Q₂ᵀ`. Zero singular values
/// leave the corresponding base directions untouched (`cos 0 = 1`,
/// `sin 0 = 0`, and the spurious columns of `Q₁` are multiplied by zero).
/// The result is re-orthonormalized by QR so drift does not accumulate over
/// long runs.
pub fn exp_map(v: &TangentVector, scale: f64) -> Subspace {
    let base = v.base().basis();
    let d = base.ncols();
    let svd = thin_svd(&(v.direction() * scale));

    // (U Q2) diag(cos) Q2^T + Q1 diag(sin) Q2^T
    let mut rotated = base * &svd.v;
    let mut lifted = svd.u;
    for i in 0..d {
        let (c, s) = (svd.sigma[i].cos(), svd.sigma[i].sin());
        rotated.column_mut(i).scale_mut(c);
        lifted.column_mut(i).scale_mut(s);
    }
    let updated = (rotated + lifted) * svd.v.transpose();
    Subspace::from_orthonormal(updated.qr().q())
}
