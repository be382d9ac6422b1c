//! Behavioral-systems layer: Hankel matrices, restricted behaviors of linear
//! time-varying systems, trajectory stacking, and the subspace predictor.
//!
//! A linear time-varying system
//!
//! `x_{t+1} = A_t x_t + B_t v_t`, `y_t = C_t x_t + D_t v_t`
//!
//! maps `(x_t, v_{[t,t+L]})` to the stacked trajectory
//! `[v_{[t,t+L]}; y_{[t,t+L]}]` through the matrix
//! `Λ_t = [[0, I]; [O_{[t,t+L]}, T_{[t,t+L]}]]`, whose column space is the
//! *restricted behavior* on `[t, t+L]` — a subspace of dimension
//! `k + m(L+1)` whenever the observability block `O` has full column rank.
//! Tracking that subspace online is what ties the tracker to system
//! identification; predictions are read off the estimated basis through a
//! pseudoinverse (the classical subspace predictor).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grassmann::{orthonormalize, Subspace};
use crate::svd::{singular_values, thin_svd};

/// Relative tolerance for the observability rank check:
/// `σ_k(O) > OBSERVABILITY_TOL · σ_1(O)`.
pub const OBSERVABILITY_TOL: f64 = 1e-8;

/// Relative singular-value truncation used by the predictor pseudoinverse.
pub const PINV_TOL: f64 = 1e-10;

/// The four state-space matrices of one time step.
pub type SystemMatrices<'a> = (
    &'a DMatrix<f64>,
    &'a DMatrix<f64>,
    &'a DMatrix<f64>,
    &'a DMatrix<f64>,
);

/// Time-indexed sequence of state-space matrices `(A_t, B_t, C_t, D_t)`.
#[derive(Debug, Clone)]
pub struct LtvSystem {
    a: Vec<DMatrix<f64>>,
    b: Vec<DMatrix<f64>>,
    c: Vec<DMatrix<f64>>,
    d: Vec<DMatrix<f64>>,
}

impl LtvSystem {
    /// Builds a system from per-step matrices; all four sequences must have
    /// the same length and consistent dimensions.
    pub fn new(
        a: Vec<DMatrix<f64>>,
        b: Vec<DMatrix<f64>>,
        c: Vec<DMatrix<f64>>,
        d: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() || a.len() != c.len() || a.len() != d.len() {
            return Err(Error::InvalidParameter(
                "matrix sequences must be nonempty and equally long".into(),
            ));
        }
        let k = a[0].nrows();
        let m = b[0].ncols();
        let p = c[0].nrows();
        for t in 0..a.len() {
            let ok = a[t].shape() == (k, k)
                && b[t].shape() == (k, m)
                && c[t].shape() == (p, k)
                && d[t].shape() == (p, m);
            if !ok {
                return Err(Error::DimensionMismatch(format!(
                    "inconsistent matrix shapes at t = {t}"
                )));
            }
        }
        Ok(Self { a, b, c, d })
    }

    /// A time-invariant system replicated over `horizon` steps.
    pub fn lti(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        horizon: usize,
    ) -> Result<Self> {
        Self::new(
            vec![a; horizon],
            vec![b; horizon],
            vec![c; horizon],
            vec![d; horizon],
        )
    }

    /// Linear interpolation of every matrix entry between two endpoint
    /// systems over `horizon` steps.
    pub fn interpolated(
        first: (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>),
        last: (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>),
        horizon: usize,
    ) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::InvalidParameter(
                "interpolation needs a horizon of at least 2".into(),
            ));
        }
        let lerp = |x: &DMatrix<f64>, y: &DMatrix<f64>, w: f64| x * (1.0 - w) + y * w;
        let mut a = Vec::with_capacity(horizon);
        let mut b = Vec::with_capacity(horizon);
        let mut c = Vec::with_capacity(horizon);
        let mut d = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let w = t as f64 / (horizon - 1) as f64;
            a.push(lerp(&first.0, &last.0, w));
            b.push(lerp(&first.1, &last.1, w));
            c.push(lerp(&first.2, &last.2, w));
            d.push(lerp(&first.3, &last.3, w));
        }
        Self::new(a, b, c, d)
    }

    pub fn state_dim(&self) -> usize {
        self.a[0].nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b[0].ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.c[0].nrows()
    }

    /// Number of time steps the system is defined for.
    pub fn horizon(&self) -> usize {
        self.a.len()
    }

    pub fn matrices(&self, t: usize) -> Result<SystemMatrices<'_>> {
        if t >= self.horizon() {
            return Err(Error::HorizonExceeded {
                requested: t + 1,
                available: self.horizon(),
            });
        }
        Ok((&self.a[t], &self.b[t], &self.c[t], &self.d[t]))
    }

    /// Dimension of the restricted behavior over a window of length L+1,
    /// `k + m(L+1)`.
    pub fn behavior_dim(&self, window: usize) -> usize {
        self.state_dim() + self.input_dim() * (window + 1)
    }

    /// One step of the recursion at time `t`: returns `(x_{t+1}, y_t)`.
    pub fn step(
        &self,
        t: usize,
        x: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        let (a, b, c, d) = self.matrices(t)?;
        if x.len() != self.state_dim() || v.len() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "state/input lengths {}/{} vs dims {}/{}",
                x.len(),
                v.len(),
                self.state_dim(),
                self.input_dim()
            )));
        }
        Ok((a * x + b * v, c * x + d * v))
    }
}

/// Block Hankel matrix of depth `depth`: block entry `(i, j) = signal[i + j]`.
pub fn hankel(signal: &[DVector<f64>], depth: usize) -> Result<DMatrix<f64>> {
    if depth < 1 {
        return Err(Error::InvalidParameter("depth must be >= 1".into()));
    }
    if signal.len() < depth {
        return Err(Error::TooShort {
            len: signal.len(),
            depth,
        });
    }
    let q = signal[0].len();
    let cols = signal.len() - depth + 1;
    let mut h = DMatrix::zeros(q * depth, cols);
    for j in 0..cols {
        for i in 0..depth {
            h.view_mut((i * q, j), (q, 1)).copy_from(&signal[i + j]);
        }
    }
    Ok(h)
}

/// The observability block `O_{[t,t+L]} = [C_t; C_{t+1} A_t; …]` and the
/// forced-response block `T_{[t,t+L]}` (lower block triangular with `D` on
/// the diagonal and `C A… B` below).
fn response_blocks(
    sys: &LtvSystem,
    t: usize,
    window: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let l = window;
    if t + l >= sys.horizon() {
        return Err(Error::HorizonExceeded {
            requested: t + l + 1,
            available: sys.horizon(),
        });
    }
    let (k, m, p) = (sys.state_dim(), sys.input_dim(), sys.output_dim());
    let mut obs = DMatrix::zeros(p * (l + 1), k);
    // transition[i] = A_{t+i-1} ... A_t (identity for i = 0)
    let mut transition = vec![DMatrix::identity(k, k)];
    for i in 0..l {
        let next = &sys.a[t + i] * transition.last().expect("nonempty");
        transition.push(next);
    }
    for (i, reach) in transition.iter().enumerate() {
        obs.view_mut((i * p, 0), (p, k))
            .copy_from(&(&sys.c[t + i] * reach));
    }
    let mut forced = DMatrix::zeros(p * (l + 1), m * (l + 1));
    for i in 0..=l {
        for j in 0..=i {
            let block = if i == j {
                sys.d[t + i].clone()
            } else {
                // C_{t+i} A_{t+i-1} ... A_{t+j+1} B_{t+j}
                let mut prod = sys.b[t + j].clone();
                for q in (j + 1)..i {
                    prod = &sys.a[t + q] * prod;
                }
                &sys.c[t + i] * prod
            };
            forced.view_mut((i * p, j * m), (p, m)).copy_from(&block);
        }
    }
    Ok((obs, forced))
}

/// Orthonormal basis of the restricted behavior on `[t, t+window]`: the
/// column space of `Λ_t = [[0, I]; [O, T]]`, laid out as
/// `[all inputs; all outputs]` to match [`stack_sample`].
///
/// Fails with [`Error::Unobservable`] when `σ_k(O) ≤ OBSERVABILITY_TOL · σ_1(O)`.
pub fn restricted_behavior(sys: &LtvSystem, t: usize, window: usize) -> Result<Subspace> {
    let (k, m, p) = (sys.state_dim(), sys.input_dim(), sys.output_dim());
    let l = window;
    let (obs, forced) = response_blocks(sys, t, l)?;
    if k > 0 {
        let sv = singular_values(&obs);
        if sv[k - 1] <= OBSERVABILITY_TOL * sv[0] {
            return Err(Error::Unobservable {
                t,
                sigma_min: sv[k - 1],
            });
        }
    }
    let rows = (m + p) * (l + 1);
    let cols = k + m * (l + 1);
    let mut lambda = DMatrix::zeros(rows, cols);
    lambda
        .view_mut((0, k), (m * (l + 1), m * (l + 1)))
        .copy_from(&DMatrix::identity(m * (l + 1), m * (l + 1)));
    lambda
        .view_mut((m * (l + 1), 0), (p * (l + 1), k))
        .copy_from(&obs);
    lambda
        .view_mut((m * (l + 1), k), (p * (l + 1), m * (l + 1)))
        .copy_from(&forced);
    orthonormalize(&lambda)
}

/// Simulates the state recursion from `x0` under the given inputs,
/// starting at system time 0; returns the outputs.
pub fn ltv_simulate(
    sys: &LtvSystem,
    x0: &DVector<f64>,
    inputs: &[DVector<f64>],
) -> Result<Vec<DVector<f64>>> {
    if x0.len() != sys.state_dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial state length {} vs state dimension {}",
            x0.len(),
            sys.state_dim()
        )));
    }
    if inputs.len() > sys.horizon() {
        return Err(Error::HorizonExceeded {
            requested: inputs.len(),
            available: sys.horizon(),
        });
    }
    let mut x = x0.clone();
    let mut outputs = Vec::with_capacity(inputs.len());
    for (t, v) in inputs.iter().enumerate() {
        if v.len() != sys.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "input length {} vs input dimension {} at t = {t}",
                v.len(),
                sys.input_dim()
            )));
        }
        outputs.push(&sys.c[t] * &x + &sys.d[t] * v);
        x = &sys.a[t] * x + &sys.b[t] * v;
    }
    Ok(outputs)
}

/// Stacks matching input/output windows into one sample
/// `[all inputs oldest→newest; all outputs oldest→newest]`.
pub fn stack_sample(inputs: &[DVector<f64>], outputs: &[DVector<f64>]) -> Result<DVector<f64>> {
    if inputs.len() != outputs.len() {
        return Err(Error::LengthMismatch {
            left: inputs.len(),
            right: outputs.len(),
        });
    }
    if inputs.is_empty() {
        return Err(Error::Empty("trajectory window"));
    }
    let m = inputs[0].len();
    let p = outputs[0].len();
    let mut sample = DVector::zeros((m + p) * inputs.len());
    for (i, v) in inputs.iter().enumerate() {
        sample.rows_mut(i * m, m).copy_from(v);
    }
    let offset = m * inputs.len();
    for (i, y) in outputs.iter().enumerate() {
        sample.rows_mut(offset + i * p, p).copy_from(y);
    }
    Ok(sample)
}

/// Multi-step output predictor `ŷ_fut = M [v_ini; y_ini; v_fut]` extracted
/// from a behavior estimate.
#[derive(Debug, Clone)]
pub struct Predictor {
    matrix: DMatrix<f64>,
    input_dim: usize,
    output_dim: usize,
    t_ini: usize,
    t_fut: usize,
}

impl Predictor {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn t_ini(&self) -> usize {
        self.t_ini
    }

    pub fn t_fut(&self) -> usize {
        self.t_fut
    }

    /// Predicts the next `t_fut` outputs from the initial trajectory and the
    /// planned future inputs.
    pub fn predict(
        &self,
        v_ini: &[DVector<f64>],
        y_ini: &[DVector<f64>],
        v_fut: &[DVector<f64>],
    ) -> Result<Vec<DVector<f64>>> {
        if v_ini.len() != self.t_ini || y_ini.len() != self.t_ini || v_fut.len() != self.t_fut {
            return Err(Error::LengthMismatch {
                left: v_ini.len().min(y_ini.len()),
                right: self.t_ini,
            });
        }
        let m = self.input_dim;
        let p = self.output_dim;
        let mut rhs = DVector::zeros(m * self.t_ini + p * self.t_ini + m * self.t_fut);
        for (i, v) in v_ini.iter().enumerate() {
            rhs.rows_mut(i * m, m).copy_from(v);
        }
        let mut off = m * self.t_ini;
        for (i, y) in y_ini.iter().enumerate() {
            rhs.rows_mut(off + i * p, p).copy_from(y);
        }
        off += p * self.t_ini;
        for (i, v) in v_fut.iter().enumerate() {
            rhs.rows_mut(off + i * m, m).copy_from(v);
        }
        let flat = &self.matrix * rhs;
        Ok((0..self.t_fut)
            .map(|i| flat.rows(i * p, p).into_owned())
            .collect())
    }
}

/// Moore–Penrose pseudoinverse with singular values below
/// `PINV_TOL · σ_1` truncated.
fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = thin_svd(m);
    let cutoff = PINV_TOL * svd.sigma[0];
    let mut inv = DMatrix::zeros(svd.sigma.len(), svd.sigma.len());
    for i in 0..svd.sigma.len() {
        if svd.sigma[i] > cutoff {
            inv[(i, i)] = 1.0 / svd.sigma[i];
        }
    }
    &svd.v * inv * svd.u.transpose()
}

/// Extracts the subspace predictor from a behavior estimate built over
/// trajectories of length `t_ini + t_fut`:
/// `M = Û^{y_fut} · pinv([Û^{v_ini}; Û^{y_ini}; Û^{v_fut}])`.
pub fn predictor_from_subspace(
    est: &Subspace,
    input_dim: usize,
    output_dim: usize,
    t_ini: usize,
    t_fut: usize,
) -> Result<Predictor> {
    let window = t_ini + t_fut;
    let expected_rows = (input_dim + output_dim) * window;
    if est.ambient_dim() != expected_rows {
        return Err(Error::DimensionMismatch(format!(
            "estimate lives in R^{}, trajectory stacking needs R^{}",
            est.ambient_dim(),
            expected_rows
        )));
    }
    let basis = est.basis();
    let m = input_dim;
    let p = output_dim;
    let v_rows = m * window;
    let v_ini = basis.rows(0, m * t_ini);
    let v_fut = basis.rows(m * t_ini, m * t_fut);
    let y_ini = basis.rows(v_rows, p * t_ini);
    let y_fut = basis.rows(v_rows + p * t_ini, p * t_fut);
    let mut stacked = DMatrix::zeros(m * t_ini + p * t_ini + m * t_fut, est.dim());
    stacked
        .view_mut((0, 0), (m * t_ini, est.dim()))
        .copy_from(&v_ini);
    stacked
        .view_mut((m * t_ini, 0), (p * t_ini, est.dim()))
        .copy_from(&y_ini);
    stacked
        .view_mut((m * t_ini + p * t_ini, 0), (m * t_fut, est.dim()))
        .copy_from(&v_fut);
    let matrix = y_fut.into_owned() * pseudo_inverse(&stacked);
    Ok(Predictor {
        matrix,
        input_dim,
        output_dim,
        t_ini,
        t_fut,
    })
}

/// Relative prediction error `sqrt(Σ‖ŷ−y‖² / Σ‖y‖²)`.
pub fn relative_prediction_error(
    predicted: &[DVector<f64>],
    actual: &[DVector<f64>],
) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: actual.len(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, a) in predicted.iter().zip(actual) {
        if p.len() != a.len() {
            return Err(Error::LengthMismatch {
                left: p.len(),
                right: a.len(),
            });
        }
        num += (p - a).norm_squared();
        den += a.norm_squared();
    }
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((num / den).sqrt())
}
