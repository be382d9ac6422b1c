//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by subspace operations, the tracker, and the
/// certificate machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Operand shapes are incompatible.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A matrix that must have full column rank does not.
    #[error("rank deficient: smallest singular value {sigma_min:.3e} below tolerance {tol:.3e}")]
    RankDeficient { sigma_min: f64, tol: f64 },

    /// A container that must hold at least one element is empty.
    #[error("empty: {0}")]
    Empty(&'static str),

    /// A signal is too short for the requested block depth.
    #[error("signal of length {len} too short for depth {depth}")]
    TooShort { len: usize, depth: usize },

    /// The observability matrix over the requested window is rank deficient.
    #[error("system unobservable on window starting at t={t}: sigma_k = {sigma_min:.3e}")]
    Unobservable { t: usize, sigma_min: f64 },

    /// A simulation or behavior query runs past the system's defined horizon.
    #[error("horizon exceeded: requested {requested}, system defines {available}")]
    HorizonExceeded { requested: usize, available: usize },

    /// Paired sequences differ in length.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// The reference signal in a relative error is identically zero.
    #[error("reference signal has zero energy")]
    ZeroReference,

    /// The contraction factor left [0, 1); the certificate does not apply.
    #[error("invalid contraction factor rho_tilde = {0} (must lie in [0, 1))")]
    InvalidRho(f64),

    /// The signal-to-noise condition required by the certificates fails.
    #[error("certificate assumption violated: slack = {slack:.6e}")]
    AssumptionViolated { slack: f64 },

    /// No step size in the admissible interval satisfies the assumptions.
    #[error("no feasible step size in (0, {upper:.6e})")]
    Infeasible { upper: f64 },

    /// A requested subspace distance cannot be realized.
    #[error("target distance {target} unreachable (maximum {max:.6})")]
    Unreachable { target: f64, max: f64 },

    /// A hyperparameter grid is empty.
    #[error("hyperparameter grid is empty")]
    EmptyGrid,

    /// A parameter violates its documented invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
