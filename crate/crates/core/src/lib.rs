//! Online tracking of time-varying subspaces on the Grassmann manifold.
//!
//! The crate provides:
//!
//! - [`grassmann`]: subspace representations, metrics, tangent projections
//!   and the exponential map;
//! - [`window`]: sliding data windows with covariance maintained by rank-2
//!   (or discounted rank-1) updates;
//! - [`great`]: the tracker itself — projection-error cost, Riemannian
//!   gradient descent, and the outer streaming loop;
//! - [`certs`]: closed-form certificates — noise bounds, decay rates,
//!   feasibility checks, invariant-tube radii and step-size tuning;
//! - [`behavior`]: the behavioral-systems layer for online identification of
//!   linear time-varying systems (Hankel matrices, restricted behaviors,
//!   subspace predictors);
//! - [`simgen`]: seeded generators for synthetic experiments;
//! - [`baselines`]: GROUSE and PAST reference trackers.

pub mod baselines;
pub mod behavior;
pub mod certs;
pub mod error;
pub mod grassmann;
pub mod great;
pub mod simgen;
pub mod svd;
pub mod window;

pub use error::{Error, Result};
pub use grassmann::{
    chordal_distance, exp_map, gap_distance, orthonormalize, principal_angles, tangent_project,
    PrincipalAngles, Subspace, TangentVector,
};
pub use great::{Tracker, TrackerConfig};
pub use window::{DataWindow, DiscountedWindow};
