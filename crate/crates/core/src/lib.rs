//! Volume comparison laboratory for Lorentzian and Riemannian manifolds.
//!
//! Radial geodesics are integrated with a parallel frame, the matrix Jacobi
//! equation is solved along each of them, and volumes of star-shaped
//! exponential images are computed by polar quadrature and compared against
//! the constant-curvature models.

pub mod comparison;
pub mod curvature_models;
pub mod error;
pub mod expansions;
pub mod geodesic;
pub mod jacobi;
pub mod jet;
pub mod metric;
pub mod models;
pub mod ode;
pub mod quadrature;
pub mod sclv;

pub use error::{Error, Result};
pub use metric::{CoordinateMetric, PlaneSpec};
pub use models::{ModelConstants, SignatureMode};
