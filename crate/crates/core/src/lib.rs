//! Numerical laboratory for eigenfunction concentration on surfaces.
//!
//! The crate builds explicit eigenfunctions on the round sphere and the
//! flat torus, geodesic tubes of width `lambda^{-1/2}` about unit-length
//! geodesics, and the functionals that compare them: `L^p` norms, `L^2`
//! restriction to geodesics, tube masses and the Kakeya–Nikodym maximal
//! average. The `oscillatory` module probes the analytic ingredients
//! (Carleson–Sjölin determinant, bilinear kernel decay, almost
//! orthogonality), and `experiments` assembles scaling ledgers.

pub mod error;
pub mod geometry;
pub mod quadrature;

pub use error::{Error, Result};
pub mod eigenfunctions;
pub mod experiments;
pub mod functionals;
pub mod oscillatory;
