//! Conformal blowups of metrics on the 3-sphere.
//!
//! The crate builds symmetry-reduced metrics (round, Berger, conformally round),
//! solves for the Green's function of the conformal Laplacian, sweeps distance
//! level sets in the blowup `G^4 g` for mean-curvature barriers, and evaluates
//! the Yamabe and Sobolev-type functionals together with explicit inverse mean
//! curvature flows on Schwarzschild models.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod blowup;
pub mod curvature;
pub mod distance;
pub mod error;
pub mod functionals;
pub mod green;
pub mod grid;
pub mod imcf;
pub mod linalg;
pub mod metric;
pub mod operator;
pub mod quadrature;

pub use curvature::{curvature, vmax_rescaling, volume, CurvatureReport, VmaxBound};
pub use error::{Error, Result};
pub use grid::{HopfGrid, ScalarField};
pub use metric::{build_metric, ConformalFactor, MetricField, MetricSpec};
