//! Exterior acoustic radiation in 2D by substructure deletion, with the
//! bounding-contour impedance computed by the finite-element cloning
//! algorithm.
//!
//! Time dependence is `exp(-i omega t)`; outgoing waves are `H_n = J_n + i Y_n`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cloning;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod sdm;
pub mod specfun;
pub mod validate;

pub use cloning::{exterior_impedance, CloningConfig, ImpedanceMatrix};
pub use error::{Error, Result};
pub use fem::{FrequencyPoint, Medium};
pub use mesh::{BoundaryLoop, Mesh2D, Point2};
pub use sdm::{sdm_impedance, sdm_solve, Excitation, RadiationProblem};
