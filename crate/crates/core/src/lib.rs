//! Riemannian Gaussian distributions and finite mixtures on the hyperboloid
//! model of hyperbolic space.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod eval;
pub mod gaussian;
pub mod geometry;
pub mod io;
pub mod mixture;
pub mod normalizer;

pub use error::{Error, Result};
pub use geometry::{HyperPoint, PoincarePoint, TangentVec, WeightedSample};
pub use gaussian::{GaussianParams, ScaleBox};
pub use normalizer::{Method, RadialModel};
