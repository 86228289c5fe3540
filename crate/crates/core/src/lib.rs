//! Model Bergman kernels on the hyperbolic punctured disk, the center-of-mass
//! integrals of its monomial sections, and λ-balanced log pairs in projective
//! space.
//!
//! Layout:
//! - [`numerics`]: log-space scalars, series and adaptive quadrature.
//! - [`model`]: the punctured-disk kernel, ladder cells and the neck functions.
//! - [`cylinder`]: the flat ℂ* model of the neck.
//! - [`chow`]: moment matrices, λ-centers of mass and the balancing flow.
//! - [`energy`]: the deviation model for the balancing energy of a log curve.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chow;
pub mod cylinder;
pub mod energy;
pub mod error;
pub mod model;
pub mod numerics;

pub use error::{Error, Result};
