//! Scalar arithmetic, series summation and quadrature primitives.

pub mod logreal;
pub mod quadrature;
pub mod series;
pub mod special;

pub use logreal::{log_sum_exp, LogReal, LogSum};
pub use quadrature::{integrate_adaptive, integrate_adaptive_detailed, integrate_real, Integral, QuadratureSpec};
pub use series::{IndexMoments, LnMoments, SeriesWindow, SERIES_REL_CUT};
pub use special::{ln_binomial, ln_factorial, ln_gamma};
