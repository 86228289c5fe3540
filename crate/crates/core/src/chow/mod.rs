//! λ-centers of mass of torus-symmetric cycles, the balancing flow, and the
//! configurations fixing the critical λ.

pub mod config;
pub mod flow;
pub mod moments;
pub mod theorem;

pub use config::*;
pub use flow::*;
pub use moments::*;
pub use theorem::*;
