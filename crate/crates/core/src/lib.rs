//! Feynman-Kac path integrals over Brownian bridges, a dense lattice
//! reference, and numerical checks of three kernel and density-of-states
//! bounds: the diamagnetic inequality, the quasi-classical bound on the
//! integrated density of states for Gaussian disorder, and the planar
//! diamagnetic monotonicity for fields depending on one coordinate.

// `!(x > 0.0)` is used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod ids;
pub mod inequalities;
pub mod kernel;
pub mod oracle;
pub mod paths;
pub mod potentials;
pub mod rng;
pub mod stats;
pub mod verification;

pub use error::{Error, Result};
