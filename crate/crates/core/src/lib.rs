//! Finite-n correlation kernels for invariant β = 1, 2 ensembles with even
//! one-cut potentials, and their Airy edge limits.

pub mod airy;
pub mod error;
pub mod fredholm;
pub mod orthopoly;
pub mod potential;
pub mod quadrature;
pub mod sampler;
pub mod skewkernel;
pub mod toeplitz_rep;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
