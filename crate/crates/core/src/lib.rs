//! Hessian bounds for Laplacian eigenfunctions on model manifolds with boundary,
//! with Monte Carlo verification of the underlying stochastic representations.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod numeric;
pub mod pathwise;
pub mod spectra;

pub use error::{Error, Result};
