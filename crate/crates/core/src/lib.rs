//! Counting negative eigenvalues of two-dimensional Schrödinger operators
//! `-Δ - αV` with radial `V ≥ 0`, via channel decomposition and the
//! logarithmic substitution `r = e^t`.

pub mod asymptotics;
pub mod bounds;
pub mod channels;
pub mod cli;
pub mod config;
pub mod error;
pub mod potential;
pub mod quad;
pub mod spectral1d;
pub mod weakseq;

pub use error::{Error, Result};
