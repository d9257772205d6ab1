//! Spectral solver and verification harness for Schrödinger operators
//! `-Δ + dist(x, Σ)²` with compact potential wells `Σ`.

pub mod bounds;
pub mod cli;
pub mod eigensolver;
pub mod error;
pub mod grid_op;
pub mod oscillator;
pub mod par;
pub mod wells;

pub use error::{Error, NotConverged, Result};
