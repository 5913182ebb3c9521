//! Finite-dimensional toolkit for contexts of mutually exclusive outcomes:
//! transition-probability matrices, unistochastic and orthostochastic fits,
//! spin and cyclic-translation representations, and a seeded Monte Carlo
//! simulator of sequential projective measurements.

pub mod cli;
pub mod context;
pub mod error;
pub mod fit;
pub mod format;
pub mod group;
pub mod linalg;
pub mod matrix;
pub mod observable;
pub mod rng;
pub mod sim;
pub mod transition;

pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, RealMatrix};
