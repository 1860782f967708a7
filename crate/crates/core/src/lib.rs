//! Random walks on one-way oriented half-plane lattices.

pub mod analytic;
pub mod error;
pub mod lattice;

pub use error::{Error, Result};
pub use lattice::LatticePoint;
pub mod rng;
pub mod simulate;
pub mod quadrature;
pub mod green;
pub mod martin;
pub mod verify;
pub mod cli;
