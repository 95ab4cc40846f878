//! Stein's-method normal approximation bounds driven by size-bias couplings.

pub mod apps;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod quadrature;
pub mod size_bias;
pub mod stein;
pub mod test_functions;

pub use error::{Error, Result};
