//! Quantum tunneling through chains of one-dimensional barriers.

pub mod cli;
pub mod compose;
pub mod error;
pub mod ode;
pub mod oracle;
pub mod potential;
pub mod resonance;
pub mod riccati;
pub mod roots;
pub mod spectra;
pub mod units;

pub use error::{Error, Result};
