//! Quantum singular value transformation based Hamiltonian simulation,
//! emulated on dense statevectors, with an application to the linearized
//! Vlasov-Poisson system.

pub mod error;
pub mod polyapprox;
pub mod qsp;
pub mod simulator;
pub mod hs;
pub mod vlasov;
pub mod baseline;
pub mod verify;
pub mod cli;

pub use error::{Error, Result};
