//! Thermodynamic formalism for finite-range potentials on full shifts:
//! pressure and equilibrium states, rotation sets and their faces, localized
//! entropy, and zero-temperature limits of Gibbs–Markov chains.

pub mod annealing;
pub mod cli;
pub mod error;
pub mod example1;
pub mod geometry;
pub mod localized;
pub mod maximizing;
pub mod symbolic;
pub mod transfer;

pub use error::{Error, Result};
