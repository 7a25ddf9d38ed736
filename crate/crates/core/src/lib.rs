//! Unitary dynamics of finite spin-1/2 chains under a non-integrable
//! Ising-like Hamiltonian, together with the observable-equilibration
//! machinery built on top of it: outcome distributions, observable
//! entropy, equilibration complexity measures, effective dimension, and
//! the spectral bounds that control them.
//!
//! The crate is organized bottom-up:
//!
//! - [`hilbert`]: computational basis, Pauli embeddings, product states
//! - [`hamiltonian`]: the Ising-like chain, its spectral decomposition,
//!   and gap statistics
//! - [`dynamics`]: eigenbasis time evolution, the dephased equilibrium
//!   state, effective dimension, finite-time averaging
//! - [`observables`]: observable decompositions and outcome probabilities
//! - [`complexity`]: observable entropy, the equilibration complexity
//!   measure and its analytical bounds
//! - [`typicality`]: Haar-random states and the Monte Carlo deviation
//!   experiment
//! - [`experiment`]: the configuration-driven batch runner behind the CLI

pub mod complexity;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod hamiltonian;
pub mod hilbert;
pub mod observables;
pub mod typicality;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
