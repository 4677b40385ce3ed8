//! Numerics for thermalizing open quantum spin systems: Gibbs states of
//! local Hamiltonians on graphs, Davies and Schmidt generators, clustering
//! measures, entropy decay and approximate tensorization.

pub mod correlations;
pub mod davies;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod hamiltonian;
pub mod lattice;
pub mod linalg;
pub mod operator;
pub mod par;
pub mod schmidt;
pub mod superop;
pub mod tensor;
pub mod tensorization;

pub use error::{Error, Result};
