pub mod channel;
pub mod config;
pub mod dense;
pub mod error;
pub mod expectation;
pub mod experiments;
pub mod oruc_learning;
pub mod pauli;
pub mod pauli_learning;
pub mod ptm;
pub mod sparse;
pub mod spec_file;
pub mod unitary_learning;

pub use error::{Error, Result};
