use thiserror::Error;

/// Errors raised by the channel simulation and learning routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit count mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid Pauli label character {0:?}")]
    InvalidLabel(char),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("max weight {max_weight} exceeds qubit count {n}")]
    WeightTooLarge { max_weight: usize, n: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not square with power-of-two dimension (got {rows}x{cols})")]
    NotQubitOperator { rows: usize, cols: usize },

    #[error("{n} qubits exceeds the dense limit of {limit}")]
    DenseLimit { n: usize, limit: usize },

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("Pauli string {0} contains letters other than I and Z")]
    NotDiagonal(String),

    #[error("Pauli string {0} must have full weight")]
    NotFullWeight(String),

    #[error("unknown or non-Clifford gate label {0:?}")]
    NonClifford(String),

    #[error("probability support must be the full Pauli set in canonical order")]
    IncompleteSupport,

    #[error("sign matrix restricted to this support is singular")]
    SingularSignMatrix,

    #[error("shot budget {shots} is smaller than the {states} input states")]
    TooFewShots { shots: usize, states: usize },

    #[error("{0} is only supported for a single qubit")]
    SingleQubitOnly(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
