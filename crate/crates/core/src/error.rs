use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("sampling distribution does not sum to one (sum = {sum})")]
    ImpureSource { sum: f64 },

    #[error("invalid Pauli label {label} for {qubits} qubits")]
    InvalidLabel { label: usize, qubits: usize },

    #[error("qubit count {0} outside supported range 1..={max}", max = crate::clifford::MAX_QUBITS)]
    QubitCount(usize),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty gate sequence")]
    EmptySequence,

    #[error("decay fit failed: {0}")]
    FitFailure(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
