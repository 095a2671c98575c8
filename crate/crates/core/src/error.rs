use alloc::string::String;
use core::fmt;

/// Errors produced by the simulation and analysis layers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand dimensions do not match (state vs. gate, state vs. state, ...).
    DimensionMismatch { expected: usize, found: usize },
    /// A qutrit index is outside the register.
    IndexOutOfRange { index: usize, n_qutrits: usize },
    /// A two-qutrit instruction uses a pair not present in the connectivity.
    ConnectivityViolation { control: usize, target: usize },
    /// A base-3 digit string contains a character other than 0, 1, 2.
    InvalidTrit { position: usize },
    /// A probability or probability vector is invalid.
    InvalidProbability(String),
    /// The readout confusion matrix is singular or too ill-conditioned to invert.
    IllConditioned { condition: f64 },
    /// A phase was requested for a matrix element with (numerically) zero modulus.
    UndefinedPhase,
    /// Input data is outside its physically meaningful range.
    DataOutOfRange(String),
    /// A required density-matrix element is missing.
    MissingElement(String),
    /// A state contains a basis string with all three levels and cannot be
    /// drawn as a clock frame.
    NotClockRepresentable { basis_index: usize },
    /// Configuration field rejected by validation.
    InvalidConfig(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::IndexOutOfRange { index, n_qutrits } => {
                write!(f, "qutrit index {index} out of range for {n_qutrits} qutrits")
            }
            Error::ConnectivityViolation { control, target } => {
                write!(f, "pair ({control}, {target}) is not in the device connectivity")
            }
            Error::InvalidTrit { position } => {
                write!(f, "invalid base-3 digit at position {position}")
            }
            Error::InvalidProbability(msg) => write!(f, "invalid probability: {msg}"),
            Error::IllConditioned { condition } => {
                write!(f, "confusion matrix is ill-conditioned (condition ~ {condition:.3e})")
            }
            Error::UndefinedPhase => {
                write!(f, "matrix element has zero modulus; its phase is undefined")
            }
            Error::DataOutOfRange(msg) => write!(f, "data out of range: {msg}"),
            Error::MissingElement(msg) => write!(f, "missing density-matrix element: {msg}"),
            Error::NotClockRepresentable { basis_index } => {
                write!(
                    f,
                    "basis state {basis_index} uses all three levels; state is not clock-representable"
                )
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
