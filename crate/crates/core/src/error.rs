use thiserror::Error;

/// Errors raised by constructors and operations in this crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("breakpoints must start at 0 and be strictly increasing (violated at index {index})")]
    NonMonotoneBreakpoints { index: usize },

    #[error("{breakpoints} breakpoints cannot carry {cells} cells")]
    LengthMismatch { breakpoints: usize, cells: usize },

    #[error("density is negative on cell {cell}")]
    NegativeValue { cell: usize },

    #[error("value on cell {cell} is not an integer")]
    NonInteger { cell: usize },

    #[error("density is not decreasing")]
    NotDecreasing,

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("invalid law: {0}")]
    InvalidLaw(String),

    #[error("laws do not share the same horizon")]
    MismatchedHorizon,

    #[error("mixing weights must be nonnegative and sum to 1")]
    BadWeights,

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("point {0} is not part of the point system")]
    UnknownPoint(String),

    #[error("window {0} has no unique maximal point")]
    AmbiguousMaximum(String),

    #[error("invalid point system: {0}")]
    InvalidPointSystem(String),

    #[error("law fails the {class} membership gate: {reason}")]
    MembershipGate { class: String, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
