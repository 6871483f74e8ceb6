use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension must be at least 1")]
    EmptyDimension,

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("{0} must be positive")]
    NegativeInput(&'static str),

    #[error("{0} must be nonzero")]
    ZeroOperator(&'static str),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{what} is {size}, above the enumeration cap of {cap}")]
    TooLarge {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("label {0:?} is not in the block family")]
    UnknownLabel(String),

    #[error("block {0:?} is empty")]
    EmptyBlock(String),

    #[error("coordinate {index} belongs to both blocks {first:?} and {second:?}")]
    OverlappingBlocks {
        index: usize,
        first: String,
        second: String,
    },

    #[error("inner projections are built over different block families")]
    FamilyMismatch,

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by inputs of incompatible shape.
    pub fn is_shape(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::EmptyDimension
                | Error::IndexOutOfRange { .. }
                | Error::FamilyMismatch
                | Error::UnknownLabel(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
