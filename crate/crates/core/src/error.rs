use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("cannot take the centroid of an empty cluster")]
    EmptyCluster,
    #[error("similarity matrix needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("preferences have not been set on the similarity matrix")]
    PreferenceUnset,
    #[error("invalid preference ratio {0}: must be positive and finite")]
    InvalidRatio(f64),
    #[error("no exemplars emerged after {iterations} iterations")]
    NoExemplars { iterations: usize },
    #[error("requested {requested} codewords from {available} training vectors")]
    TooManyCodewords { requested: usize, available: usize },
    #[error(
        "target of {target} codewords unreachable: search produced between {min_count} and {max_count} exemplars"
    )]
    TargetUnreachable {
        target: usize,
        min_count: usize,
        max_count: usize,
    },
    #[error("codeword index {index} out of range for a codebook of {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error(transparent)]
    Format(#[from] crate::imageio::FormatError),
}
