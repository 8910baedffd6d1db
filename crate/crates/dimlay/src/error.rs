use thiserror::Error;

use crate::dim::Dim;
use crate::scalar::ScalarType;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("invalid dimension name {0:?} (1 to 8 bytes required)")]
    BadDimName(String),
    #[error("unknown dimension {0:?}")]
    UnknownDim(Dim),
    #[error("dimension {0:?} already exists")]
    DuplicateDim(Dim),
    #[error("extent of {0:?} is unresolved")]
    OpenExtent(Dim),
    #[error("extent of {dim:?} must be at least 1")]
    ZeroExtent { dim: Dim },
    #[error("extent of {dim:?} is {existing}, cannot set to {requested}")]
    ExtentConflict { dim: Dim, existing: usize, requested: usize },
    #[error("extent {whole} of {dim:?} is not divisible by {divisor}")]
    NonDivisible { dim: Dim, whole: usize, divisor: usize },
    #[error("extent constraint on {dim:?} is contradictory: expected {expected}, got {actual}")]
    ExtentContradiction { dim: Dim, expected: usize, actual: usize },
    #[error("state does not bind dimension {0:?}")]
    MissingIndex(Dim),
    #[error("index {index} out of range for {dim:?} (extent {extent})")]
    IndexOutOfRange { dim: Dim, index: usize, extent: usize },
    #[error("slice [{start}, {start}+{len}) exceeds extent {extent} of {dim:?}")]
    SliceOutOfBounds { dim: Dim, start: usize, len: usize, extent: usize },
    #[error("{proto} cannot be applied to a {target}")]
    ProtoNotApplicable { proto: &'static str, target: &'static str },
    #[error("cannot split {0:?}: it was produced by merge_blocks")]
    SplitOfMerged(Dim),
    #[error("order {order:?} is not a permutation of the dimensions {dims:?}")]
    NotAPermutation { order: Vec<Dim>, dims: Vec<Dim> },
    #[error("a traverser needs at least one layout")]
    EmptyTraverser,
    #[error("buffer holds {got} bytes but the layout needs {needed}")]
    BufferTooSmall { needed: usize, got: usize },
    #[error("expected a {expected} value, got {got}")]
    ScalarMismatch { expected: ScalarType, got: ScalarType },
    #[error("parse error: {0}")]
    Parse(String),
}
