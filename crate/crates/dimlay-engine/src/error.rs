//! Engine-level failures, layered over the core layout errors.

use dimlay::{Dim, LayoutError};
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Layout(#[from] LayoutError),

    #[error("root rank {root} out of range for group of {size}")]
    RootOutOfRange { root: usize, size: usize },

    #[error("ranking dim '{dim}' has extent {extent} but the group has {ranks} ranks")]
    RankingMismatch { dim: Dim, extent: usize, ranks: usize },

    #[error("tile dims {tile:?} do not match the distributed dims {expected:?}")]
    TileDimsMismatch { tile: Vec<Dim>, expected: Vec<Dim> },

    #[error("dim '{dim}': tile extent {tile} does not match distributed extent {expected}")]
    SubspaceExtentMismatch { dim: Dim, tile: usize, expected: usize },

    #[error("source dim '{dim}' is neither kept by the tile nor absorbed by the ranking dim")]
    UncoveredResidual { dim: Dim },

    #[error("gather via ranking '{ranking}' would collapse a replicated dimension")]
    ReplicatedDimInGather { ranking: Dim },

    #[error("ranking '{ranking}' does not partition the root array; gather cannot invert it")]
    GatherNotPartition { ranking: Dim },

    #[error("rank {rank} called {got} while the group is in {expected}")]
    CollectiveMismatch { rank: usize, expected: &'static str, got: &'static str },

    #[error("rank {rank}: {detail}")]
    PlanMismatch { rank: usize, detail: String },

    #[error("root rank must pass its buffer to a collective")]
    RootBufferMissing,

    #[error("rank {rank} cannot send to itself")]
    SelfSend { rank: usize },

    #[error("peer rank {peer} out of range for group of {size}")]
    PeerOutOfRange { peer: usize, size: usize },

    #[error("recv on rank {rank} (from {src}, tag {tag}): {detail}")]
    MessageMismatch { rank: usize, src: usize, tag: u64, detail: String },

    #[error("{op} on rank {rank} timed out waiting for rank(s) {waiting_on:?}")]
    Timeout { op: &'static str, rank: usize, waiting_on: Vec<usize> },

    #[error("rank {rank} aborted: another rank failed")]
    Aborted { rank: usize },
}

/// Failure of a whole simulated run, attributed to the first offending rank.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum SpmdError {
    #[error("rank {rank} failed: {source}")]
    RankFailed { rank: usize, source: EngineError },

    #[error("rank {rank} panicked: {msg}")]
    RankPanicked { rank: usize, msg: String },

    #[error("{count} message(s) never received; first: dest {dest}, src {src}, tag {tag}")]
    Undelivered { count: usize, dest: usize, src: usize, tag: u64 },
}
