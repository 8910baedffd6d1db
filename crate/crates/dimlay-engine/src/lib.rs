//! Simulated SPMD process groups and layout-driven collectives.
//!
//! [`run_spmd`] runs one closure per rank on its own thread. Ranks
//! coordinate through [`SimGroup`]: barriers, broadcast/scatter/gather
//! driven by an [`MpiTraverser`] (a traverser whose ranking dimension
//! indexes ranks), and tagged point-to-point messages. Data always moves
//! as packed element streams; layouts stay rank-local.

mod collectives;
mod error;
mod group;
mod mpi_traverser;

pub use collectives::{broadcast, gather, recv, scatter, send};
pub use error::{EngineError, SpmdError};
pub use group::{run_spmd, run_spmd_with_timeout, SimGroup, DEFAULT_TIMEOUT};
pub use mpi_traverser::{make_mpi_traverser, MpiTraverser};
