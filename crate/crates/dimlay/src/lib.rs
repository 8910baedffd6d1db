//! Named-dimension array layouts.
//!
//! A [`Layout`] describes where the elements of a multi-dimensional array
//! live in memory as a scalar leaf plus a chain of transforms (`vector`,
//! `into_blocks`, `merge_blocks`, `hoist`, `fix`, `set_length`, `slice`).
//! Dimensions are identified by name, never by position, so transformed
//! views keep addressing elements by their original indices.
//!
//! A [`Traverser`] joins layouts that share dimension names and enumerates
//! the joint index space in a chosen order. [`compile`] lowers a layout to a
//! [`DatatypePlan`], the nested repeat/stride/displacement tree that a
//! message-passing datatype engine would commit.

pub mod bag;
pub mod corpus;
mod dim;
mod error;
mod extent;
mod layout;
mod parse;
mod plan;
mod scalar;
mod signature;
mod traverser;

pub use bag::{Bag, BagLike, BagView};
pub use dim::{Dim, IndexState};
pub use error::LayoutError;
pub use extent::Extent;
pub use layout::{ExtentSource, Layout, Proto, Stride};
pub use parse::{parse_layout, parse_protos};
pub use plan::{compile, compile_for_traverser, plans_compatible, DatatypePlan};
pub use scalar::{ScalarType, ScalarValue};
pub use signature::Signature;
pub use traverser::{FactorMap, Traverser};
