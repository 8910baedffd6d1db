//! Rendered layout/traverser signatures.

use std::fmt;

use crate::dim::Dim;
use crate::error::LayoutError;
use crate::extent::Extent;
use crate::layout::ExtentSource;
use crate::scalar::ScalarType;

/// The ordered dimension list of a layout (outermost first) together with
/// its scalar leaf. Displays as `"M -> m -> Int"`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub dims: Vec<(Dim, Extent)>,
    pub leaf: ScalarType,
}

impl Signature {
    pub fn dim_names(&self) -> Vec<Dim> {
        self.dims.iter().map(|(d, _)| *d).collect()
    }
}

impl ExtentSource for Signature {
    fn extent_of(&self, dim: Dim) -> Result<usize, LayoutError> {
        match self.dims.iter().find(|(d, _)| *d == dim) {
            Some((_, Extent::Known(n))) => Ok(*n),
            Some((_, Extent::Open)) => Err(LayoutError::OpenExtent(dim)),
            None => Err(LayoutError::UnknownDim(dim)),
        }
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (d, _) in &self.dims {
            write!(f, "{} -> ", d)?;
        }
        write!(f, "{}", self.leaf.leaf_name())
    }
}
