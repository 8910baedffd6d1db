//! Layouts: a scalar leaf plus an ordered list of shape transforms.
//!
//! A layout is built by applying protos to a bare scalar. Each proto edits
//! the signature (the ordered list of named dimensions, outermost first)
//! and records a step used later to turn an index state into a byte offset.

use std::collections::BTreeSet;
use std::fmt;

use crate::dim::{Dim, IndexState};
use crate::error::LayoutError;
use crate::extent::{Constraint, ExtId, Extent, ExtentTable, FailKind};
use crate::scalar::ScalarType;
use crate::signature::Signature;

/// A single layout (or traverser) transform.
#[derive(Clone, Debug)]
pub enum Proto {
    /// Prepend a new outermost dimension of the given extent.
    Vector { dim: Dim, extent: Extent },
    /// Split `orig` into `major` (outer, extent orig/block) and `minor`
    /// (inner, extent `block`). `minor` may reuse the original name.
    IntoBlocks { orig: Dim, major: Dim, minor: Dim, block: Extent },
    /// Fuse two dimensions into one of extent `major * minor`. The merged
    /// dimension takes the outer position of the two; a merged index `v`
    /// stands for `major = v / extent(minor)`, `minor = v % extent(minor)`.
    MergeBlocks { major: Dim, minor: Dim, merged: Dim },
    /// Move a dimension to the outermost position.
    Hoist { dim: Dim },
    /// Pin dimensions to fixed indices and drop them from the signature.
    /// The memory footprint is unchanged.
    Fix { state: IndexState },
    /// Assign a length to an open extent.
    SetLength { dim: Dim, len: usize },
    /// Restrict a dimension to `start .. start + len` of its index range.
    /// The memory footprint is unchanged; index `k` of the sliced dimension
    /// addresses what `start + k` addressed before.
    Slice { dim: Dim, start: usize, len: usize },
    /// Prepend a broadcast dimension: every index of it yields the same
    /// data. Only traversers accept this.
    Bcast { dim: Dim, extent: Extent },
}

impl Proto {
    pub fn vector(dim: impl Into<Dim>, extent: impl Into<Extent>) -> Proto {
        Proto::Vector { dim: dim.into(), extent: extent.into() }
    }

    /// Two-name form: the inner block keeps the original name.
    pub fn into_blocks(orig: impl Into<Dim>, major: impl Into<Dim>, block: impl Into<Extent>) -> Proto {
        let orig = orig.into();
        Proto::IntoBlocks { orig, major: major.into(), minor: orig, block: block.into() }
    }

    pub fn into_blocks_named(
        orig: impl Into<Dim>,
        major: impl Into<Dim>,
        minor: impl Into<Dim>,
        block: impl Into<Extent>,
    ) -> Proto {
        Proto::IntoBlocks {
            orig: orig.into(),
            major: major.into(),
            minor: minor.into(),
            block: block.into(),
        }
    }

    pub fn merge_blocks(major: impl Into<Dim>, minor: impl Into<Dim>, merged: impl Into<Dim>) -> Proto {
        Proto::MergeBlocks { major: major.into(), minor: minor.into(), merged: merged.into() }
    }

    pub fn hoist(dim: impl Into<Dim>) -> Proto {
        Proto::Hoist { dim: dim.into() }
    }

    pub fn fix(state: IndexState) -> Proto {
        Proto::Fix { state }
    }

    pub fn set_length(dim: impl Into<Dim>, len: usize) -> Proto {
        Proto::SetLength { dim: dim.into(), len }
    }

    pub fn slice(dim: impl Into<Dim>, start: usize, len: usize) -> Proto {
        Proto::Slice { dim: dim.into(), start, len }
    }

    pub fn bcast(dim: impl Into<Dim>, extent: impl Into<Extent>) -> Proto {
        Proto::Bcast { dim: dim.into(), extent: extent.into() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Proto::Vector { .. } => "vector",
            Proto::IntoBlocks { .. } => "into_blocks",
            Proto::MergeBlocks { .. } => "merge_blocks",
            Proto::Hoist { .. } => "hoist",
            Proto::Fix { .. } => "fix",
            Proto::SetLength { .. } => "set_length",
            Proto::Slice { .. } => "slice",
            Proto::Bcast { .. } => "bcast",
        }
    }
}

/// Offset-relevant record of an applied proto, in application order.
#[derive(Clone, Debug)]
pub(crate) enum Step {
    Vector { dim: Dim, ext: ExtId },
    Split { orig: Dim, major: Dim, minor: Dim, minor_ext: ExtId },
    Merge { major: Dim, minor: Dim, merged: Dim, minor_ext: ExtId },
    Subst { state: IndexState },
    Shift { dim: Dim, start: usize },
}

/// How byte offsets advance along one dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stride {
    Constant(i64),
    NonConstant,
}

/// Source of per-dimension extents, e.g. for building a dense tile shaped
/// like (part of) an existing layout or traverser.
pub trait ExtentSource {
    fn extent_of(&self, dim: Dim) -> Result<usize, LayoutError>;
}

#[derive(Clone, Debug)]
pub struct Layout {
    scalar: ScalarType,
    steps: Vec<Step>,
    /// Current dimensions, outermost first.
    sig: Vec<(Dim, ExtId)>,
    /// Dimensions produced by merge_blocks and still live under that name.
    merged: BTreeSet<Dim>,
    pub(crate) exts: ExtentTable,
}

impl Layout {
    pub fn new(scalar: ScalarType) -> Layout {
        Layout {
            scalar,
            steps: Vec::new(),
            sig: Vec::new(),
            merged: BTreeSet::new(),
            exts: ExtentTable::default(),
        }
    }

    /// Dense layout over `dims` with the first listed dimension innermost,
    /// extents taken from `source`.
    pub fn dense_like<S: ExtentSource + ?Sized>(
        source: &S,
        dims: &[Dim],
        scalar: ScalarType,
    ) -> Result<Layout, LayoutError> {
        let mut l = Layout::new(scalar);
        for &d in dims {
            l = l.vector(d, source.extent_of(d)?)?;
        }
        Ok(l)
    }

    pub fn apply(&self, proto: &Proto) -> Result<Layout, LayoutError> {
        let mut next = self.clone();
        match proto {
            Proto::Vector { dim, extent } => {
                if next.pos_of(*dim).is_some() {
                    return Err(LayoutError::DuplicateDim(*dim));
                }
                if extent.known() == Some(0) {
                    return Err(LayoutError::ZeroExtent { dim: *dim });
                }
                let ext = next.exts.fresh_extent(*extent);
                next.sig.insert(0, (*dim, ext));
                next.steps.push(Step::Vector { dim: *dim, ext });
            }
            Proto::IntoBlocks { orig, major, minor, block } => {
                let pos = next.pos_of(*orig).ok_or(LayoutError::UnknownDim(*orig))?;
                if next.merged.contains(orig) {
                    return Err(LayoutError::SplitOfMerged(*orig));
                }
                if major == minor {
                    return Err(LayoutError::DuplicateDim(*major));
                }
                if next.pos_of(*major).is_some() {
                    return Err(LayoutError::DuplicateDim(*major));
                }
                if minor != orig && next.pos_of(*minor).is_some() {
                    return Err(LayoutError::DuplicateDim(*minor));
                }
                if block.known() == Some(0) {
                    return Err(LayoutError::ZeroExtent { dim: *minor });
                }
                let whole = next.sig[pos].1;
                let major_ext = next.exts.fresh(None);
                let minor_ext = next.exts.fresh_extent(*block);
                next.exts.push_constraint(Constraint::Product {
                    whole,
                    major: major_ext,
                    minor: minor_ext,
                    dim: *orig,
                });
                next.sig[pos] = (*major, major_ext);
                next.sig.insert(pos + 1, (*minor, minor_ext));
                next.steps.push(Step::Split {
                    orig: *orig,
                    major: *major,
                    minor: *minor,
                    minor_ext,
                });
            }
            Proto::MergeBlocks { major, minor, merged } => {
                let pa = next.pos_of(*major).ok_or(LayoutError::UnknownDim(*major))?;
                let pb = next.pos_of(*minor).ok_or(LayoutError::UnknownDim(*minor))?;
                if major == minor {
                    return Err(LayoutError::DuplicateDim(*major));
                }
                if merged != major && merged != minor && next.pos_of(*merged).is_some() {
                    return Err(LayoutError::DuplicateDim(*merged));
                }
                let major_ext = next.sig[pa].1;
                let minor_ext = next.sig[pb].1;
                let merged_ext = next.exts.fresh(None);
                next.exts.push_constraint(Constraint::Product {
                    whole: merged_ext,
                    major: major_ext,
                    minor: minor_ext,
                    dim: *merged,
                });
                let (outer, inner) = if pa < pb { (pa, pb) } else { (pb, pa) };
                next.sig[outer] = (*merged, merged_ext);
                next.sig.remove(inner);
                next.merged.remove(major);
                next.merged.remove(minor);
                next.merged.insert(*merged);
                next.steps.push(Step::Merge {
                    major: *major,
                    minor: *minor,
                    merged: *merged,
                    minor_ext,
                });
            }
            Proto::Hoist { dim } => {
                let pos = next.pos_of(*dim).ok_or(LayoutError::UnknownDim(*dim))?;
                let entry = next.sig.remove(pos);
                next.sig.insert(0, entry);
            }
            Proto::Fix { state } => {
                for (dim, index) in state.iter() {
                    let pos = next.pos_of(dim).ok_or(LayoutError::UnknownDim(dim))?;
                    let ext = next.sig[pos].1;
                    next.exts.push_constraint(Constraint::AtLeast {
                        ext,
                        min: index + 1,
                        fail: FailKind::FixIndex { dim, index },
                    });
                    next.sig.remove(pos);
                    next.merged.remove(&dim);
                }
                next.steps.push(Step::Subst { state: state.clone() });
            }
            Proto::SetLength { dim, len } => {
                let pos = next.pos_of(*dim).ok_or(LayoutError::UnknownDim(*dim))?;
                if *len == 0 {
                    return Err(LayoutError::ZeroExtent { dim: *dim });
                }
                let ext = next.sig[pos].1;
                next.exts.set(ext, *len, *dim)?;
            }
            Proto::Slice { dim, start, len } => {
                let pos = next.pos_of(*dim).ok_or(LayoutError::UnknownDim(*dim))?;
                if *len == 0 {
                    return Err(LayoutError::ZeroExtent { dim: *dim });
                }
                let old = next.sig[pos].1;
                next.exts.push_constraint(Constraint::AtLeast {
                    ext: old,
                    min: start + len,
                    fail: FailKind::SliceBounds { dim: *dim, start: *start, len: *len },
                });
                let ext = next.exts.fresh(Some(*len));
                next.sig[pos] = (*dim, ext);
                next.steps.push(Step::Shift { dim: *dim, start: *start });
            }
            Proto::Bcast { .. } => {
                return Err(LayoutError::ProtoNotApplicable { proto: "bcast", target: "layout" });
            }
        }
        next.exts.solve()?;
        Ok(next)
    }

    pub fn apply_all(&self, protos: &[Proto]) -> Result<Layout, LayoutError> {
        let mut l = self.clone();
        for p in protos {
            l = l.apply(p)?;
        }
        Ok(l)
    }

    pub fn vector(self, dim: impl Into<Dim>, extent: impl Into<Extent>) -> Result<Layout, LayoutError> {
        self.apply(&Proto::vector(dim, extent))
    }

    pub fn into_blocks(
        self,
        orig: impl Into<Dim>,
        major: impl Into<Dim>,
        block: impl Into<Extent>,
    ) -> Result<Layout, LayoutError> {
        self.apply(&Proto::into_blocks(orig, major, block))
    }

    pub fn into_blocks_named(
        self,
        orig: impl Into<Dim>,
        major: impl Into<Dim>,
        minor: impl Into<Dim>,
        block: impl Into<Extent>,
    ) -> Result<Layout, LayoutError> {
        self.apply(&Proto::into_blocks_named(orig, major, minor, block))
    }

    pub fn merge_blocks(
        self,
        major: impl Into<Dim>,
        minor: impl Into<Dim>,
        merged: impl Into<Dim>,
    ) -> Result<Layout, LayoutError> {
        self.apply(&Proto::merge_blocks(major, minor, merged))
    }

    pub fn hoist(self, dim: impl Into<Dim>) -> Result<Layout, LayoutError> {
        self.apply(&Proto::hoist(dim))
    }

    pub fn fix(self, state: IndexState) -> Result<Layout, LayoutError> {
        self.apply(&Proto::fix(state))
    }

    pub fn set_length(self, dim: impl Into<Dim>, len: usize) -> Result<Layout, LayoutError> {
        self.apply(&Proto::set_length(dim, len))
    }

    pub fn slice(self, dim: impl Into<Dim>, start: usize, len: usize) -> Result<Layout, LayoutError> {
        self.apply(&Proto::slice(dim, start, len))
    }

    fn pos_of(&self, dim: Dim) -> Option<usize> {
        self.sig.iter().position(|(d, _)| *d == dim)
    }

    pub fn scalar_type(&self) -> ScalarType {
        self.scalar
    }

    /// Dimension names, outermost first.
    pub fn dims(&self) -> Vec<Dim> {
        self.sig.iter().map(|(d, _)| *d).collect()
    }

    pub fn signature(&self) -> Signature {
        Signature {
            dims: self
                .sig
                .iter()
                .map(|(d, e)| {
                    let ext = match self.exts.get(*e) {
                        Some(n) => Extent::Known(n),
                        None => Extent::Open,
                    };
                    (*d, ext)
                })
                .collect(),
            leaf: self.scalar,
        }
    }

    pub fn length_of(&self, dim: impl Into<Dim>) -> Result<Extent, LayoutError> {
        let dim = dim.into();
        let pos = self.pos_of(dim).ok_or(LayoutError::UnknownDim(dim))?;
        Ok(match self.exts.get(self.sig[pos].1) {
            Some(n) => Extent::Known(n),
            None => Extent::Open,
        })
    }

    /// Total allocated bytes: the scalar size times all vector extents.
    /// Fixing or slicing narrows the index space, never the footprint.
    pub fn size_bytes(&self) -> Result<usize, LayoutError> {
        let mut total = self.scalar.size_bytes();
        for step in &self.steps {
            if let Step::Vector { dim, ext } = step {
                total *= self.exts.get_or(*ext, *dim)?;
            }
        }
        Ok(total)
    }

    /// Byte offset of the element addressed by `state`. Every signature
    /// dimension must be bound and in range; extra bindings are ignored.
    pub fn offset_bytes(&self, state: &IndexState) -> Result<usize, LayoutError> {
        let mut entries = Vec::with_capacity(self.sig.len());
        for (dim, ext) in &self.sig {
            let index = state.get(*dim).ok_or(LayoutError::MissingIndex(*dim))?;
            let extent = self.exts.get_or(*ext, *dim)?;
            if index >= extent {
                return Err(LayoutError::IndexOutOfRange { dim: *dim, index, extent });
            }
            entries.push((*dim, index));
        }
        self.offset_inner(entries, None)
    }

    /// Core offset walk. `entries` binds each signature dimension; the steps
    /// are replayed newest-first, rewriting bindings back toward the vector
    /// dimensions they came from. A `Shift` step index in `suppress` is
    /// skipped, which isolates that slice's contribution.
    fn offset_inner(
        &self,
        entries: Vec<(Dim, usize)>,
        suppress: Option<usize>,
    ) -> Result<usize, LayoutError> {
        // Stride of each vector step: scalar size times the extents of the
        // vector steps applied before it (those lie further in).
        let mut strides = vec![0usize; self.steps.len()];
        let mut running = self.scalar.size_bytes();
        for (i, step) in self.steps.iter().enumerate() {
            if let Step::Vector { dim, ext } = step {
                strides[i] = running;
                running *= self.exts.get_or(*ext, *dim)?;
            }
        }

        let mut bind = entries;
        let set = |bind: &mut Vec<(Dim, usize)>, dim: Dim, v: usize| {
            match bind.iter_mut().find(|(d, _)| *d == dim) {
                Some(entry) => entry.1 = v,
                None => bind.push((dim, v)),
            }
        };
        let take = |bind: &mut Vec<(Dim, usize)>, dim: Dim| -> Option<usize> {
            bind.iter()
                .position(|(d, _)| *d == dim)
                .map(|p| bind.remove(p).1)
        };

        let mut acc = 0usize;
        for i in (0..self.steps.len()).rev() {
            match &self.steps[i] {
                Step::Vector { dim, .. } => {
                    if let Some(v) = take(&mut bind, *dim) {
                        acc += v * strides[i];
                    }
                }
                Step::Split { orig, major, minor, minor_ext } => {
                    if bind.iter().any(|(d, _)| d == major) {
                        let hi = take(&mut bind, *major).unwrap();
                        let lo = take(&mut bind, *minor).unwrap_or(0);
                        let sz = self.exts.get_or(*minor_ext, *minor)?;
                        set(&mut bind, *orig, hi * sz + lo);
                    }
                }
                Step::Merge { major, minor, merged, minor_ext } => {
                    if let Some(v) = take(&mut bind, *merged) {
                        let sz = self.exts.get_or(*minor_ext, *minor)?;
                        set(&mut bind, *major, v / sz);
                        set(&mut bind, *minor, v % sz);
                    }
                }
                Step::Subst { state } => {
                    for (d, v) in state.iter() {
                        set(&mut bind, d, v);
                    }
                }
                Step::Shift { dim, start } => {
                    if suppress == Some(i) {
                        continue;
                    }
                    if let Some(entry) = bind.iter_mut().find(|(d, _)| d == dim) {
                        entry.1 += start;
                    }
                }
            }
        }
        Ok(acc)
    }

    /// Offsets along `dim` with every other dimension held at zero.
    pub(crate) fn probe_axis(&self, dim: Dim) -> Result<Vec<usize>, LayoutError> {
        let pos = self.pos_of(dim).ok_or(LayoutError::UnknownDim(dim))?;
        let extent = self.exts.get_or(self.sig[pos].1, dim)?;
        let mut out = Vec::with_capacity(extent);
        for x in 0..extent {
            let entries = self
                .sig
                .iter()
                .map(|(d, _)| (*d, if *d == dim { x } else { 0 }))
                .collect();
            out.push(self.offset_inner(entries, None)?);
        }
        Ok(out)
    }

    /// Byte distance between consecutive indices of `dim`, if it is the
    /// same everywhere along the axis. Merged dimensions typically advance
    /// unevenly across their block boundary.
    pub fn stride_along(&self, dim: impl Into<Dim>) -> Result<Stride, LayoutError> {
        let probe = self.probe_axis(dim.into())?;
        if probe.len() <= 1 {
            return Ok(Stride::Constant(0));
        }
        let first = probe[1] as i64 - probe[0] as i64;
        for w in probe.windows(2) {
            if w[1] as i64 - w[0] as i64 != first {
                return Ok(Stride::NonConstant);
            }
        }
        Ok(Stride::Constant(first))
    }

    /// Byte displacement where the dimension's index range begins: the sum
    /// of the slice shifts that feed only this dimension, measured in place.
    pub fn lower_bound_along(&self, dim: impl Into<Dim>) -> Result<i64, LayoutError> {
        let dim = dim.into();
        if self.pos_of(dim).is_none() {
            return Err(LayoutError::UnknownDim(dim));
        }
        let zero: Vec<(Dim, usize)> = self.sig.iter().map(|(d, _)| (*d, 0)).collect();
        let base = self.offset_inner(zero.clone(), None)? as i64;
        let mut lb = 0i64;
        for i in 0..self.steps.len() {
            if !matches!(self.steps[i], Step::Shift { .. }) {
                continue;
            }
            if self.shift_feeds(i) != Some(dim) {
                continue;
            }
            let without = self.offset_inner(zero.clone(), Some(i))? as i64;
            lb += base - without;
        }
        Ok(lb)
    }

    /// The single live dimension whose index reaches the shift at step `i`,
    /// if there is exactly one. Tracks the shifted name forward through
    /// later renames: a split routes it to both parts, a merge to the fused
    /// dimension, a fix ends the trail.
    fn shift_feeds(&self, i: usize) -> Option<Dim> {
        let Step::Shift { dim, .. } = &self.steps[i] else {
            return None;
        };
        let mut names: BTreeSet<Dim> = BTreeSet::new();
        names.insert(*dim);
        for step in &self.steps[i + 1..] {
            match step {
                Step::Split { orig, major, minor, .. } => {
                    if names.remove(orig) {
                        names.insert(*major);
                        names.insert(*minor);
                    }
                }
                Step::Merge { major, minor, merged, .. } => {
                    if names.remove(major) | names.remove(minor) {
                        names.insert(*merged);
                    }
                }
                Step::Subst { state } => {
                    for (d, _) in state.iter() {
                        names.remove(&d);
                    }
                }
                Step::Vector { dim, .. } => {
                    // A fresh vector reusing a tracked (dead) name shadows it.
                    names.remove(dim);
                }
                Step::Shift { .. } => {}
            }
        }
        let live: Vec<Dim> = names
            .into_iter()
            .filter(|d| self.pos_of(*d).is_some())
            .collect();
        match live.as_slice() {
            [single] => Some(*single),
            _ => None,
        }
    }

    /// Whether byte offsets along `dim` are the same pattern at every
    /// setting of the other dimensions. Holds for every constructible
    /// layout: the one operation that would break it, splitting a merged
    /// dimension, is rejected at apply time.
    pub fn is_uniform_along(&self, dim: impl Into<Dim>) -> Result<bool, LayoutError> {
        let dim = dim.into();
        if self.pos_of(dim).is_none() {
            return Err(LayoutError::UnknownDim(dim));
        }
        Ok(true)
    }

    pub(crate) fn sig_entries(&self) -> &[(Dim, ExtId)] {
        &self.sig
    }

    pub(crate) fn merged_dims(&self) -> &BTreeSet<Dim> {
        &self.merged
    }
}

impl ExtentSource for Layout {
    fn extent_of(&self, dim: Dim) -> Result<usize, LayoutError> {
        let pos = self.pos_of(dim).ok_or(LayoutError::UnknownDim(dim))?;
        self.exts.get_or(self.sig[pos].1, dim)
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.signature())
    }
}
