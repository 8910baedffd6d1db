//! Traversers: iteration spaces joined from layout signatures.
//!
//! A traverser owns no data. It remembers the dimensions of one or more
//! layouts (unified by name), can be reshaped with the same protos as a
//! layout, and enumerates index states. Reshaping is pure index
//! bookkeeping, so operations a layout must reject — splitting a merged
//! dimension, zero-length slices, broadcast dimensions — are legal here.

use std::collections::BTreeSet;
use std::fmt;

use crate::dim::{Dim, IndexState};
use crate::error::LayoutError;
use crate::extent::{Constraint, ExtId, Extent, ExtentTable, FailKind};
use crate::layout::{ExtentSource, Layout, Proto};

#[derive(Clone, Debug)]
enum TravEvent {
    /// Dimension adopted from a source layout signature.
    Source { dim: Dim },
    Bcast { dim: Dim },
    Split { orig: Dim, major: Dim, minor: Dim, minor_ext: ExtId },
    Merge { major: Dim, minor: Dim, merged: Dim, minor_ext: ExtId },
    Shift { dim: Dim, start: usize },
    Fix { dims: Vec<Dim> },
}

#[derive(Clone, Debug)]
pub struct Traverser {
    /// Live iteration dimensions, outermost (slowest) first.
    order: Vec<(Dim, ExtId)>,
    fixed: IndexState,
    exts: ExtentTable,
    events: Vec<TravEvent>,
    bcast_live: Vec<Dim>,
}

impl Traverser {
    /// Joins the signatures of the given layouts. Dimensions are unified by
    /// name: the first occurrence decides the position, later occurrences
    /// must agree on extent once both are known.
    pub fn new(layouts: &[&Layout]) -> Result<Traverser, LayoutError> {
        if layouts.is_empty() {
            return Err(LayoutError::EmptyTraverser);
        }
        let mut t = Traverser {
            order: Vec::new(),
            fixed: IndexState::new(),
            exts: ExtentTable::default(),
            events: Vec::new(),
            bcast_live: Vec::new(),
        };
        for l in layouts {
            let shift = t.exts.import(&l.exts);
            for (dim, ext) in l.sig_entries() {
                let ext = ext + shift;
                match t.order.iter().find(|(d, _)| d == dim) {
                    Some(&(_, existing)) => {
                        t.exts.push_constraint(Constraint::Equal { a: existing, b: ext, dim: *dim });
                    }
                    None => {
                        t.order.push((*dim, ext));
                        t.events.push(TravEvent::Source { dim: *dim });
                    }
                }
            }
        }
        t.exts.solve()?;
        Ok(t)
    }

    pub fn transform(&self, proto: &Proto) -> Result<Traverser, LayoutError> {
        let mut next = self.clone();
        match proto {
            Proto::Vector { .. } => {
                return Err(LayoutError::ProtoNotApplicable { proto: "vector", target: "traverser" });
            }
            Proto::IntoBlocks { orig, major, minor, block } => {
                let pos = next.pos_of(*orig).ok_or(LayoutError::UnknownDim(*orig))?;
                if major == minor {
                    return Err(LayoutError::DuplicateDim(*major));
                }
                if next.is_taken(*major) {
                    return Err(LayoutError::DuplicateDim(*major));
                }
                if minor != orig && next.is_taken(*minor) {
                    return Err(LayoutError::DuplicateDim(*minor));
                }
                if block.known() == Some(0) {
                    return Err(LayoutError::ZeroExtent { dim: *minor });
                }
                let whole = next.order[pos].1;
                let major_ext = next.exts.fresh(None);
                let minor_ext = next.exts.fresh_extent(*block);
                next.exts.push_constraint(Constraint::Product {
                    whole,
                    major: major_ext,
                    minor: minor_ext,
                    dim: *orig,
                });
                next.order[pos] = (*major, major_ext);
                next.order.insert(pos + 1, (*minor, minor_ext));
                if let Some(p) = next.bcast_live.iter().position(|d| d == orig) {
                    next.bcast_live.remove(p);
                    next.bcast_live.push(*major);
                    next.bcast_live.push(*minor);
                }
                next.events.push(TravEvent::Split {
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
                if merged != major && merged != minor && next.is_taken(*merged) {
                    return Err(LayoutError::DuplicateDim(*merged));
                }
                let major_ext = next.order[pa].1;
                let minor_ext = next.order[pb].1;
                let merged_ext = next.exts.fresh(None);
                next.exts.push_constraint(Constraint::Product {
                    whole: merged_ext,
                    major: major_ext,
                    minor: minor_ext,
                    dim: *merged,
                });
                let (outer, inner) = if pa < pb { (pa, pb) } else { (pb, pa) };
                next.order[outer] = (*merged, merged_ext);
                next.order.remove(inner);
                let was_bcast = |d: &Dim, list: &[Dim]| list.contains(d);
                let both_bcast =
                    was_bcast(major, &next.bcast_live) && was_bcast(minor, &next.bcast_live);
                next.bcast_live.retain(|d| d != major && d != minor);
                if both_bcast {
                    next.bcast_live.push(*merged);
                }
                next.events.push(TravEvent::Merge {
                    major: *major,
                    minor: *minor,
                    merged: *merged,
                    minor_ext,
                });
            }
            Proto::Hoist { dim } => {
                let pos = next.pos_of(*dim).ok_or(LayoutError::UnknownDim(*dim))?;
                let entry = next.order.remove(pos);
                next.order.insert(0, entry);
            }
            Proto::Fix { state } => {
                let mut dims = Vec::new();
                for (dim, index) in state.iter() {
                    let pos = next.pos_of(dim).ok_or(LayoutError::UnknownDim(dim))?;
                    let ext = next.order[pos].1;
                    next.exts.push_constraint(Constraint::AtLeast {
                        ext,
                        min: index + 1,
                        fail: FailKind::FixIndex { dim, index },
                    });
                    next.order.remove(pos);
                    next.bcast_live.retain(|d| *d != dim);
                    next.fixed.set(dim, index);
                    dims.push(dim);
                }
                next.events.push(TravEvent::Fix { dims });
            }
            Proto::SetLength { dim, len } => {
                let pos = next.pos_of(*dim).ok_or(LayoutError::UnknownDim(*dim))?;
                if *len == 0 {
                    return Err(LayoutError::ZeroExtent { dim: *dim });
                }
                let ext = next.order[pos].1;
                next.exts.set(ext, *len, *dim)?;
            }
            Proto::Slice { dim, start, len } => {
                // Unlike a layout, a traverser admits an empty slice: it
                // simply visits nothing.
                let pos = next.pos_of(*dim).ok_or(LayoutError::UnknownDim(*dim))?;
                let old = next.order[pos].1;
                next.exts.push_constraint(Constraint::AtLeast {
                    ext: old,
                    min: start + len,
                    fail: FailKind::SliceBounds { dim: *dim, start: *start, len: *len },
                });
                let ext = next.exts.fresh(Some(*len));
                next.order[pos] = (*dim, ext);
                next.events.push(TravEvent::Shift { dim: *dim, start: *start });
            }
            Proto::Bcast { dim, extent } => {
                if next.is_taken(*dim) {
                    return Err(LayoutError::DuplicateDim(*dim));
                }
                let ext = next.exts.fresh_extent(*extent);
                next.order.insert(0, (*dim, ext));
                next.bcast_live.push(*dim);
                next.events.push(TravEvent::Bcast { dim: *dim });
            }
        }
        next.exts.solve()?;
        Ok(next)
    }

    pub fn apply_all(&self, protos: &[Proto]) -> Result<Traverser, LayoutError> {
        let mut t = self.clone();
        for p in protos {
            t = t.transform(p)?;
        }
        Ok(t)
    }

    pub fn into_blocks(
        self,
        orig: impl Into<Dim>,
        major: impl Into<Dim>,
        block: impl Into<Extent>,
    ) -> Result<Traverser, LayoutError> {
        self.transform(&Proto::into_blocks(orig, major, block))
    }

    pub fn into_blocks_named(
        self,
        orig: impl Into<Dim>,
        major: impl Into<Dim>,
        minor: impl Into<Dim>,
        block: impl Into<Extent>,
    ) -> Result<Traverser, LayoutError> {
        self.transform(&Proto::into_blocks_named(orig, major, minor, block))
    }

    pub fn merge_blocks(
        self,
        major: impl Into<Dim>,
        minor: impl Into<Dim>,
        merged: impl Into<Dim>,
    ) -> Result<Traverser, LayoutError> {
        self.transform(&Proto::merge_blocks(major, minor, merged))
    }

    pub fn hoist(self, dim: impl Into<Dim>) -> Result<Traverser, LayoutError> {
        self.transform(&Proto::hoist(dim))
    }

    pub fn fix(self, state: IndexState) -> Result<Traverser, LayoutError> {
        self.transform(&Proto::fix(state))
    }

    pub fn set_length(self, dim: impl Into<Dim>, len: usize) -> Result<Traverser, LayoutError> {
        self.transform(&Proto::set_length(dim, len))
    }

    pub fn slice(self, dim: impl Into<Dim>, start: usize, len: usize) -> Result<Traverser, LayoutError> {
        self.transform(&Proto::slice(dim, start, len))
    }

    pub fn bcast(self, dim: impl Into<Dim>, extent: impl Into<Extent>) -> Result<Traverser, LayoutError> {
        self.transform(&Proto::bcast(dim, extent))
    }

    fn pos_of(&self, dim: Dim) -> Option<usize> {
        self.order.iter().position(|(d, _)| *d == dim)
    }

    fn is_taken(&self, dim: Dim) -> bool {
        self.pos_of(dim).is_some() || self.fixed.contains(dim)
    }

    /// Live dimension names, outermost first.
    pub fn order(&self) -> Vec<Dim> {
        self.order.iter().map(|(d, _)| *d).collect()
    }

    pub fn length_of(&self, dim: impl Into<Dim>) -> Result<Extent, LayoutError> {
        let dim = dim.into();
        let pos = self.pos_of(dim).ok_or(LayoutError::UnknownDim(dim))?;
        Ok(match self.exts.get(self.order[pos].1) {
            Some(n) => Extent::Known(n),
            None => Extent::Open,
        })
    }

    pub fn fixed(&self) -> &IndexState {
        &self.fixed
    }

    pub fn bcast_dims(&self) -> &[Dim] {
        &self.bcast_live
    }

    /// Number of index states a full traversal visits.
    pub fn count(&self) -> Result<usize, LayoutError> {
        let mut n = 1usize;
        for (d, e) in &self.order {
            n *= self.exts.get_or(*e, *d)?;
        }
        Ok(n)
    }

    /// Expands live indices plus fixed bindings into a full index state:
    /// split dimensions are recomposed under their original name, merged
    /// dimensions decomposed into their parts, slices shifted to source
    /// coordinates. Derived and original names are all present; where a
    /// split reused the original name, the recomposed value wins.
    fn materialize(&self, live: &[usize]) -> Result<IndexState, LayoutError> {
        let mut bind: Vec<(Dim, usize)> = self
            .order
            .iter()
            .zip(live)
            .map(|(&(d, _), &v)| (d, v))
            .collect();
        for (d, v) in self.fixed.iter() {
            bind.push((d, v));
        }
        let get = |bind: &[(Dim, usize)], dim: Dim| -> Option<usize> {
            bind.iter().find(|(d, _)| *d == dim).map(|(_, v)| *v)
        };
        let set = |bind: &mut Vec<(Dim, usize)>, dim: Dim, v: usize| {
            match bind.iter_mut().find(|(d, _)| *d == dim) {
                Some(entry) => entry.1 = v,
                None => bind.push((dim, v)),
            }
        };
        for ev in self.events.iter().rev() {
            match ev {
                TravEvent::Split { orig, major, minor, minor_ext } => {
                    if let (Some(hi), Some(lo)) = (get(&bind, *major), get(&bind, *minor)) {
                        let sz = self.exts.get_or(*minor_ext, *minor)?;
                        set(&mut bind, *orig, hi * sz + lo);
                    }
                }
                TravEvent::Merge { major, minor, merged, minor_ext } => {
                    if let Some(v) = get(&bind, *merged) {
                        let sz = self.exts.get_or(*minor_ext, *minor)?;
                        set(&mut bind, *major, v / sz);
                        set(&mut bind, *minor, v % sz);
                    }
                }
                TravEvent::Shift { dim, start } => {
                    if let Some(entry) = bind.iter_mut().find(|(d, _)| d == dim) {
                        entry.1 += start;
                    }
                }
                TravEvent::Source { .. } | TravEvent::Bcast { .. } | TravEvent::Fix { .. } => {}
            }
        }
        Ok(IndexState::from_pairs(bind))
    }

    /// Visits every index state in lexicographic order of the live
    /// dimensions (last dimension fastest).
    pub fn for_each<F: FnMut(&IndexState)>(&self, mut f: F) -> Result<(), LayoutError> {
        self.try_for_each::<LayoutError, _>(|s| {
            f(s);
            Ok(())
        })
    }

    pub fn try_for_each<E, F>(&self, mut f: F) -> Result<(), E>
    where
        E: From<LayoutError>,
        F: FnMut(&IndexState) -> Result<(), E>,
    {
        let mut extents = Vec::with_capacity(self.order.len());
        for (d, e) in &self.order {
            extents.push(self.exts.get_or(*e, *d).map_err(E::from)?);
        }
        if extents.iter().any(|&e| e == 0) {
            return Ok(());
        }
        let mut idx = vec![0usize; extents.len()];
        loop {
            let state = self.materialize(&idx).map_err(E::from)?;
            f(&state)?;
            let mut k = idx.len();
            loop {
                if k == 0 {
                    return Ok(());
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < extents[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    /// Analyzes which primitive index factors of the source signatures each
    /// live dimension covers. See [`FactorMap`].
    pub fn factor_map(&self) -> FactorMap {
        let mut fm = FactorMap {
            children: Vec::new(),
            replicated: Vec::new(),
            synthetic: Vec::new(),
            source: Vec::new(),
            live: Vec::new(),
            fixed: BTreeSet::new(),
        };
        fn fresh(fm: &mut FactorMap, replicated: bool, synthetic: bool) -> usize {
            fm.children.push(None);
            fm.replicated.push(replicated);
            fm.synthetic.push(synthetic);
            fm.children.len() - 1
        }
        fn remove(live: &mut Vec<(Dim, BTreeSet<usize>)>, dim: Dim) -> BTreeSet<usize> {
            let pos = live
                .iter()
                .position(|(d, _)| *d == dim)
                .expect("factor analysis out of sync with events");
            live.remove(pos).1
        }
        for ev in &self.events {
            match ev {
                TravEvent::Source { dim } => {
                    let id = fresh(&mut fm, false, false);
                    fm.source.push((*dim, id));
                    fm.live.push((*dim, BTreeSet::from([id])));
                }
                TravEvent::Bcast { dim } => {
                    let id = fresh(&mut fm, true, false);
                    fm.live.push((*dim, BTreeSet::from([id])));
                }
                TravEvent::Split { orig, major, minor, .. } => {
                    let set = remove(&mut fm.live, *orig);
                    let (a, b) = if set.len() == 1 {
                        let parent = *set.iter().next().unwrap();
                        let (rep, syn) = (fm.replicated[parent], fm.synthetic[parent]);
                        let a = fresh(&mut fm, rep, syn);
                        let b = fresh(&mut fm, rep, syn);
                        fm.children[parent] = Some((a, b));
                        (a, b)
                    } else {
                        // Splitting a fused dimension: the parts no longer
                        // line up with any source factor.
                        (fresh(&mut fm, false, true), fresh(&mut fm, false, true))
                    };
                    fm.live.push((*major, BTreeSet::from([a])));
                    fm.live.push((*minor, BTreeSet::from([b])));
                }
                TravEvent::Merge { major, minor, merged, .. } => {
                    let mut u = remove(&mut fm.live, *major);
                    u.extend(remove(&mut fm.live, *minor));
                    fm.live.push((*merged, u));
                }
                TravEvent::Shift { .. } => {}
                TravEvent::Fix { dims } => {
                    for d in dims {
                        let set = remove(&mut fm.live, *d);
                        fm.fixed.extend(set);
                    }
                }
            }
        }
        fm
    }
}

impl ExtentSource for Traverser {
    fn extent_of(&self, dim: Dim) -> Result<usize, LayoutError> {
        let pos = self.pos_of(dim).ok_or(LayoutError::UnknownDim(dim))?;
        self.exts.get_or(self.order[pos].1, dim)
    }
}

impl fmt::Display for Traverser {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.order.iter().map(|(d, _)| d.to_string()).collect();
        write!(f, "{}", names.join(" -> "))
    }
}

/// Decomposition of a traverser's dimensions into primitive index factors.
///
/// Every source dimension starts as one factor; splits refine a factor into
/// two, merges collect factors, broadcasts add replicated factors that
/// correspond to no source data. Comparing leaf-factor sets answers whether
/// a set of dimensions exactly covers the sources — the basis for checking
/// that data distributions partition (or deliberately replicate) an array.
#[derive(Clone, Debug)]
pub struct FactorMap {
    children: Vec<Option<(usize, usize)>>,
    replicated: Vec<bool>,
    synthetic: Vec<bool>,
    source: Vec<(Dim, usize)>,
    live: Vec<(Dim, BTreeSet<usize>)>,
    fixed: BTreeSet<usize>,
}

impl FactorMap {
    fn expand(&self, id: usize, out: &mut BTreeSet<usize>) {
        match self.children[id] {
            Some((a, b)) => {
                self.expand(a, out);
                self.expand(b, out);
            }
            None => {
                out.insert(id);
            }
        }
    }

    /// Leaf factors of all source dimensions: everything a distribution
    /// must account for.
    pub fn source_leaves(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for (_, id) in &self.source {
            self.expand(*id, &mut out);
        }
        out
    }

    /// Leaf factors of one source dimension.
    pub fn source_leaves_of(&self, dim: Dim) -> Option<BTreeSet<usize>> {
        self.source.iter().find(|(d, _)| *d == dim).map(|(_, root)| {
            let mut out = BTreeSet::new();
            self.expand(*root, &mut out);
            out
        })
    }

    /// Leaf factors covered by one live dimension.
    pub fn dim_leaves(&self, dim: Dim) -> Option<BTreeSet<usize>> {
        self.live.iter().find(|(d, _)| *d == dim).map(|(_, set)| {
            let mut out = BTreeSet::new();
            for id in set {
                self.expand(*id, &mut out);
            }
            out
        })
    }

    /// Leaf factors pinned by fixed dimensions.
    pub fn fixed_leaves(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for id in &self.fixed {
            self.expand(*id, &mut out);
        }
        out
    }

    /// Whether a factor descends from a broadcast dimension.
    pub fn is_replicated(&self, id: usize) -> bool {
        self.replicated[id]
    }

    /// The source dimension a leaf factor descends from, if any.
    pub fn source_dim_of(&self, id: usize) -> Option<Dim> {
        for (dim, root) in &self.source {
            let mut leaves = BTreeSet::new();
            self.expand(*root, &mut leaves);
            if leaves.contains(&id) {
                return Some(*dim);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ScalarType;

    fn col_major_2x3() -> Layout {
        Layout::new(ScalarType::I32)
            .vector("i", 2)
            .unwrap()
            .vector("j", 3)
            .unwrap()
    }

    #[test]
    fn joins_signatures_left_to_right() {
        let c = col_major_2x3();
        let a = Layout::new(ScalarType::I32)
            .vector("k", 4)
            .unwrap()
            .vector("i", 2)
            .unwrap();
        let b = Layout::new(ScalarType::I32)
            .vector("j", 3)
            .unwrap()
            .vector("k", 4)
            .unwrap();
        let t = Traverser::new(&[&c, &a, &b]).unwrap();
        assert_eq!(t.order(), vec![Dim::new("j"), Dim::new("i"), Dim::new("k")]);
        assert_eq!(t.count().unwrap(), 24);
    }

    #[test]
    fn shared_dims_must_agree_on_extent() {
        let a = Layout::new(ScalarType::I32).vector("i", 2).unwrap();
        let b = Layout::new(ScalarType::I32).vector("i", 3).unwrap();
        let err = Traverser::new(&[&a, &b]).unwrap_err();
        assert_eq!(
            err,
            LayoutError::ExtentConflict { dim: Dim::new("i"), existing: 2, requested: 3 }
        );
    }

    #[test]
    fn visits_lexicographically() {
        let t = Traverser::new(&[&col_major_2x3()]).unwrap();
        let mut seen = Vec::new();
        t.for_each(|s| seen.push((s.get(Dim::new("j")).unwrap(), s.get(Dim::new("i")).unwrap())))
            .unwrap();
        assert_eq!(seen, vec![(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]);
    }

    #[test]
    fn materialize_recomposes_split_dims() {
        let l = Layout::new(ScalarType::I32).vector("i", 8).unwrap();
        let t = Traverser::new(&[&l]).unwrap().into_blocks("i", "B", 4).unwrap();
        assert_eq!(t.order(), vec![Dim::new("B"), Dim::new("i")]);
        let mut states = Vec::new();
        t.for_each(|s| states.push(s.clone())).unwrap();
        assert_eq!(states.len(), 8);
        // Visit 6 is B = 1, local i = 2; the delivered i is global.
        assert_eq!(states[6].get(Dim::new("B")), Some(1));
        assert_eq!(states[6].get(Dim::new("i")), Some(6));
    }

    #[test]
    fn merge_delivers_parts_and_whole() {
        let l = Layout::new(ScalarType::I32)
            .vector("j", 3)
            .unwrap()
            .vector("i", 2)
            .unwrap();
        let t = Traverser::new(&[&l]).unwrap().merge_blocks("i", "j", "r").unwrap();
        assert_eq!(t.order(), vec![Dim::new("r")]);
        let mut states = Vec::new();
        t.for_each(|s| states.push(s.clone())).unwrap();
        assert_eq!(states.len(), 6);
        assert_eq!(states[4].get(Dim::new("r")), Some(4));
        assert_eq!(states[4].get(Dim::new("i")), Some(1));
        assert_eq!(states[4].get(Dim::new("j")), Some(1));
    }

    #[test]
    fn bcast_repeats_visits() {
        let l = Layout::new(ScalarType::I32).vector("i", 2).unwrap();
        let t = Traverser::new(&[&l]).unwrap().bcast("b", 3).unwrap();
        assert_eq!(t.order(), vec![Dim::new("b"), Dim::new("i")]);
        assert_eq!(t.bcast_dims(), &[Dim::new("b")]);
        let mut seen = Vec::new();
        t.for_each(|s| seen.push(s.get(Dim::new("i")).unwrap())).unwrap();
        assert_eq!(seen, vec![0, 1, 0, 1, 0, 1]);
    }

    #[test]
    fn empty_slice_visits_nothing() {
        let t = Traverser::new(&[&col_major_2x3()]).unwrap().slice("i", 0, 0).unwrap();
        let mut n = 0;
        t.for_each(|_| n += 1).unwrap();
        assert_eq!(n, 0);
    }

    #[test]
    fn fix_pins_and_delivers() {
        let t = Traverser::new(&[&col_major_2x3()])
            .unwrap()
            .fix(IndexState::new().bind("j", 2))
            .unwrap();
        assert_eq!(t.order(), vec![Dim::new("i")]);
        let mut seen = Vec::new();
        t.for_each(|s| seen.push((s.get(Dim::new("j")).unwrap(), s.get(Dim::new("i")).unwrap())))
            .unwrap();
        assert_eq!(seen, vec![(2, 0), (2, 1)]);
    }

    #[test]
    fn open_extents_resolve_through_merged_rank() {
        // Grid resolution: both block counts open, fuse them, give the
        // fused dimension the rank count and one factor its length; the
        // other factor and both block sizes follow.
        let l = Layout::new(ScalarType::F64)
            .vector("j", 64)
            .unwrap()
            .vector("i", 64)
            .unwrap()
            .into_blocks("i", "I", Extent::Open)
            .unwrap()
            .into_blocks("j", "J", Extent::Open)
            .unwrap()
            .set_length("I", 4)
            .unwrap();
        let t = Traverser::new(&[&l]).unwrap();
        assert_eq!(t.length_of("j").unwrap(), Extent::Open);
        let t = t.merge_blocks("I", "J", "r").unwrap().set_length("r", 16).unwrap();
        assert_eq!(t.order(), vec![Dim::new("r"), Dim::new("i"), Dim::new("j")]);
        assert_eq!(t.extent_of(Dim::new("i")).unwrap(), 16);
        assert_eq!(t.extent_of(Dim::new("j")).unwrap(), 16);
        assert_eq!(t.count().unwrap(), 16 * 16 * 16);
    }

    #[test]
    fn split_of_merged_is_allowed_on_traversers() {
        let t = Traverser::new(&[&col_major_2x3()])
            .unwrap()
            .merge_blocks("j", "i", "k")
            .unwrap()
            .into_blocks("k", "K", 3)
            .unwrap();
        assert_eq!(t.order(), vec![Dim::new("K"), Dim::new("k")]);
        let mut seen = Vec::new();
        t.for_each(|s| {
            seen.push((
                s.get(Dim::new("j")).unwrap(),
                s.get(Dim::new("i")).unwrap(),
            ))
        })
        .unwrap();
        // k = K * 3 + local, then j = k / 2, i = k % 2.
        assert_eq!(seen, vec![(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]);
    }

    #[test]
    fn factor_map_tracks_coverage() {
        // A GEMM-style A-matrix traverser: rows blocked, a broadcast grid
        // column fused with the block row into a rank dimension.
        let a = Layout::new(ScalarType::F64)
            .vector("k", 4)
            .unwrap()
            .vector("i", 8)
            .unwrap();
        let t = Traverser::new(&[&a])
            .unwrap()
            .into_blocks("i", "I", Extent::Open)
            .unwrap()
            .set_length("I", 2)
            .unwrap()
            .bcast("J", 2)
            .unwrap()
            .merge_blocks("I", "J", "r")
            .unwrap();
        assert_eq!(t.order(), vec![Dim::new("r"), Dim::new("i"), Dim::new("k")]);
        let fm = t.factor_map();
        let source = fm.source_leaves();
        let ranking = fm.dim_leaves(Dim::new("r")).unwrap();
        let mut covered = fm.dim_leaves(Dim::new("i")).unwrap();
        covered.extend(fm.dim_leaves(Dim::new("k")).unwrap());
        let residual: Vec<usize> = source.difference(&covered).copied().collect();
        // Exactly one source factor (the block-row index) rides on the
        // ranking dimension; the rest of the ranking is replication.
        assert_eq!(residual.len(), 1);
        assert!(ranking.contains(&residual[0]));
        assert_eq!(fm.source_dim_of(residual[0]), Some(Dim::new("i")));
        let extra: Vec<usize> = ranking.difference(&source).copied().collect();
        assert_eq!(extra.len(), 1);
        assert!(fm.is_replicated(extra[0]));
    }
}
