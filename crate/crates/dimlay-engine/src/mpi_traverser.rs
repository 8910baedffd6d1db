//! Traversers bound to a process group through a ranking dimension.

use std::collections::BTreeSet;

use dimlay::{Dim, Extent, ExtentSource, IndexState, Layout, LayoutError, Traverser};

use crate::error::EngineError;

/// A traverser whose `ranking` dimension indexes ranks instead of data:
/// fixing it to a rank number yields that rank's slice of the iteration
/// space. The ranking extent always equals the group size.
#[derive(Clone, Debug)]
pub struct MpiTraverser {
    trav: Traverser,
    ranking: Dim,
    ranks: usize,
}

/// Binds `ranking` to a group of `ranks` processes. An open ranking extent
/// is resolved to `ranks` (propagating through any block-size constraints);
/// a known extent must already match.
pub fn make_mpi_traverser(
    trav: Traverser,
    ranking: impl Into<Dim>,
    ranks: usize,
) -> Result<MpiTraverser, EngineError> {
    let ranking = ranking.into();
    let trav = match trav.length_of(ranking)? {
        Extent::Known(e) if e == ranks => trav,
        Extent::Known(e) => {
            return Err(EngineError::RankingMismatch { dim: ranking, extent: e, ranks })
        }
        Extent::Open => trav.set_length(ranking, ranks)?,
    };
    Ok(MpiTraverser { trav, ranking, ranks })
}

impl MpiTraverser {
    pub fn traverser(&self) -> &Traverser {
        &self.trav
    }

    pub fn ranking_dim(&self) -> Dim {
        self.ranking
    }

    pub fn ranks(&self) -> usize {
        self.ranks
    }

    /// The traversal of rank `q`'s share: the ranking dim pinned to `q`.
    pub fn for_rank(&self, q: usize) -> Result<Traverser, EngineError> {
        Ok(self
            .trav
            .clone()
            .fix(IndexState::new().bind(self.ranking, q))?)
    }

    /// Checks that `tile` is exactly one rank's share of `root`: the tile
    /// carries every distributed dim at full extent, and whatever the tile
    /// does not carry is pinned or absorbed into the ranking dim.
    pub fn check_subspace(&self, root: &Layout, tile: &Layout) -> Result<(), EngineError> {
        if tile.scalar_type() != root.scalar_type() {
            return Err(LayoutError::ScalarMismatch {
                expected: root.scalar_type(),
                got: tile.scalar_type(),
            }
            .into());
        }
        let expected: Vec<Dim> = self
            .trav
            .order()
            .into_iter()
            .filter(|d| *d != self.ranking)
            .collect();
        let tile_dims = tile.dims();
        let mut have = tile_dims.clone();
        let mut want = expected.clone();
        have.sort();
        want.sort();
        if have != want {
            return Err(EngineError::TileDimsMismatch { tile: tile_dims, expected });
        }
        for &d in &tile_dims {
            let want = self.trav.extent_of(d)?;
            let got = tile.extent_of(d)?;
            if want != got {
                return Err(EngineError::SubspaceExtentMismatch { dim: d, tile: got, expected: want });
            }
        }
        // Factor coverage: every primitive index factor of every root dim
        // must be kept live, pinned, or absorbed by the ranking.
        let fm = self.trav.factor_map();
        let mut covered = fm.fixed_leaves();
        for &d in &expected {
            covered.extend(fm.dim_leaves(d).expect("live dim in factor map"));
        }
        let ranking_leaves = fm.dim_leaves(self.ranking).expect("ranking dim in factor map");
        for d in root.dims() {
            let leaves = fm
                .source_leaves_of(d)
                .ok_or(LayoutError::UnknownDim(d))?;
            for leaf in leaves {
                if !covered.contains(&leaf) && !ranking_leaves.contains(&leaf) {
                    return Err(EngineError::UncoveredResidual { dim: d });
                }
            }
        }
        Ok(())
    }

    /// Gather needs the scatter conditions plus a genuine partition: no
    /// replicated factors anywhere, and nothing in the live space that is
    /// not root data (two tiles would otherwise claim the same cell).
    pub fn check_gather(&self, root: &Layout, tile: &Layout) -> Result<(), EngineError> {
        self.check_subspace(root, tile)?;
        let fm = self.trav.factor_map();
        let mut root_leaves = BTreeSet::new();
        for d in root.dims() {
            root_leaves.extend(fm.source_leaves_of(d).ok_or(LayoutError::UnknownDim(d))?);
        }
        for d in self.trav.order() {
            for leaf in fm.dim_leaves(d).expect("live dim in factor map") {
                if fm.is_replicated(leaf) {
                    return Err(EngineError::ReplicatedDimInGather { ranking: self.ranking });
                }
                if !root_leaves.contains(&leaf) {
                    return Err(EngineError::GatherNotPartition { ranking: self.ranking });
                }
            }
        }
        Ok(())
    }
}
