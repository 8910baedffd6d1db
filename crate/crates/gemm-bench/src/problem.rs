//! Problem construction: root layouts, rank distributions, local tiles.

use dimlay::{
    compile_for_traverser, DatatypePlan, Dim, Extent, Layout, LayoutError, ScalarType, Traverser,
};
use dimlay_engine::{make_mpi_traverser, EngineError, MpiTraverser};

use crate::config::GemmConfig;

/// One matrix's end-to-end distribution: the root buffer layout, the
/// traverser whose ranking dimension assigns shares, and the rank-local
/// tile layout.
pub struct MatrixDist {
    pub root: Layout,
    pub mt: MpiTraverser,
    pub tile: Layout,
}

pub struct Problem {
    pub c: MatrixDist,
    pub a: MatrixDist,
    pub b: MatrixDist,
    /// Columns of the rank grid, deduced by the extent solver as R / M.
    pub grid_n: usize,
}

fn row_major(outer: Dim, rows: usize, inner: Dim, cols: usize) -> Result<Layout, LayoutError> {
    Layout::new(ScalarType::F64)
        .vector(inner, cols)?
        .vector(outer, rows)
}

/// Dense rank-local tile over the traverser's deduced extents, with the
/// configured major dimension outermost.
fn dense_tile(src: &Traverser, dims: (Dim, Dim), major: char) -> Result<Layout, LayoutError> {
    let outer = Dim::from(major.to_ascii_lowercase());
    let (x, y) = dims;
    let inner = if outer == x { y } else { x };
    Layout::dense_like(src, &[inner, outer], ScalarType::F64)
}

/// Builds the three matrix distributions for one benchmark configuration.
///
/// Rank q owns grid cell (I, J) = (q / N, q mod N) of an M x N grid with
/// N = R / M. C is tiled in both dimensions; A carries row slabs repeated
/// across grid columns; B carries column slabs repeated across grid rows.
pub fn build_problem(cfg: &GemmConfig) -> Result<Problem, EngineError> {
    let GemmConfig { ni, nj, nk, ranks, grid_m, .. } = *cfg;
    let (i, j, k) = (Dim::from('i'), Dim::from('j'), Dim::from('k'));

    // C: block both dims, fuse the block indices row-major into the
    // ranking. Block sizes stay open; pinning the grid to M rows and the
    // ranking to R ranks lets the solver fill in everything else.
    let c_root = row_major(i, ni, j, nj)?;
    let c_trav = Traverser::new(&[&c_root])?
        .into_blocks(i, 'I', Extent::Open)?
        .into_blocks(j, 'J', Extent::Open)?
        .set_length('I', grid_m)?
        .merge_blocks('I', 'J', 'r')?;
    let c_mt = make_mpi_traverser(c_trav, 'r', ranks)?;

    // A: the broadcast J never addresses A's data, so every rank in a
    // grid row receives the same row slab.
    let a_root = row_major(i, ni, k, nk)?;
    let a_trav = Traverser::new(&[&a_root])?
        .into_blocks(i, 'I', Extent::Open)?
        .set_length('I', grid_m)?
        .bcast('J', Extent::Open)?
        .merge_blocks('I', 'J', 'r')?;
    let a_mt = make_mpi_traverser(a_trav, 'r', ranks)?;

    // B mirrors A: column slabs repeated down each grid column.
    let b_root = row_major(k, nk, j, nj)?;
    let b_trav = Traverser::new(&[&b_root])?
        .into_blocks(j, 'J', Extent::Open)?
        .bcast('I', grid_m)?
        .merge_blocks('I', 'J', 'r')?;
    let b_mt = make_mpi_traverser(b_trav, 'r', ranks)?;

    let c_tile = dense_tile(c_mt.traverser(), (i, j), cfg.majors.c)?;
    let a_tile = dense_tile(a_mt.traverser(), (i, k), cfg.majors.a)?;
    let b_tile = dense_tile(b_mt.traverser(), (k, j), cfg.majors.b)?;

    // The collectives would reject a bad tile anyway; checking here turns
    // shape mistakes into errors before any rank spawns.
    c_mt.check_gather(&c_root, &c_tile)?;
    a_mt.check_subspace(&a_root, &a_tile)?;
    b_mt.check_subspace(&b_root, &b_tile)?;

    Ok(Problem {
        grid_n: ranks / grid_m,
        c: MatrixDist { root: c_root, mt: c_mt, tile: c_tile },
        a: MatrixDist { root: a_root, mt: a_mt, tile: a_tile },
        b: MatrixDist { root: b_root, mt: b_mt, tile: b_tile },
    })
}

/// The datatype plans for both endpoints of each matrix's collective:
/// the root buffer and the local tile, walked in the traverser's order.
pub fn endpoint_plans(p: &Problem) -> Result<Vec<(String, DatatypePlan)>, LayoutError> {
    let mut out = Vec::new();
    for (name, m) in [("C", &p.c), ("A", &p.a), ("B", &p.b)] {
        let order = m.mt.traverser().order();
        out.push((format!("{name} root"), compile_for_traverser(&m.root, &order)?));
        out.push((format!("{name} tile"), compile_for_traverser(&m.tile, &order)?));
    }
    Ok(out)
}
