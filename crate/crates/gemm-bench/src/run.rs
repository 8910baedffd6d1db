//! The SPMD benchmark driver: scatter, compute, gather, repeat.

use std::time::Instant;

use dimlay::{Bag, BagLike, IndexState, LayoutError, Traverser};
use dimlay_engine::{gather, run_spmd, scatter, EngineError, SimGroup, SpmdError};
use thiserror::Error;

use crate::config::GemmConfig;
use crate::oracle::{init_a, init_b, init_c, ALPHA, BETA};
use crate::problem::build_problem;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Run(#[from] SpmdError),
    #[error("{0}")]
    Io(String),
}

/// One wall-clock measurement taken on rank 0.
#[derive(Clone, Debug)]
pub struct PhaseRow {
    pub phase: &'static str,
    pub repeat: usize,
    pub seconds: f64,
}

#[derive(Debug)]
pub struct GemmRun {
    pub rows: Vec<PhaseRow>,
    /// Root C bytes after the final gather.
    pub gathered: Vec<u8>,
}

/// Runs the configured problem on an in-process rank group and returns
/// rank 0's measurements along with the gathered result.
pub fn run_distributed_gemm(cfg: &GemmConfig) -> Result<GemmRun, BenchError> {
    if cfg.ranks == 0 || cfg.repeats == 0 {
        return Err(BenchError::Config("ranks and repeats must be positive".into()));
    }
    if cfg.grid_m == 0 || cfg.ranks % cfg.grid_m != 0 {
        return Err(BenchError::Config(format!(
            "grid rows {} do not divide the {} ranks",
            cfg.grid_m, cfg.ranks
        )));
    }
    // Surface shape errors before spawning any ranks.
    build_problem(cfg).map_err(|e| BenchError::Config(e.to_string()))?;
    let mut results = run_spmd(cfg.ranks, |g| rank_body(&g, cfg))?;
    Ok(results.swap_remove(0).expect("rank 0 carries the run record"))
}

struct Roots {
    c: Bag,
    a: Bag,
    b: Bag,
}

fn fill_root(
    bag: &mut Bag,
    rows: (char, usize),
    cols: (char, usize),
    f: impl Fn(usize, usize) -> f64,
) -> Result<(), LayoutError> {
    for r in 0..rows.1 {
        for c in 0..cols.1 {
            bag.set_f64(&IndexState::new().bind(rows.0, r).bind(cols.0, c), f(r, c))?;
        }
    }
    Ok(())
}

fn rank_body(g: &SimGroup, cfg: &GemmConfig) -> Result<Option<GemmRun>, EngineError> {
    let p = build_problem(cfg)?;
    let me = g.rank();
    let (ni, nj, nk) = (cfg.ni, cfg.nj, cfg.nk);

    let mut roots = if me == 0 {
        let mut r = Roots {
            c: Bag::allocate(p.c.root.clone())?,
            a: Bag::allocate(p.a.root.clone())?,
            b: Bag::allocate(p.b.root.clone())?,
        };
        fill_root(&mut r.a, ('i', ni), ('k', nk), |i, k| init_a(i, k, nk))?;
        fill_root(&mut r.b, ('k', nk), ('j', nj), |k, j| init_b(k, j, nj))?;
        Some(r)
    } else {
        None
    };

    let mut c_tile = Bag::allocate(p.c.tile.clone())?;
    let mut a_tile = Bag::allocate(p.a.tile.clone())?;
    let mut b_tile = Bag::allocate(p.b.tile.clone())?;

    // The (i, j) sweep over the local C tile, and the k line across the
    // operand tiles; built once, pinned per cell inside the kernel.
    let outer = Traverser::new(&[&p.c.tile])?.hoist('j')?.hoist('i')?;
    let inner = Traverser::new(&[&p.a.tile, &p.b.tile])?;

    let mut rows = Vec::new();
    for rep in 0..cfg.repeats {
        if let Some(r) = roots.as_mut() {
            // fresh C so every repeat computes the same problem
            fill_root(&mut r.c, ('i', ni), ('j', nj), |i, j| init_c(i, j, ni))?;
        }

        g.barrier()?;
        let t = Instant::now();
        scatter(g, roots.as_ref().map(|r| &r.c), &mut c_tile, &p.c.mt, 0)?;
        scatter(g, roots.as_ref().map(|r| &r.a), &mut a_tile, &p.a.mt, 0)?;
        scatter(g, roots.as_ref().map(|r| &r.b), &mut b_tile, &p.b.mt, 0)?;
        g.barrier()?;
        push_row(&mut rows, me, "scatter", rep, t);

        let t = Instant::now();
        multiply_tile(&outer, &inner, &mut c_tile, &a_tile, &b_tile)?;
        g.barrier()?;
        push_row(&mut rows, me, "compute", rep, t);

        let t = Instant::now();
        gather(g, &c_tile, roots.as_mut().map(|r| &mut r.c), &p.c.mt, 0)?;
        g.barrier()?;
        push_row(&mut rows, me, "gather", rep, t);
    }

    Ok(roots.map(|r| GemmRun { rows, gathered: r.c.into_bytes() }))
}

fn push_row(rows: &mut Vec<PhaseRow>, me: usize, phase: &'static str, repeat: usize, t: Instant) {
    if me == 0 {
        rows.push(PhaseRow { phase, repeat, seconds: t.elapsed().as_secs_f64() });
    }
}

/// C := beta*C + alpha*A*B on the local tiles. k ascends so the per-cell
/// summation order matches the sequential reference exactly.
fn multiply_tile(
    outer: &Traverser,
    inner: &Traverser,
    c: &mut Bag,
    a: &Bag,
    b: &Bag,
) -> Result<(), LayoutError> {
    outer.try_for_each(|cell| {
        let mut acc = BETA * c.f64_at(cell)?;
        let line = inner.clone().fix(cell.clone())?;
        line.try_for_each(|at| {
            acc += ALPHA * a.f64_at(at)? * b.f64_at(at)?;
            Ok(())
        })?;
        c.set_f64(cell, acc)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Majors;
    use crate::oracle::check_result;

    fn cfg(ni: usize, nj: usize, nk: usize, ranks: usize, grid_m: usize, majors: &str) -> GemmConfig {
        GemmConfig {
            dataset: "custom".into(),
            ni,
            nj,
            nk,
            ranks,
            grid_m,
            majors: Majors::parse(majors).unwrap(),
            repeats: 2,
        }
    }

    #[test]
    fn single_rank_equals_the_reference() {
        let c = cfg(8, 8, 8, 1, 1, "I/I/K");
        let run = run_distributed_gemm(&c).unwrap();
        assert_eq!(check_result(&run.gathered, 8, 8, 8), Ok(()));
        assert_eq!(run.rows.len(), 6); // 2 repeats x 3 phases
    }

    #[test]
    fn four_ranks_on_a_rectangular_problem() {
        let c = cfg(8, 12, 4, 4, 2, "J/K/J");
        let run = run_distributed_gemm(&c).unwrap();
        assert_eq!(check_result(&run.gathered, 8, 12, 4), Ok(()));
    }

    #[test]
    fn row_and_column_grids() {
        for (m, majors) in [(1, "I/I/J"), (4, "J/I/K")] {
            let c = cfg(16, 8, 8, 4, m, majors);
            let run = run_distributed_gemm(&c).unwrap();
            assert_eq!(check_result(&run.gathered, 16, 8, 8), Ok(()), "grid_m={m}");
        }
    }

    #[test]
    fn phase_rows_are_ordered_and_nonnegative() {
        let c = cfg(8, 8, 8, 4, 2, "I/I/K");
        let run = run_distributed_gemm(&c).unwrap();
        let phases: Vec<&str> = run.rows.iter().map(|r| r.phase).collect();
        assert_eq!(phases, ["scatter", "compute", "gather", "scatter", "compute", "gather"]);
        assert!(run.rows.iter().all(|r| r.seconds >= 0.0));
        assert_eq!(run.rows[0].repeat, 0);
        assert_eq!(run.rows[3].repeat, 1);
    }

    #[test]
    fn config_errors_come_back_as_config() {
        let bad = cfg(8, 8, 8, 4, 3, "I/I/K"); // 3 does not divide 4 ranks
        match run_distributed_gemm(&bad) {
            Err(BenchError::Config(_)) => {}
            other => panic!("expected a config error, got {other:?}"),
        }
        let bad = cfg(9, 8, 8, 4, 2, "I/I/K"); // 2 does not divide 9 rows
        assert!(matches!(run_distributed_gemm(&bad), Err(BenchError::Config(_))));
    }
}
