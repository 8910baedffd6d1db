//! Seeded random layouts and traversal orders for the randomized suites.
//!
//! Layouts stay small on purpose: at most 4 dims, every extent at most 8,
//! so brute-force offset enumeration stays cheap as an oracle.

use crate::dim::{Dim, IndexState};
use crate::extent::Extent;
use crate::layout::Layout;
use crate::scalar::ScalarType;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

const NAME_POOL: [char; 16] = [
    'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'A', 'B', 'C', 'D', 'E', 'F', 'G', 'H',
];

pub fn corpus_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A generated layout plus the names of every transform kind that built it.
pub struct RandomLayout {
    pub layout: Layout,
    pub kinds: Vec<&'static str>,
}

fn fresh(used: &mut Vec<char>) -> Dim {
    for c in NAME_POOL {
        if !used.contains(&c) {
            used.push(c);
            return Dim::from(c);
        }
    }
    panic!("name pool exhausted");
}

fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|d| n % d == 0).collect()
}

fn known_len(layout: &Layout, dim: Dim) -> usize {
    layout.length_of(dim).unwrap().known().unwrap()
}

fn base_vectors(rng: &mut impl Rng, used: &mut Vec<char>) -> Layout {
    let scalar = *ScalarType::all().choose(rng).unwrap();
    let mut layout = Layout::new(scalar);
    for _ in 0..rng.random_range(1..=3) {
        let d = fresh(used);
        layout = layout.vector(d, rng.random_range(1..=8usize)).unwrap();
    }
    layout
}

/// Splits a random non-merged dim; sometimes renames the minor half,
/// sometimes leaves the block size open and pins it with `set_length`.
fn apply_split(
    rng: &mut impl Rng,
    layout: &Layout,
    used: &mut Vec<char>,
    kinds: &mut Vec<&'static str>,
) -> Option<Layout> {
    if layout.dims().len() >= 4 {
        return None;
    }
    let candidates: Vec<Dim> = layout
        .dims()
        .into_iter()
        .filter(|d| !layout.merged_dims().contains(d))
        .collect();
    let orig = *candidates.choose(rng)?;
    let extent = known_len(layout, orig);
    let block = *divisors(extent).choose(rng).unwrap();
    let major = fresh(used);
    let rename = rng.random_bool(0.4);
    let minor = if rename { fresh(used) } else { orig };
    let open = rng.random_bool(0.35);
    let ext = if open { Extent::Open } else { Extent::Known(block) };
    let mut out = layout
        .clone()
        .into_blocks_named(orig, major, minor, ext)
        .ok()?;
    kinds.push("into_blocks");
    if open {
        out = out.set_length(major, extent / block).ok()?;
        kinds.push("set_length");
    }
    Some(out)
}

fn apply_merge(
    rng: &mut impl Rng,
    layout: &Layout,
    used: &mut Vec<char>,
    kinds: &mut Vec<&'static str>,
) -> Option<Layout> {
    let dims = layout.dims();
    let mut pairs = Vec::new();
    for &a in &dims {
        for &b in &dims {
            if a != b && known_len(layout, a) * known_len(layout, b) <= 8 {
                pairs.push((a, b));
            }
        }
    }
    let (major, minor) = *pairs.choose(rng)?;
    let merged = if rng.random_bool(0.3) {
        if rng.random_bool(0.5) {
            major
        } else {
            minor
        }
    } else {
        fresh(used)
    };
    let out = layout.clone().merge_blocks(major, minor, merged).ok()?;
    kinds.push("merge_blocks");
    Some(out)
}

fn apply_hoist(rng: &mut impl Rng, layout: &Layout, kinds: &mut Vec<&'static str>) -> Option<Layout> {
    let d = *layout.dims().choose(rng)?;
    let out = layout.clone().hoist(d).ok()?;
    kinds.push("hoist");
    Some(out)
}

fn apply_slice(rng: &mut impl Rng, layout: &Layout, kinds: &mut Vec<&'static str>) -> Option<Layout> {
    let d = *layout.dims().choose(rng)?;
    let extent = known_len(layout, d);
    let start = rng.random_range(0..extent);
    let len = rng.random_range(1..=extent - start);
    let out = layout.clone().slice(d, start, len).ok()?;
    kinds.push("slice");
    Some(out)
}

fn apply_fix(rng: &mut impl Rng, layout: &Layout, kinds: &mut Vec<&'static str>) -> Option<Layout> {
    let dims = layout.dims();
    if dims.len() < 2 {
        return None;
    }
    let d = *dims.choose(rng)?;
    let index = rng.random_range(0..known_len(layout, d));
    let out = layout.clone().fix(IndexState::new().bind(d, index)).ok()?;
    kinds.push("fix");
    Some(out)
}

/// A random layout exercising the full transform vocabulary.
pub fn random_layout(rng: &mut impl Rng) -> RandomLayout {
    let mut used = Vec::new();
    let mut kinds = vec!["vector"];
    let mut layout = base_vectors(rng, &mut used);
    let ops = rng.random_range(0..=4);
    let mut applied = 0;
    let mut attempts = 0;
    while applied < ops && attempts < 32 {
        attempts += 1;
        let next = match rng.random_range(0..5) {
            0 => apply_split(rng, &layout, &mut used, &mut kinds),
            1 => apply_merge(rng, &layout, &mut used, &mut kinds),
            2 => apply_hoist(rng, &layout, &mut kinds),
            3 => apply_slice(rng, &layout, &mut kinds),
            _ => apply_fix(rng, &layout, &mut kinds),
        };
        if let Some(l) = next {
            layout = l;
            applied += 1;
        }
    }
    RandomLayout { layout, kinds }
}

/// A random layout built only from `vector`, `into_blocks`, and `set_length`;
/// such layouts are contiguous when walked in their own signature order.
pub fn random_construction_layout(rng: &mut impl Rng) -> Layout {
    let mut used = Vec::new();
    let mut kinds = Vec::new();
    let mut layout = base_vectors(rng, &mut used);
    for _ in 0..rng.random_range(0..=3) {
        if let Some(l) = apply_split(rng, &layout, &mut used, &mut kinds) {
            layout = l;
        }
    }
    layout
}

/// A random permutation of the layout's dims, usable as a traversal order.
pub fn random_order(rng: &mut impl Rng, layout: &Layout) -> Vec<Dim> {
    let mut order = layout.dims();
    order.shuffle(rng);
    order
}
