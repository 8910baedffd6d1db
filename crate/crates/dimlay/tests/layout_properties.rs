//! Randomized structural invariants of layout transforms.

use dimlay::corpus::{self, corpus_rng};
use dimlay::{IndexState, Layout, Stride};
use proptest::prelude::*;

/// Every index state of the layout, in signature order (last dim fastest).
fn enumerate_states(l: &Layout) -> Vec<IndexState> {
    let dims = l.dims();
    let extents: Vec<usize> = dims
        .iter()
        .map(|&d| l.length_of(d).unwrap().known().unwrap())
        .collect();
    let total: usize = extents.iter().product();
    let mut out = Vec::with_capacity(total);
    for mut k in 0..total {
        let mut state = IndexState::new();
        for pos in (0..dims.len()).rev() {
            state.set(dims[pos], k % extents[pos]);
            k /= extents[pos];
        }
        out.push(state);
    }
    out
}

fn all_offsets(l: &Layout) -> Vec<usize> {
    enumerate_states(l)
        .iter()
        .map(|s| l.offset_bytes(s).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// Layouts without holes enumerate exactly the multiples of the scalar
    /// width up to their footprint, each offset once.
    #[test]
    fn enumeration_is_a_bijection_onto_the_footprint(seed in any::<u64>()) {
        let gen = corpus::random_layout(&mut corpus_rng(seed));
        prop_assume!(!gen.kinds.iter().any(|k| *k == "slice" || *k == "fix"));
        let l = gen.layout;
        let w = l.scalar_type().size_bytes();
        let mut offsets = all_offsets(&l);
        offsets.sort_unstable();
        let expected: Vec<usize> = (0..l.size_bytes().unwrap() / w).map(|k| k * w).collect();
        prop_assert_eq!(offsets, expected);
    }

    /// Slicing remaps index `k` to the unsliced `start + k` and never
    /// changes the allocation footprint.
    #[test]
    fn slice_preserves_addresses_and_footprint(seed in any::<u64>()) {
        let gen = corpus::random_layout(&mut corpus_rng(seed));
        prop_assume!(!gen.kinds.iter().any(|k| *k == "fix"));
        let l = gen.layout;
        let mut rng = corpus_rng(seed ^ 0x5eed);
        let dims = l.dims();
        prop_assume!(!dims.is_empty());
        use rand::prelude::*;
        let d = *dims.choose(&mut rng).unwrap();
        let extent = l.length_of(d).unwrap().known().unwrap();
        let start = rng.random_range(0..extent);
        let len = rng.random_range(1..=extent - start);
        let sliced = l.clone().slice(d, start, len).unwrap();
        prop_assert_eq!(sliced.size_bytes().unwrap(), l.size_bytes().unwrap());
        for state in enumerate_states(&sliced) {
            let k = state.get(d).unwrap();
            let unsliced = state.clone().bind(d, start + k);
            prop_assert_eq!(
                sliced.offset_bytes(&state).unwrap(),
                l.offset_bytes(&unsliced).unwrap()
            );
        }
    }

    /// Splitting a dim and merging the halves back restores both the
    /// signature and every element address.
    #[test]
    fn split_then_merge_is_identity(seed in any::<u64>()) {
        let gen = corpus::random_layout(&mut corpus_rng(seed));
        let l = gen.layout;
        let mut rng = corpus_rng(seed ^ 0xface);
        use rand::prelude::*;
        let dims = l.dims();
        prop_assume!(!dims.is_empty());
        let d = *dims.choose(&mut rng).unwrap();
        let extent = l.length_of(d).unwrap().known().unwrap();
        let divisors: Vec<usize> = (1..=extent).filter(|b| extent % b == 0).collect();
        let block = *divisors.choose(&mut rng).unwrap();
        let roundtrip = l
            .clone()
            .into_blocks_named(d, 'X', 'x', block)
            .and_then(|l| l.merge_blocks('X', 'x', d));
        // Splitting a merge-derived dim is rejected; skip those draws.
        prop_assume!(roundtrip.is_ok());
        let rt = roundtrip.unwrap();
        prop_assert_eq!(rt.signature().to_string(), l.signature().to_string());
        for state in enumerate_states(&l) {
            prop_assert_eq!(rt.offset_bytes(&state).unwrap(), l.offset_bytes(&state).unwrap());
        }
    }

    /// Hoisting permutes the signature without touching any address.
    #[test]
    fn hoist_never_moves_data(seed in any::<u64>()) {
        let gen = corpus::random_layout(&mut corpus_rng(seed));
        let l = gen.layout;
        let mut rng = corpus_rng(seed ^ 0x401d);
        use rand::prelude::*;
        let dims = l.dims();
        prop_assume!(!dims.is_empty());
        let d = *dims.choose(&mut rng).unwrap();
        let hoisted = l.clone().hoist(d).unwrap();
        prop_assert_eq!(hoisted.dims()[0], d);
        let mut a = l.dims();
        let mut b = hoisted.dims();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
        prop_assert_eq!(hoisted.size_bytes().unwrap(), l.size_bytes().unwrap());
        for state in enumerate_states(&l) {
            prop_assert_eq!(
                hoisted.offset_bytes(&state).unwrap(),
                l.offset_bytes(&state).unwrap()
            );
        }
    }

    /// Where a dim reports a constant stride, stepping it by one moves the
    /// offset by exactly that stride from any base point.
    #[test]
    fn constant_strides_hold_at_every_base(seed in any::<u64>()) {
        let gen = corpus::random_layout(&mut corpus_rng(seed));
        let l = gen.layout;
        for d in l.dims() {
            let extent = l.length_of(d).unwrap().known().unwrap();
            if extent < 2 {
                continue;
            }
            let s = match l.stride_along(d).unwrap() {
                Stride::Constant(s) => s,
                Stride::NonConstant => continue,
            };
            for state in enumerate_states(&l) {
                let k = state.get(d).unwrap();
                if k + 1 >= extent {
                    continue;
                }
                let next = state.clone().bind(d, k + 1);
                let delta = l.offset_bytes(&next).unwrap() as i64 - l.offset_bytes(&state).unwrap() as i64;
                prop_assert_eq!(delta, s);
            }
        }
    }

    /// Fixing dims substitutes their indices without shrinking the footprint.
    #[test]
    fn fix_keeps_footprint_and_substitutes_indices(seed in any::<u64>()) {
        let gen = corpus::random_layout(&mut corpus_rng(seed));
        let l = gen.layout;
        let dims = l.dims();
        prop_assume!(dims.len() >= 2);
        let mut rng = corpus_rng(seed ^ 0xf1f1);
        use rand::prelude::*;
        let d = *dims.choose(&mut rng).unwrap();
        let extent = l.length_of(d).unwrap().known().unwrap();
        let pick = rng.random_range(0..extent);
        let fixed = l.clone().fix(IndexState::new().bind(d, pick)).unwrap();
        prop_assert_eq!(fixed.size_bytes().unwrap(), l.size_bytes().unwrap());
        prop_assert!(!fixed.dims().contains(&d));
        for state in enumerate_states(&fixed) {
            let full = state.clone().bind(d, pick);
            prop_assert_eq!(
                fixed.offset_bytes(&state).unwrap(),
                l.offset_bytes(&full).unwrap()
            );
        }
    }
}
