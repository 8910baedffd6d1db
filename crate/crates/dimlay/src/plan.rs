//! Datatype plans: tree descriptions of which bytes a layout touches,
//! in which order, under a chosen dimension nesting.
//!
//! A plan is what you would hand to a message-passing runtime as a derived
//! datatype. Compiling one works per dimension: because offsets decompose
//! into independent per-dimension displacements, each dimension becomes one
//! tree level — contiguous, strided, or explicitly indexed.

use std::fmt::Write as _;

use crate::dim::{Dim, IndexState};
use crate::error::LayoutError;
use crate::layout::Layout;
use crate::scalar::ScalarType;

#[derive(Clone, Debug, PartialEq)]
pub enum DatatypePlan {
    ScalarLeaf(ScalarType),
    /// `count` copies of `inner`, each directly after the previous.
    Repeat { count: usize, inner: Box<DatatypePlan> },
    /// `count` copies of `inner`, consecutive starts `stride` bytes apart.
    StridedRepeat { count: usize, stride: i64, inner: Box<DatatypePlan> },
    /// One copy of `inner` at each byte displacement.
    IndexedGroup { displacements: Vec<i64>, inner: Box<DatatypePlan> },
    /// Heterogeneous parts at byte displacements.
    MixedGroup { parts: Vec<(i64, DatatypePlan)> },
}

impl DatatypePlan {
    pub fn leaf(scalar: ScalarType) -> DatatypePlan {
        DatatypePlan::ScalarLeaf(scalar)
    }

    pub fn repeat(count: usize, inner: DatatypePlan) -> DatatypePlan {
        DatatypePlan::Repeat { count, inner: Box::new(inner) }
    }

    pub fn strided(count: usize, stride: i64, inner: DatatypePlan) -> DatatypePlan {
        DatatypePlan::StridedRepeat { count, stride, inner: Box::new(inner) }
    }

    pub fn indexed(displacements: Vec<i64>, inner: DatatypePlan) -> DatatypePlan {
        DatatypePlan::IndexedGroup { displacements, inner: Box::new(inner) }
    }

    /// Number of scalar elements one instance covers.
    pub fn element_count(&self) -> usize {
        match self {
            DatatypePlan::ScalarLeaf(_) => 1,
            DatatypePlan::Repeat { count, inner } | DatatypePlan::StridedRepeat { count, inner, .. } => {
                count * inner.element_count()
            }
            DatatypePlan::IndexedGroup { displacements, inner } => {
                displacements.len() * inner.element_count()
            }
            DatatypePlan::MixedGroup { parts } => {
                parts.iter().map(|(_, p)| p.element_count()).sum()
            }
        }
    }

    /// Lowest byte position touched, relative to the plan's origin.
    pub fn lower_bound_bytes(&self) -> i64 {
        match self {
            DatatypePlan::ScalarLeaf(_) => 0,
            DatatypePlan::Repeat { count: _, inner } => inner.lower_bound_bytes(),
            DatatypePlan::StridedRepeat { count, stride, inner } => {
                let last = (*count as i64 - 1) * stride;
                inner.lower_bound_bytes() + last.min(0)
            }
            DatatypePlan::IndexedGroup { displacements, inner } => {
                let min = displacements.iter().copied().min().unwrap_or(0);
                min + inner.lower_bound_bytes()
            }
            DatatypePlan::MixedGroup { parts } => parts
                .iter()
                .map(|(d, p)| d + p.lower_bound_bytes())
                .min()
                .unwrap_or(0),
        }
    }

    /// Bytes from the lowest to one past the highest position touched.
    pub fn extent_bytes(&self) -> i64 {
        self.upper_bound_bytes() - self.lower_bound_bytes()
    }

    pub fn upper_bound_bytes(&self) -> i64 {
        match self {
            DatatypePlan::ScalarLeaf(s) => s.size_bytes() as i64,
            DatatypePlan::Repeat { count, inner } => {
                inner.lower_bound_bytes() + *count as i64 * inner.extent_bytes()
            }
            DatatypePlan::StridedRepeat { count, stride, inner } => {
                let last = (*count as i64 - 1) * stride;
                last.max(0) + inner.upper_bound_bytes()
            }
            DatatypePlan::IndexedGroup { displacements, inner } => {
                let max = displacements.iter().copied().max().unwrap_or(0);
                max + inner.upper_bound_bytes()
            }
            DatatypePlan::MixedGroup { parts } => parts
                .iter()
                .map(|(d, p)| d + p.upper_bound_bytes())
                .max()
                .unwrap_or(0),
        }
    }

    /// Byte offset of every element, in transfer order.
    pub fn element_sequence(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.element_count());
        self.walk_sequence(0, &mut out);
        out
    }

    fn walk_sequence(&self, at: i64, out: &mut Vec<i64>) {
        match self {
            DatatypePlan::ScalarLeaf(_) => out.push(at),
            DatatypePlan::Repeat { count, inner } => {
                let step = inner.extent_bytes();
                for k in 0..*count {
                    inner.walk_sequence(at + k as i64 * step, out);
                }
            }
            DatatypePlan::StridedRepeat { count, stride, inner } => {
                for k in 0..*count {
                    inner.walk_sequence(at + k as i64 * stride, out);
                }
            }
            DatatypePlan::IndexedGroup { displacements, inner } => {
                for d in displacements {
                    inner.walk_sequence(at + d, out);
                }
            }
            DatatypePlan::MixedGroup { parts } => {
                for (d, p) in parts {
                    p.walk_sequence(at + d, out);
                }
            }
        }
    }

    /// The scalar types of the elements in transfer order, run-length
    /// encoded. Two plans move the same data shape iff these agree.
    pub fn scalar_runs(&self) -> Vec<(ScalarType, usize)> {
        let mut out: Vec<(ScalarType, usize)> = Vec::new();
        self.walk_runs(&mut out, 1);
        out
    }

    fn walk_runs(&self, out: &mut Vec<(ScalarType, usize)>, times: usize) {
        if times == 0 {
            return;
        }
        match self {
            DatatypePlan::ScalarLeaf(s) => match out.last_mut() {
                Some((t, n)) if t == s => *n += times,
                _ => out.push((*s, times)),
            },
            DatatypePlan::Repeat { count, inner } | DatatypePlan::StridedRepeat { count, inner, .. } => {
                inner.walk_runs(out, times * count);
            }
            DatatypePlan::IndexedGroup { displacements, inner } => {
                inner.walk_runs(out, times * displacements.len());
            }
            DatatypePlan::MixedGroup { parts } => {
                // Parts may differ, so the whole group is expanded per repeat.
                for _ in 0..times {
                    for (_, p) in parts {
                        p.walk_runs(out, 1);
                    }
                }
            }
        }
    }

    /// Collapses strided repeats whose stride equals the inner extent into
    /// plain repeats, bottom-up.
    pub fn normalize(self) -> DatatypePlan {
        match self {
            DatatypePlan::ScalarLeaf(_) => self,
            DatatypePlan::Repeat { count, inner } => {
                DatatypePlan::repeat(count, inner.normalize())
            }
            DatatypePlan::StridedRepeat { count, stride, inner } => {
                let inner = inner.normalize();
                if stride == inner.extent_bytes() {
                    DatatypePlan::repeat(count, inner)
                } else {
                    DatatypePlan::strided(count, stride, inner)
                }
            }
            DatatypePlan::IndexedGroup { displacements, inner } => {
                DatatypePlan::indexed(displacements, inner.normalize())
            }
            DatatypePlan::MixedGroup { parts } => DatatypePlan::MixedGroup {
                parts: parts.into_iter().map(|(d, p)| (d, p.normalize())).collect(),
            },
        }
    }

    /// Renders the constructor-call sequence that would build this type in
    /// a message-passing API, innermost type first, ending with a commit.
    pub fn render_calls(&self) -> Vec<String> {
        let mut lines = Vec::new();
        let top = self.render_into(&mut lines);
        lines.push(format!("commit({top})"));
        lines
    }

    fn render_into(&self, lines: &mut Vec<String>) -> String {
        match self {
            DatatypePlan::ScalarLeaf(s) => s.mpi_name().to_string(),
            DatatypePlan::Repeat { count, inner } => {
                let arg = inner.render_into(lines);
                let name = format!("t{}", lines.len());
                lines.push(format!("{name} = contiguous({count}, {arg})"));
                name
            }
            DatatypePlan::StridedRepeat { count, stride, inner } => {
                let arg = inner.render_into(lines);
                let name = format!("t{}", lines.len());
                lines.push(format!("{name} = hvector({count}, {stride}, {arg})"));
                name
            }
            DatatypePlan::IndexedGroup { displacements, inner } => {
                let arg = inner.render_into(lines);
                let name = format!("t{}", lines.len());
                let mut list = String::new();
                for (i, d) in displacements.iter().enumerate() {
                    if i > 0 {
                        list.push_str(", ");
                    }
                    write!(list, "{d}").unwrap();
                }
                lines.push(format!("{name} = hindexed([{list}], {arg})"));
                name
            }
            DatatypePlan::MixedGroup { parts } => {
                let args: Vec<(i64, String)> = parts
                    .iter()
                    .map(|(d, p)| (*d, p.render_into(lines)))
                    .collect();
                let name = format!("t{}", lines.len());
                let mut list = String::new();
                for (i, (d, a)) in args.iter().enumerate() {
                    if i > 0 {
                        list.push_str(", ");
                    }
                    write!(list, "({d}, {a})").unwrap();
                }
                lines.push(format!("{name} = struct([{list}])"));
                name
            }
        }
    }
}

/// Whether two plans carry the same element stream: equal scalar type runs,
/// regardless of how either side scatters them in memory.
pub fn plans_compatible(a: &DatatypePlan, b: &DatatypePlan) -> bool {
    a.scalar_runs() == b.scalar_runs()
}

/// Compiles a layout into a datatype plan under the given dimension
/// nesting: `order[0]` is the slowest (outermost) dimension. The plan's
/// element sequence equals enumerating the layout's offsets in
/// lexicographic order of `order`.
pub fn compile(layout: &Layout, order: &[Dim]) -> Result<DatatypePlan, LayoutError> {
    let dims = layout.dims();
    let is_perm = order.len() == dims.len()
        && dims.iter().all(|d| order.contains(d))
        && order.iter().all(|d| dims.contains(d));
    if !is_perm {
        return Err(LayoutError::NotAPermutation { order: order.to_vec(), dims });
    }

    let zero = IndexState::from_pairs(order.iter().map(|d| (*d, 0usize)));
    let base = if order.is_empty() {
        0
    } else {
        layout.offset_bytes(&zero)? as i64
    };

    let mut lbs = Vec::with_capacity(order.len());
    let mut probes = Vec::with_capacity(order.len());
    for &d in order {
        lbs.push(layout.lower_bound_along(d)?);
        probes.push(layout.probe_axis(d)?);
    }
    let leaf_base = base - lbs.iter().sum::<i64>();

    let mut plan = DatatypePlan::leaf(layout.scalar_type());
    if leaf_base != 0 {
        plan = DatatypePlan::indexed(vec![leaf_base], plan);
    }
    for k in (0..order.len()).rev() {
        let probe = &probes[k];
        let disps: Vec<i64> = probe
            .iter()
            .map(|&p| p as i64 - probe[0] as i64 + lbs[k])
            .collect();
        let count = disps.len();
        if count == 1 {
            plan = if disps[0] == 0 {
                DatatypePlan::repeat(1, plan)
            } else {
                DatatypePlan::indexed(disps, plan)
            };
            continue;
        }
        let delta = disps[1] - disps[0];
        let constant = disps.windows(2).all(|w| w[1] - w[0] == delta);
        plan = if constant && disps[0] == 0 && delta > 0 {
            if delta == plan.extent_bytes() {
                DatatypePlan::repeat(count, plan)
            } else {
                DatatypePlan::strided(count, delta, plan)
            }
        } else {
            DatatypePlan::indexed(disps, plan)
        };
    }
    Ok(plan)
}

/// Compile under a traverser's dimension order, ignoring order entries the
/// layout does not have (broadcast or already-fixed dimensions).
pub fn compile_for_traverser(layout: &Layout, order: &[Dim]) -> Result<DatatypePlan, LayoutError> {
    let dims = layout.dims();
    let filtered: Vec<Dim> = order.iter().copied().filter(|d| dims.contains(d)).collect();
    compile(layout, &filtered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::Stride;

    fn leaf_i32() -> DatatypePlan {
        DatatypePlan::leaf(ScalarType::I32)
    }

    #[test]
    fn contiguous_render() {
        let l = Layout::new(ScalarType::I32)
            .vector("j", 3)
            .unwrap()
            .vector("i", 2)
            .unwrap();
        let plan = compile(&l, &[Dim::new("i"), Dim::new("j")]).unwrap();
        assert_eq!(plan, DatatypePlan::repeat(2, DatatypePlan::repeat(3, leaf_i32())));
        assert_eq!(
            plan.render_calls(),
            vec![
                "t0 = contiguous(3, MPI_INT)".to_string(),
                "t1 = contiguous(2, t0)".to_string(),
                "commit(t1)".to_string(),
            ]
        );
    }

    #[test]
    fn transposed_access_is_strided() {
        // Column-major storage walked row-major.
        let l = Layout::new(ScalarType::I32)
            .vector("i", 2)
            .unwrap()
            .vector("j", 3)
            .unwrap();
        assert_eq!(l.stride_along("i").unwrap(), Stride::Constant(4));
        let plan = compile(&l, &[Dim::new("i"), Dim::new("j")]).unwrap();
        assert_eq!(
            plan,
            DatatypePlan::strided(2, 4, DatatypePlan::strided(3, 8, leaf_i32()))
        );
        assert_eq!(plan.element_sequence(), vec![0, 8, 16, 4, 12, 20]);
    }

    #[test]
    fn sliced_vector_keeps_source_displacements() {
        let l = Layout::new(ScalarType::F32)
            .vector("i", 8)
            .unwrap()
            .slice("i", 2, 3)
            .unwrap();
        let plan = compile(&l, &[Dim::new("i")]).unwrap();
        assert_eq!(plan, DatatypePlan::indexed(vec![8, 12, 16], DatatypePlan::leaf(ScalarType::F32)));
        assert_eq!(
            plan.render_calls(),
            vec![
                "t0 = hindexed([8, 12, 16], MPI_FLOAT)".to_string(),
                "commit(t0)".to_string(),
            ]
        );
    }

    #[test]
    fn merged_axis_needs_explicit_displacements() {
        let l = Layout::new(ScalarType::I32)
            .vector("j", 2)
            .unwrap()
            .vector("i", 2)
            .unwrap()
            .merge_blocks("j", "i", "k")
            .unwrap();
        // k walks j-major while j is the contiguous axis: 0, 8, 4, 12.
        let plan = compile(&l, &[Dim::new("k")]).unwrap();
        assert_eq!(plan, DatatypePlan::indexed(vec![0, 8, 4, 12], leaf_i32()));
    }

    #[test]
    fn fixing_dims_offsets_the_leaf() {
        let l = Layout::new(ScalarType::I32)
            .vector("i", 4)
            .unwrap()
            .vector("j", 3)
            .unwrap()
            .fix(IndexState::new().bind("j", 1))
            .unwrap();
        let plan = compile(&l, &[Dim::new("i")]).unwrap();
        // Column j = 1 starts 16 bytes in; i remains contiguous.
        assert_eq!(
            plan,
            DatatypePlan::repeat(4, DatatypePlan::indexed(vec![16], leaf_i32()))
        );
        assert_eq!(plan.element_sequence(), vec![16, 20, 24, 28]);
    }

    #[test]
    fn scalar_layout_commits_bare_leaf() {
        let l = Layout::new(ScalarType::I32);
        let plan = compile(&l, &[]).unwrap();
        assert_eq!(plan.render_calls(), vec!["commit(MPI_INT)".to_string()]);
    }

    #[test]
    fn rejects_non_permutation_orders() {
        let l = Layout::new(ScalarType::I32).vector("i", 2).unwrap();
        assert!(matches!(
            compile(&l, &[Dim::new("i"), Dim::new("j")]),
            Err(LayoutError::NotAPermutation { .. })
        ));
        assert!(matches!(compile(&l, &[]), Err(LayoutError::NotAPermutation { .. })));
    }

    #[test]
    fn normalize_collapses_contiguous_strides() {
        let plan = DatatypePlan::strided(2, 12, DatatypePlan::strided(3, 4, leaf_i32()));
        assert_eq!(
            plan.normalize(),
            DatatypePlan::repeat(2, DatatypePlan::repeat(3, leaf_i32()))
        );
    }

    #[test]
    fn compatibility_ignores_placement() {
        let a = DatatypePlan::repeat(6, leaf_i32());
        let b = DatatypePlan::strided(2, 4, DatatypePlan::strided(3, 8, leaf_i32()));
        assert!(plans_compatible(&a, &b));
        let c = DatatypePlan::repeat(5, leaf_i32());
        assert!(!plans_compatible(&a, &c));
        let d = DatatypePlan::repeat(6, DatatypePlan::leaf(ScalarType::F32));
        assert!(!plans_compatible(&a, &d));
    }

    #[test]
    fn sequence_matches_offsets_for_tiled_layout() {
        let l = Layout::new(ScalarType::F64)
            .vector("n", 6)
            .unwrap()
            .vector("m", 4)
            .unwrap()
            .into_blocks("m", "M", 2)
            .unwrap()
            .into_blocks("n", "N", 3)
            .unwrap();
        let order = l.dims();
        let plan = compile(&l, &order).unwrap();
        let mut expected = Vec::new();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..3 {
                        let s = IndexState::new()
                            .bind("M", a)
                            .bind("m", b)
                            .bind("N", c)
                            .bind("n", d);
                        expected.push(l.offset_bytes(&s).unwrap() as i64);
                    }
                }
            }
        }
        assert_eq!(plan.element_sequence(), expected);
    }
}
