//! Layout-driven collectives.
//!
//! Payloads travel as packed element streams in traverser order; endpoints
//! never see each other's layouts, only element counts and scalar runs.
//! All structural validation happens on the root before any byte moves.

use dimlay::{compile_for_traverser, BagLike, DatatypePlan, ScalarType};

use crate::error::EngineError;
use crate::group::{Message, SimGroup, Slot, Summary};
use crate::mpi_traverser::MpiTraverser;

fn summary_of(plan: &DatatypePlan) -> Summary {
    Summary { count: plan.element_count(), runs: plan.scalar_runs() }
}

fn uniform_runs(scalar: ScalarType, count: usize) -> Vec<(ScalarType, usize)> {
    if count == 0 {
        Vec::new()
    } else {
        vec![(scalar, count)]
    }
}

/// (offset, width) of each element, in plan walk order.
fn element_offsets(plan: &DatatypePlan) -> Vec<(i64, usize)> {
    let seq = plan.element_sequence();
    let mut widths = Vec::with_capacity(seq.len());
    for (ty, n) in plan.scalar_runs() {
        widths.extend(std::iter::repeat(ty.size_bytes()).take(n));
    }
    seq.into_iter().zip(widths).collect()
}

fn pack(bytes: &[u8], plan: &DatatypePlan) -> Vec<u8> {
    let mut out = Vec::new();
    for (off, w) in element_offsets(plan) {
        let off = off as usize;
        out.extend_from_slice(&bytes[off..off + w]);
    }
    out
}

fn unpack(bytes: &mut [u8], plan: &DatatypePlan, payload: &[u8]) {
    let mut cursor = 0;
    for (off, w) in element_offsets(plan) {
        let off = off as usize;
        bytes[off..off + w].copy_from_slice(&payload[cursor..cursor + w]);
        cursor += w;
    }
}

/// Every rank's posted summary must carry the reference element stream.
fn validate_summaries(slot: &Slot, op: &'static str, reference: &[(ScalarType, usize)]) -> Result<(), EngineError> {
    for (&rank, posted) in &slot.arrived {
        let ok = posted.as_ref().map(|s| s.runs == reference).unwrap_or(false);
        if !ok {
            return Err(EngineError::PlanMismatch {
                rank,
                detail: format!("{op} plan does not match the root's element stream"),
            });
        }
    }
    Ok(())
}

/// Packs each rank's share of the root bag by walking the traverser with
/// the ranking dim pinned to that rank.
fn pack_shares<B: BagLike + ?Sized>(root_bag: &B, mt: &MpiTraverser) -> Result<Vec<Vec<u8>>, EngineError> {
    let layout = root_bag.layout().clone();
    let w = layout.scalar_type().size_bytes();
    let bytes = root_bag.bytes();
    let mut shares = Vec::with_capacity(mt.ranks());
    for q in 0..mt.ranks() {
        let mut buf = Vec::new();
        mt.for_rank(q)?.try_for_each::<EngineError, _>(|state| {
            let off = layout.offset_bytes(state)?;
            buf.extend_from_slice(&bytes[off..off + w]);
            Ok(())
        })?;
        shares.push(buf);
    }
    Ok(shares)
}

/// Inverse of `pack_shares`: writes each rank's payload into the root bag.
fn unpack_shares<B: BagLike + ?Sized>(
    root_bag: &mut B,
    mt: &MpiTraverser,
    mut payload_of: impl FnMut(usize) -> Vec<u8>,
) -> Result<(), EngineError> {
    let layout = root_bag.layout().clone();
    let w = layout.scalar_type().size_bytes();
    for q in 0..mt.ranks() {
        let payload = payload_of(q);
        let mut cursor = 0;
        let bytes = root_bag.bytes_mut();
        mt.for_rank(q)?.try_for_each::<EngineError, _>(|state| {
            let off = layout.offset_bytes(state)?;
            bytes[off..off + w].copy_from_slice(&payload[cursor..cursor + w]);
            cursor += w;
            Ok(())
        })?;
    }
    Ok(())
}

/// Replicates the root's logical values into every rank's bag, whatever
/// each bag's placement looks like.
pub fn broadcast<B: BagLike + ?Sized>(
    g: &SimGroup,
    bag: &mut B,
    mt: &MpiTraverser,
    root: usize,
) -> Result<(), EngineError> {
    if root >= g.size() {
        return Err(EngineError::RootOutOfRange { root, size: g.size() });
    }
    let order = mt.traverser().order();
    let plan = compile_for_traverser(bag.layout(), &order)?;
    let reference = plan.scalar_runs();
    let root_work = if g.rank() == root {
        let stream = pack(bag.bytes(), &plan);
        let size = g.size();
        Some(Box::new(move |slot: &mut Slot| {
            validate_summaries(slot, "broadcast", &reference)?;
            for rank in (0..size).filter(|&r| r != root) {
                slot.outbound.insert(rank, stream.clone());
            }
            Ok(())
        }) as Box<dyn FnOnce(&mut Slot) -> Result<(), EngineError>>)
    } else {
        None
    };
    let payload = g.rendezvous("broadcast", root, Some(summary_of(&plan)), None, root_work)?;
    if let Some(p) = payload {
        unpack(bag.bytes_mut(), &plan, &p);
    }
    Ok(())
}

/// Splits the root bag along the ranking dim and delivers each rank its
/// share (the root keeps its own share the same way).
pub fn scatter<R, T>(
    g: &SimGroup,
    root_bag: Option<&R>,
    tile: &mut T,
    mt: &MpiTraverser,
    root: usize,
) -> Result<(), EngineError>
where
    R: BagLike + ?Sized,
    T: BagLike + ?Sized,
{
    if root >= g.size() {
        return Err(EngineError::RootOutOfRange { root, size: g.size() });
    }
    let order = mt.traverser().order();
    let tile_plan = compile_for_traverser(tile.layout(), &order)?;
    let root_work = if g.rank() == root {
        let rb = root_bag.ok_or(EngineError::RootBufferMissing)?;
        mt.check_subspace(rb.layout(), tile.layout())?;
        let shares = pack_shares(rb, mt)?;
        let scalar = rb.layout().scalar_type();
        Some(Box::new(move |slot: &mut Slot| {
            let per_rank = shares[0].len() / scalar.size_bytes();
            validate_summaries(slot, "scatter", &uniform_runs(scalar, per_rank))?;
            for (q, share) in shares.into_iter().enumerate() {
                slot.outbound.insert(q, share);
            }
            Ok(())
        }) as Box<dyn FnOnce(&mut Slot) -> Result<(), EngineError>>)
    } else {
        None
    };
    let payload = g.rendezvous("scatter", root, Some(summary_of(&tile_plan)), None, root_work)?;
    let payload = payload.expect("scatter delivers a share to every rank");
    unpack(tile.bytes_mut(), &tile_plan, &payload);
    Ok(())
}

/// Inverse of `scatter`: collects every rank's tile back into the root bag.
pub fn gather<T, R>(
    g: &SimGroup,
    tile: &T,
    root_bag: Option<&mut R>,
    mt: &MpiTraverser,
    root: usize,
) -> Result<(), EngineError>
where
    T: BagLike + ?Sized,
    R: BagLike + ?Sized,
{
    if root >= g.size() {
        return Err(EngineError::RootOutOfRange { root, size: g.size() });
    }
    let order = mt.traverser().order();
    let tile_plan = compile_for_traverser(tile.layout(), &order)?;
    let stream = pack(tile.bytes(), &tile_plan);
    let root_work = if g.rank() == root {
        let rb = root_bag.ok_or(EngineError::RootBufferMissing)?;
        mt.check_gather(rb.layout(), tile.layout())?;
        let scalar = rb.layout().scalar_type();
        let expected = mt.for_rank(0)?.count()?;
        Some(Box::new(move |slot: &mut Slot| {
            validate_summaries(slot, "gather", &uniform_runs(scalar, expected))?;
            let inbound = std::mem::take(&mut slot.inbound);
            unpack_shares(rb, mt, |q| inbound[&q].clone())
        }) as Box<dyn FnOnce(&mut Slot) -> Result<(), EngineError> + '_>)
    } else {
        None
    };
    g.rendezvous("gather", root, Some(summary_of(&tile_plan)), Some(stream), root_work)?;
    Ok(())
}

/// Buffered point-to-point send of the bag's elements in traverser order.
pub fn send<B: BagLike + ?Sized>(
    g: &SimGroup,
    bag: &B,
    mt: &MpiTraverser,
    dest: usize,
    tag: u64,
) -> Result<(), EngineError> {
    let plan = compile_for_traverser(bag.layout(), &mt.traverser().order())?;
    let msg = Message { summary: summary_of(&plan), bytes: pack(bag.bytes(), &plan) };
    g.post_message(dest, tag, msg)
}

/// Receives a matching send; the message's element stream must agree with
/// this bag's plan.
pub fn recv<B: BagLike + ?Sized>(
    g: &SimGroup,
    bag: &mut B,
    mt: &MpiTraverser,
    src: usize,
    tag: u64,
) -> Result<(), EngineError> {
    let plan = compile_for_traverser(bag.layout(), &mt.traverser().order())?;
    let msg = g.take_message(src, tag)?;
    let mine = summary_of(&plan);
    if msg.summary != mine {
        return Err(EngineError::MessageMismatch {
            rank: g.rank(),
            src,
            tag,
            detail: format!(
                "message carries {} element(s) of {:?}, local plan expects {} of {:?}",
                msg.summary.count, msg.summary.runs, mine.count, mine.runs
            ),
        });
    }
    unpack(bag.bytes_mut(), &plan, &msg.bytes);
    Ok(())
}
