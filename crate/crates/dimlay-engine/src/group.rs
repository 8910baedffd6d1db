//! Simulated SPMD process groups.
//!
//! `run_spmd` spawns one OS thread per rank and hands each a [`SimGroup`]
//! handle. Collectives rendezvous through a per-group table keyed by each
//! rank's call sequence number, so the usual SPMD discipline (same
//! collectives, same order, everywhere) is assumed and violations surface
//! as mismatch or timeout errors instead of silent corruption.

use std::cell::Cell;
use std::collections::{BTreeMap, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use dimlay::ScalarType;

use crate::error::{EngineError, SpmdError};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Element count plus run-length-encoded scalar stream of a plan; the only
/// thing endpoints exchange to validate a transfer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Summary {
    pub count: usize,
    pub runs: Vec<(ScalarType, usize)>,
}

pub(crate) struct Message {
    pub summary: Summary,
    pub bytes: Vec<u8>,
}

#[derive(Default)]
pub(crate) struct Slot {
    pub kind: &'static str,
    pub root: usize,
    pub arrived: BTreeMap<usize, Option<Summary>>,
    pub inbound: BTreeMap<usize, Vec<u8>>,
    pub outbound: BTreeMap<usize, Vec<u8>>,
    pub root_done: bool,
    pub error: Option<EngineError>,
    pub departed: usize,
}

#[derive(Default)]
struct GroupState {
    slots: BTreeMap<u64, Slot>,
    mail: BTreeMap<(usize, usize, u64), VecDeque<Message>>,
    aborted: bool,
}

pub(crate) struct GroupCore {
    size: usize,
    timeout: Duration,
    state: Mutex<GroupState>,
    cv: Condvar,
}

impl GroupCore {
    fn abort(&self) {
        self.state.lock().unwrap().aborted = true;
        self.cv.notify_all();
    }

    /// Blocks until `ready` holds; false means the deadline passed first.
    fn wait_until<'a>(
        &self,
        mut guard: MutexGuard<'a, GroupState>,
        deadline: Instant,
        mut ready: impl FnMut(&GroupState) -> bool,
    ) -> (MutexGuard<'a, GroupState>, bool) {
        loop {
            if ready(&guard) {
                return (guard, true);
            }
            let now = Instant::now();
            if now >= deadline {
                return (guard, false);
            }
            let (g, _) = self.cv.wait_timeout(guard, deadline - now).unwrap();
            guard = g;
        }
    }
}

/// One rank's handle to the group; passed by value into the rank body.
pub struct SimGroup {
    core: Arc<GroupCore>,
    rank: usize,
    seq: Cell<u64>,
}

impl SimGroup {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn size(&self) -> usize {
        self.core.size
    }

    pub fn barrier(&self) -> Result<(), EngineError> {
        self.rendezvous("barrier", 0, None, None, None).map(|_| ())
    }

    /// The shared collective protocol: every rank arrives with its plan
    /// summary (and, for root-bound ops, a payload), the root validates and
    /// fills per-rank payloads once everyone is present, then all depart.
    /// Returns this rank's payload, if the root posted one.
    pub(crate) fn rendezvous(
        &self,
        kind: &'static str,
        root: usize,
        summary: Option<Summary>,
        inbound: Option<Vec<u8>>,
        root_work: Option<Box<dyn FnOnce(&mut Slot) -> Result<(), EngineError> + '_>>,
    ) -> Result<Option<Vec<u8>>, EngineError> {
        let seq = self.seq.get();
        self.seq.set(seq + 1);
        let me = self.rank;
        let size = self.core.size;
        let deadline = Instant::now() + self.core.timeout;

        let mut st = self.core.state.lock().unwrap();
        if st.aborted {
            return Err(EngineError::Aborted { rank: me });
        }
        {
            let slot = st.slots.entry(seq).or_default();
            if slot.arrived.is_empty() && slot.kind.is_empty() {
                slot.kind = kind;
                slot.root = root;
            } else if slot.kind != kind {
                let e = EngineError::CollectiveMismatch { rank: me, expected: slot.kind, got: kind };
                slot.error = Some(e.clone());
                self.core.cv.notify_all();
                return Err(e);
            } else if slot.root != root {
                let e = EngineError::PlanMismatch {
                    rank: me,
                    detail: format!("{} roots disagree: {} vs {}", kind, slot.root, root),
                };
                slot.error = Some(e.clone());
                self.core.cv.notify_all();
                return Err(e);
            }
            slot.arrived.insert(me, summary);
            if let Some(bytes) = inbound {
                slot.inbound.insert(me, bytes);
            }
        }
        self.core.cv.notify_all();

        // Wait for the whole group.
        let (mut st, in_time) = self.core.wait_until(st, deadline, |g| {
            g.aborted
                || g.slots
                    .get(&seq)
                    .map(|s| s.error.is_some() || s.arrived.len() == size)
                    .unwrap_or(true)
        });
        if st.aborted {
            return Err(EngineError::Aborted { rank: me });
        }
        if !in_time {
            let slot = st.slots.get_mut(&seq).unwrap();
            let waiting_on: Vec<usize> = (0..size).filter(|r| !slot.arrived.contains_key(r)).collect();
            let e = EngineError::Timeout { op: kind, rank: me, waiting_on };
            slot.error = Some(e.clone());
            self.core.cv.notify_all();
            return Err(e);
        }
        if let Some(e) = st.slots.get(&seq).and_then(|s| s.error.clone()) {
            return Err(e);
        }

        if me == root {
            let slot = st.slots.get_mut(&seq).unwrap();
            if let Some(work) = root_work {
                if let Err(e) = work(slot) {
                    slot.error = Some(e.clone());
                    slot.root_done = true;
                    self.core.cv.notify_all();
                    return Err(e);
                }
            }
            slot.root_done = true;
            self.core.cv.notify_all();
        } else {
            let (g, in_time) = self.core.wait_until(st, deadline, |g| {
                g.aborted
                    || g.slots
                        .get(&seq)
                        .map(|s| s.error.is_some() || s.root_done)
                        .unwrap_or(true)
            });
            st = g;
            if st.aborted {
                return Err(EngineError::Aborted { rank: me });
            }
            if !in_time {
                let slot = st.slots.get_mut(&seq).unwrap();
                let e = EngineError::Timeout { op: kind, rank: me, waiting_on: vec![root] };
                slot.error = Some(e.clone());
                self.core.cv.notify_all();
                return Err(e);
            }
            if let Some(e) = st.slots.get(&seq).and_then(|s| s.error.clone()) {
                return Err(e);
            }
        }

        let slot = st.slots.get_mut(&seq).unwrap();
        let payload = slot.outbound.remove(&me);
        slot.departed += 1;
        if slot.departed == size {
            st.slots.remove(&seq);
        }
        self.core.cv.notify_all();
        Ok(payload)
    }

    /// Buffered point-to-point send; pairing happens at `take_message`.
    pub(crate) fn post_message(&self, dest: usize, tag: u64, msg: Message) -> Result<(), EngineError> {
        if dest == self.rank {
            return Err(EngineError::SelfSend { rank: self.rank });
        }
        if dest >= self.core.size {
            return Err(EngineError::PeerOutOfRange { peer: dest, size: self.core.size });
        }
        let mut st = self.core.state.lock().unwrap();
        if st.aborted {
            return Err(EngineError::Aborted { rank: self.rank });
        }
        st.mail.entry((dest, self.rank, tag)).or_default().push_back(msg);
        self.core.cv.notify_all();
        Ok(())
    }

    pub(crate) fn take_message(&self, src: usize, tag: u64) -> Result<Message, EngineError> {
        if src == self.rank {
            return Err(EngineError::SelfSend { rank: self.rank });
        }
        if src >= self.core.size {
            return Err(EngineError::PeerOutOfRange { peer: src, size: self.core.size });
        }
        let deadline = Instant::now() + self.core.timeout;
        let key = (self.rank, src, tag);
        let st = self.core.state.lock().unwrap();
        let (mut st, in_time) = self.core.wait_until(st, deadline, |g| {
            g.aborted || g.mail.get(&key).map(|q| !q.is_empty()).unwrap_or(false)
        });
        if st.aborted {
            return Err(EngineError::Aborted { rank: self.rank });
        }
        if !in_time {
            return Err(EngineError::Timeout { op: "recv", rank: self.rank, waiting_on: vec![src] });
        }
        let q = st.mail.get_mut(&key).unwrap();
        let msg = q.pop_front().unwrap();
        if q.is_empty() {
            st.mail.remove(&key);
        }
        Ok(msg)
    }
}

/// Runs `body` once per rank on its own thread and collects the results in
/// rank order. The first rank whose body fails (or panics) names the run's
/// error; messages still queued when every body has returned are an error.
pub fn run_spmd<T, F>(ranks: usize, body: F) -> Result<Vec<T>, SpmdError>
where
    T: Send,
    F: Fn(SimGroup) -> Result<T, EngineError> + Sync,
{
    run_spmd_with_timeout(ranks, DEFAULT_TIMEOUT, body)
}

pub fn run_spmd_with_timeout<T, F>(ranks: usize, timeout: Duration, body: F) -> Result<Vec<T>, SpmdError>
where
    T: Send,
    F: Fn(SimGroup) -> Result<T, EngineError> + Sync,
{
    assert!(ranks > 0, "a group needs at least one rank");
    let core = Arc::new(GroupCore {
        size: ranks,
        timeout,
        state: Mutex::new(GroupState::default()),
        cv: Condvar::new(),
    });

    enum Outcome<T> {
        Value(T),
        Failed(EngineError),
        Panicked(String),
    }

    let outcomes: Vec<Outcome<T>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..ranks)
            .map(|rank| {
                let core = Arc::clone(&core);
                let body = &body;
                s.spawn(move || {
                    let g = SimGroup { core: Arc::clone(&core), rank, seq: Cell::new(0) };
                    match catch_unwind(AssertUnwindSafe(|| body(g))) {
                        Ok(Ok(v)) => Outcome::Value(v),
                        Ok(Err(e)) => {
                            core.abort();
                            Outcome::Failed(e)
                        }
                        Err(payload) => {
                            core.abort();
                            let msg = payload
                                .downcast_ref::<&str>()
                                .map(|s| s.to_string())
                                .or_else(|| payload.downcast_ref::<String>().cloned())
                                .unwrap_or_else(|| "opaque panic payload".to_string());
                            Outcome::Panicked(msg)
                        }
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    // Prefer the original failure over the `Aborted` noise it caused.
    for (rank, o) in outcomes.iter().enumerate() {
        match o {
            Outcome::Failed(e) if !matches!(e, EngineError::Aborted { .. }) => {
                return Err(SpmdError::RankFailed { rank, source: e.clone() });
            }
            Outcome::Panicked(msg) => {
                return Err(SpmdError::RankPanicked { rank, msg: msg.clone() });
            }
            _ => {}
        }
    }
    for (rank, o) in outcomes.iter().enumerate() {
        if let Outcome::Failed(e) = o {
            return Err(SpmdError::RankFailed { rank, source: e.clone() });
        }
    }

    let st = core.state.lock().unwrap();
    let undelivered: usize = st.mail.values().map(|q| q.len()).sum();
    if undelivered > 0 {
        let (&(dest, src, tag), _) = st.mail.iter().next().unwrap();
        return Err(SpmdError::Undelivered { count: undelivered, dest, src, tag });
    }
    drop(st);

    Ok(outcomes
        .into_iter()
        .map(|o| match o {
            Outcome::Value(v) => v,
            _ => unreachable!("failures returned above"),
        })
        .collect())
}
