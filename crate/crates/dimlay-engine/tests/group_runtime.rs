//! Process-group runtime behavior: spawning, failure attribution,
//! messaging discipline, and deadlock detection.

use std::time::Duration;

use dimlay::{Bag, BagLike, IndexState, Layout, ScalarType, Traverser};
use dimlay_engine::{
    make_mpi_traverser, recv, run_spmd, run_spmd_with_timeout, send, EngineError, SpmdError,
};

fn row(dim: char, n: usize) -> Layout {
    Layout::new(ScalarType::I32).vector(dim, n).unwrap()
}

#[test]
fn collects_results_in_rank_order() {
    let out = run_spmd(4, |g| Ok(g.rank() * g.rank())).unwrap();
    assert_eq!(out, vec![0, 1, 4, 9]);
}

#[test]
fn names_the_failing_rank() {
    let err = run_spmd(3, |g| {
        if g.rank() == 1 {
            Err(EngineError::RootBufferMissing)
        } else {
            g.barrier()?;
            Ok(())
        }
    })
    .unwrap_err();
    assert_eq!(
        err,
        SpmdError::RankFailed { rank: 1, source: EngineError::RootBufferMissing }
    );
}

#[test]
fn names_the_panicking_rank() {
    let err = run_spmd(2, |g| {
        if g.rank() == 1 {
            panic!("boom");
        }
        g.barrier()?;
        Ok(())
    })
    .unwrap_err();
    assert_eq!(err, SpmdError::RankPanicked { rank: 1, msg: "boom".into() });
}

#[test]
fn detects_a_one_sided_collective() {
    let err = run_spmd_with_timeout(2, Duration::from_millis(200), |g| {
        if g.rank() == 0 {
            g.barrier()?;
        }
        Ok(())
    })
    .unwrap_err();
    assert_eq!(
        err,
        SpmdError::RankFailed {
            rank: 0,
            source: EngineError::Timeout { op: "barrier", rank: 0, waiting_on: vec![1] },
        }
    );
}

#[test]
fn send_recv_roundtrip_with_tags() {
    let vals = run_spmd(2, |g| {
        let t = Traverser::new(&[&row('i', 4)]).unwrap().bcast('r', 2).unwrap();
        let mt = make_mpi_traverser(t, 'r', 2).unwrap();
        let mut bag = Bag::allocate(row('i', 4)).unwrap();
        if g.rank() == 0 {
            for k in 0..4 {
                bag.store(&IndexState::new().bind('i', k), dimlay::ScalarValue::I32(10 + k as i32))
                    .unwrap();
            }
            send(&g, &bag, &mt, 1, 7)?;
            send(&g, &bag, &mt, 1, 8)?;
            Ok(0)
        } else {
            // Tags pair messages, not arrival order.
            recv(&g, &mut bag, &mt, 0, 8)?;
            recv(&g, &mut bag, &mt, 0, 7)?;
            match bag.load(&IndexState::new().bind('i', 3)).unwrap() {
                dimlay::ScalarValue::I32(v) => Ok(v),
                other => panic!("unexpected scalar {other:?}"),
            }
        }
    })
    .unwrap();
    assert_eq!(vals, vec![0, 13]);
}

#[test]
fn self_send_is_rejected() {
    let err = run_spmd(2, |g| {
        let t = Traverser::new(&[&row('i', 2)]).unwrap().bcast('r', 2).unwrap();
        let mt = make_mpi_traverser(t, 'r', 2).unwrap();
        let bag = Bag::allocate(row('i', 2)).unwrap();
        if g.rank() == 0 {
            send(&g, &bag, &mt, 0, 1)?;
        }
        Ok(())
    })
    .unwrap_err();
    assert_eq!(
        err,
        SpmdError::RankFailed { rank: 0, source: EngineError::SelfSend { rank: 0 } }
    );
}

#[test]
fn unreceived_messages_fail_teardown() {
    let err = run_spmd(2, |g| {
        let t = Traverser::new(&[&row('i', 2)]).unwrap().bcast('r', 2).unwrap();
        let mt = make_mpi_traverser(t, 'r', 2).unwrap();
        let bag = Bag::allocate(row('i', 2)).unwrap();
        if g.rank() == 0 {
            send(&g, &bag, &mt, 1, 42)?;
        }
        Ok(())
    })
    .unwrap_err();
    assert_eq!(err, SpmdError::Undelivered { count: 1, dest: 1, src: 0, tag: 42 });
}

#[test]
fn mismatched_message_shape_is_diagnosed() {
    let err = run_spmd(2, |g| {
        let t = Traverser::new(&[&row('i', 4)]).unwrap().bcast('r', 2).unwrap();
        let mt = make_mpi_traverser(t, 'r', 2).unwrap();
        if g.rank() == 0 {
            let bag = Bag::allocate(row('i', 4)).unwrap();
            send(&g, &bag, &mt, 1, 1)?;
        } else {
            // Expects twice as many elements as the message carries.
            let t8 = Traverser::new(&[&row('i', 8)]).unwrap().bcast('r', 2).unwrap();
            let mt8 = make_mpi_traverser(t8, 'r', 2).unwrap();
            let mut bag = Bag::allocate(row('i', 8)).unwrap();
            recv(&g, &mut bag, &mt8, 0, 1)?;
        }
        Ok(())
    })
    .unwrap_err();
    match err {
        SpmdError::RankFailed { rank: 1, source: EngineError::MessageMismatch { rank: 1, src: 0, tag: 1, .. } } => {}
        other => panic!("unexpected: {other:?}"),
    }
}

#[test]
fn mixed_collective_kinds_are_diagnosed() {
    let err = run_spmd(2, |g| {
        if g.rank() == 0 {
            g.barrier()?;
        } else {
            let t = Traverser::new(&[&row('i', 2)]).unwrap().bcast('r', 2).unwrap();
            let mt = make_mpi_traverser(t, 'r', 2).unwrap();
            let mut bag = Bag::allocate(row('i', 2)).unwrap();
            dimlay_engine::broadcast(&g, &mut bag, &mt, 1)?;
        }
        Ok(())
    })
    .unwrap_err();
    match err {
        SpmdError::RankFailed { source: EngineError::CollectiveMismatch { .. }, .. } => {}
        other => panic!("unexpected: {other:?}"),
    }
}
