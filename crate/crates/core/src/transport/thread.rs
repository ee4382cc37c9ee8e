//! In-process fabric: one OS thread per rank, shared mailboxes.

use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;

use super::{Comm, Endpoint, Link, Mailbox, MatchKey, Parcel};
use crate::error::Result;
use crate::topology::NodeMap;

struct ThreadLink {
    boxes: Arc<[Arc<Mailbox>]>,
}

impl Link for ThreadLink {
    fn deliver(&self, dst: usize, key: MatchKey, parcel: Parcel) -> Result<()> {
        self.boxes[dst].post(key, parcel);
        Ok(())
    }

    fn carries_stamps(&self) -> bool {
        true
    }
}

/// Runs `f` once per rank, each on its own thread, and returns the results
/// in rank order.
///
/// If any rank panics, every mailbox is poisoned so that blocked peers fail
/// instead of hanging, and the first panic is propagated.
pub fn run_threads<R, F>(nodes: NodeMap, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(Comm) -> R + Sync,
{
    let p = nodes.len();
    let nodes = Arc::new(nodes);
    let boxes: Arc<[Arc<Mailbox>]> = (0..p).map(|_| Arc::new(Mailbox::default())).collect();
    let link: Arc<dyn Link> = Arc::new(ThreadLink { boxes: boxes.clone() });
    let f = &f;
    let outcomes: Vec<std::thread::Result<R>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..p)
            .map(|rank| {
                let ep = Arc::new(Endpoint::new(rank, nodes.clone(), link.clone(), boxes[rank].clone()));
                let boxes = boxes.clone();
                std::thread::Builder::new()
                    .name(format!("rank-{rank}"))
                    .spawn_scoped(s, move || {
                        let out = panic::catch_unwind(AssertUnwindSafe(|| f(Comm::world(ep))));
                        if out.is_err() {
                            for b in boxes.iter() {
                                b.fail(&format!("rank {rank} panicked"));
                            }
                        }
                        out
                    })
                    .expect("spawn rank thread")
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(Err)).collect()
    });
    let mut results = Vec::with_capacity(p);
    for o in outcomes {
        match o {
            Ok(r) => results.push(r),
            Err(e) => panic::resume_unwind(e),
        }
    }
    results
}
