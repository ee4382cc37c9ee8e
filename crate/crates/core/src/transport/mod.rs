//! Point-to-point messaging between ranks.
//!
//! Every rank owns an [`Endpoint`]: a mailbox keyed on
//! `(communicator id, source rank, tag)`, traffic counters and a [`Link`]
//! that delivers envelopes to other ranks. Sends are buffered, so a send never
//! waits for the matching receive; this makes cyclic `sendrecv` patterns
//! deadlock-free. [`Comm`] is the per-rank communicator handle layered on top.

mod comm;
mod ledger;
pub mod tcp;
pub mod thread;
pub mod wire;

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::{Arc, Condvar, Mutex};

use crate::error::{Error, Result};
use crate::topology::NodeMap;

pub use comm::Comm;
pub use ledger::{CostLedger, RankTraffic};
pub(crate) use ledger::Counters;

/// Exact match key of a message.
#[derive(Clone, Copy, Debug, Hash, PartialEq, Eq)]
pub struct MatchKey {
    pub comm: u32,
    /// World rank of the sender.
    pub src: u32,
    pub tag: u32,
}

/// A message in flight.
#[derive(Debug)]
pub struct Parcel {
    pub payload: Vec<u8>,
    /// Round stamp; 0 on transports that do not carry one.
    pub stamp: u64,
}

/// Moves parcels to other ranks.
pub(crate) trait Link: Send + Sync {
    fn deliver(&self, dst: usize, key: MatchKey, parcel: Parcel) -> Result<()>;

    /// Whether round stamps survive delivery.
    fn carries_stamps(&self) -> bool;
}

#[derive(Default)]
struct MailState {
    queues: HashMap<MatchKey, VecDeque<Parcel>>,
    closed: HashSet<u32>,
    failure: Option<String>,
}

/// Incoming message store of one rank.
#[derive(Default)]
pub(crate) struct Mailbox {
    state: Mutex<MailState>,
    ready: Condvar,
}

impl Mailbox {
    pub(crate) fn post(&self, key: MatchKey, parcel: Parcel) {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        st.queues.entry(key).or_default().push_back(parcel);
        drop(st);
        self.ready.notify_all();
    }

    pub(crate) fn take(&self, key: MatchKey) -> Result<Parcel> {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        loop {
            if let Some(q) = st.queues.get_mut(&key) {
                if let Some(p) = q.pop_front() {
                    if q.is_empty() {
                        st.queues.remove(&key);
                    }
                    return Ok(p);
                }
            }
            if let Some(why) = &st.failure {
                return Err(Error::Transport(why.clone()));
            }
            if st.closed.contains(&key.src) {
                return Err(Error::Disconnected { peer: key.src as usize });
            }
            st = self.ready.wait(st).unwrap_or_else(|e| e.into_inner());
        }
    }

    pub(crate) fn close_peer(&self, peer: u32) {
        self.state.lock().unwrap_or_else(|e| e.into_inner()).closed.insert(peer);
        self.ready.notify_all();
    }

    pub(crate) fn fail(&self, why: &str) {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        st.failure.get_or_insert_with(|| why.to_string());
        drop(st);
        self.ready.notify_all();
    }
}

/// One rank's attachment to the fabric.
pub struct Endpoint {
    rank: usize,
    size: usize,
    nodes: Arc<NodeMap>,
    link: Arc<dyn Link>,
    mailbox: Arc<Mailbox>,
    counters: Counters,
}

impl Endpoint {
    pub(crate) fn new(rank: usize, nodes: Arc<NodeMap>, link: Arc<dyn Link>, mailbox: Arc<Mailbox>) -> Self {
        let counters = Counters::new(nodes.nodes());
        Self { rank, size: nodes.len(), nodes, link, mailbox, counters }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn nodes(&self) -> &NodeMap {
        &self.nodes
    }

    pub(crate) fn counters(&self) -> &Counters {
        &self.counters
    }

    pub(crate) fn carries_stamps(&self) -> bool {
        self.link.carries_stamps()
    }

    /// Sends `payload` (holding `elements` elements) to world rank `dst`.
    pub(crate) fn post(&self, dst: usize, comm: u32, tag: u32, payload: Vec<u8>, elements: u64, counted: bool) -> Result<()> {
        let stamp = if counted {
            let off = self.nodes.node_of(dst) != self.nodes.node_of(self.rank);
            self.counters.on_send(elements, off.then(|| self.nodes.node_of(dst)))
        } else {
            0
        };
        let key = MatchKey { comm, src: self.rank as u32, tag };
        self.link.deliver(dst, key, Parcel { payload, stamp })
    }

    /// Blocks until a message from world rank `src` matches.
    pub(crate) fn fetch(&self, src: usize, comm: u32, tag: u32) -> Result<Parcel> {
        self.mailbox.take(MatchKey { comm, src: src as u32, tag })
    }

    pub(crate) fn account_receive(&self, src: usize, elements: u64, stamp: u64) {
        let off = self.nodes.node_of(src) != self.nodes.node_of(self.rank);
        self.counters.on_receive(elements, off, stamp);
    }
}

impl std::fmt::Debug for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Endpoint").field("rank", &self.rank).field("size", &self.size).finish()
    }
}
