use std::sync::atomic::{AtomicU64, Ordering};

/// Traffic counters of one endpoint, as seen at snapshot time.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RankTraffic {
    pub world_rank: usize,
    pub node: usize,
    /// Elements sent to other ranks.
    pub sent: u64,
    pub received: u64,
    pub messages_sent: u64,
    pub messages_received: u64,
    /// Elements that left the node.
    pub offnode_sent: u64,
    /// Elements that entered the node.
    pub offnode_received: u64,
    /// Elements moved through the self-copy path (not traffic).
    pub self_copied: u64,
    /// Off-node elements sent, per destination node.
    pub egress_to_node: Vec<u64>,
    /// Logical round clock (longest chain of dependent messages).
    pub clock: u64,
}

/// Snapshot of the counters of every member of a communicator.
///
/// Counters are kept per endpoint, so the ledger of a subcommunicator also
/// includes traffic its members exchanged on other communicators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostLedger {
    /// Indexed by rank in the communicator the snapshot was taken on.
    pub ranks: Vec<RankTraffic>,
    pub nodes: usize,
    /// Only transports that carry round stamps can report rounds.
    pub rounds: Option<u64>,
}

impl CostLedger {
    pub fn total_sent(&self) -> u64 {
        self.ranks.iter().map(|r| r.sent).sum()
    }

    pub fn total_received(&self) -> u64 {
        self.ranks.iter().map(|r| r.received).sum()
    }

    /// Global conservation: every element sent was received.
    pub fn is_conserved(&self) -> bool {
        self.total_sent() == self.total_received()
    }

    /// Elements that entered `node` from other nodes.
    pub fn node_ingress(&self, node: usize) -> u64 {
        self.ranks.iter().filter(|r| r.node == node).map(|r| r.offnode_received).sum()
    }

    /// Elements that left `node`.
    pub fn node_egress(&self, node: usize) -> u64 {
        self.ranks.iter().filter(|r| r.node == node).map(|r| r.offnode_sent).sum()
    }

    /// Elements sent from members on `from` to `to`.
    pub fn egress_between(&self, from: usize, to: usize) -> u64 {
        self.ranks
            .iter()
            .filter(|r| r.node == from)
            .map(|r| r.egress_to_node.get(to).copied().unwrap_or(0))
            .sum()
    }

    /// Ranks on `node` that sent or received anything off-node.
    pub fn offnode_ranks(&self, node: usize) -> Vec<usize> {
        self.ranks
            .iter()
            .enumerate()
            .filter(|(_, r)| r.node == node && (r.offnode_sent > 0 || r.offnode_received > 0))
            .map(|(i, _)| i)
            .collect()
    }

    /// Counter growth between `earlier` and `self`.
    pub fn since(&self, earlier: &CostLedger) -> CostLedger {
        let ranks = self
            .ranks
            .iter()
            .zip(&earlier.ranks)
            .map(|(now, then)| RankTraffic {
                world_rank: now.world_rank,
                node: now.node,
                sent: now.sent - then.sent,
                received: now.received - then.received,
                messages_sent: now.messages_sent - then.messages_sent,
                messages_received: now.messages_received - then.messages_received,
                offnode_sent: now.offnode_sent - then.offnode_sent,
                offnode_received: now.offnode_received - then.offnode_received,
                self_copied: now.self_copied - then.self_copied,
                egress_to_node: now
                    .egress_to_node
                    .iter()
                    .zip(&then.egress_to_node)
                    .map(|(a, b)| a - b)
                    .collect(),
                clock: now.clock.saturating_sub(then.clock),
            })
            .collect();
        CostLedger {
            ranks,
            nodes: self.nodes,
            rounds: match (self.rounds, earlier.rounds) {
                (Some(a), Some(b)) => Some(a.saturating_sub(b)),
                _ => None,
            },
        }
    }

    /// The ledger with the round information removed, for comparing
    /// transports that do not carry round stamps.
    pub fn without_rounds(&self) -> CostLedger {
        let mut out = self.clone();
        out.rounds = None;
        for r in &mut out.ranks {
            r.clock = 0;
        }
        out
    }
}

#[derive(Debug)]
pub(crate) struct Counters {
    sent: AtomicU64,
    received: AtomicU64,
    messages_sent: AtomicU64,
    messages_received: AtomicU64,
    offnode_sent: AtomicU64,
    offnode_received: AtomicU64,
    self_copied: AtomicU64,
    egress_to_node: Vec<AtomicU64>,
    clock: AtomicU64,
}

impl Counters {
    pub(crate) fn new(nodes: usize) -> Self {
        Self {
            sent: AtomicU64::new(0),
            received: AtomicU64::new(0),
            messages_sent: AtomicU64::new(0),
            messages_received: AtomicU64::new(0),
            offnode_sent: AtomicU64::new(0),
            offnode_received: AtomicU64::new(0),
            self_copied: AtomicU64::new(0),
            egress_to_node: (0..nodes).map(|_| AtomicU64::new(0)).collect(),
            clock: AtomicU64::new(0),
        }
    }

    /// Records a send and returns the round stamp it carries.
    pub(crate) fn on_send(&self, elements: u64, offnode_dst: Option<usize>) -> u64 {
        self.sent.fetch_add(elements, Ordering::Relaxed);
        self.messages_sent.fetch_add(1, Ordering::Relaxed);
        if let Some(node) = offnode_dst {
            self.offnode_sent.fetch_add(elements, Ordering::Relaxed);
            self.egress_to_node[node].fetch_add(elements, Ordering::Relaxed);
        }
        self.clock.fetch_add(1, Ordering::Relaxed) + 1
    }

    pub(crate) fn on_receive(&self, elements: u64, offnode: bool, stamp: u64) {
        self.received.fetch_add(elements, Ordering::Relaxed);
        self.messages_received.fetch_add(1, Ordering::Relaxed);
        if offnode {
            self.offnode_received.fetch_add(elements, Ordering::Relaxed);
        }
        self.clock.fetch_max(stamp, Ordering::Relaxed);
    }

    pub(crate) fn on_self_copy(&self, elements: u64) {
        self.self_copied.fetch_add(elements, Ordering::Relaxed);
    }

    pub(crate) fn reset(&self) {
        for c in [
            &self.sent,
            &self.received,
            &self.messages_sent,
            &self.messages_received,
            &self.offnode_sent,
            &self.offnode_received,
            &self.self_copied,
            &self.clock,
        ] {
            c.store(0, Ordering::Relaxed);
        }
        for c in &self.egress_to_node {
            c.store(0, Ordering::Relaxed);
        }
    }

    pub(crate) fn snapshot(&self, world_rank: usize, node: usize) -> RankTraffic {
        RankTraffic {
            world_rank,
            node,
            sent: self.sent.load(Ordering::Relaxed),
            received: self.received.load(Ordering::Relaxed),
            messages_sent: self.messages_sent.load(Ordering::Relaxed),
            messages_received: self.messages_received.load(Ordering::Relaxed),
            offnode_sent: self.offnode_sent.load(Ordering::Relaxed),
            offnode_received: self.offnode_received.load(Ordering::Relaxed),
            self_copied: self.self_copied.load(Ordering::Relaxed),
            egress_to_node: self.egress_to_node.iter().map(|c| c.load(Ordering::Relaxed)).collect(),
            clock: self.clock.load(Ordering::Relaxed),
        }
    }
}

impl RankTraffic {
    pub(crate) fn to_words(&self) -> Vec<u64> {
        let mut w = vec![
            self.world_rank as u64,
            self.node as u64,
            self.sent,
            self.received,
            self.messages_sent,
            self.messages_received,
            self.offnode_sent,
            self.offnode_received,
            self.self_copied,
            self.clock,
        ];
        w.extend_from_slice(&self.egress_to_node);
        w
    }

    pub(crate) fn from_words(w: &[u64]) -> Option<Self> {
        if w.len() < 10 {
            return None;
        }
        Some(RankTraffic {
            world_rank: w[0] as usize,
            node: w[1] as usize,
            sent: w[2],
            received: w[3],
            messages_sent: w[4],
            messages_received: w[5],
            offnode_sent: w[6],
            offnode_received: w[7],
            self_copied: w[8],
            clock: w[9],
            egress_to_node: w[10..].to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_round_trip() {
        let t = RankTraffic {
            world_rank: 3,
            node: 1,
            sent: 5,
            received: 6,
            messages_sent: 1,
            messages_received: 2,
            offnode_sent: 4,
            offnode_received: 0,
            self_copied: 9,
            egress_to_node: vec![0, 0, 4],
            clock: 7,
        };
        assert_eq!(RankTraffic::from_words(&t.to_words()).unwrap(), t);
    }

    #[test]
    fn send_stamps_advance_clock() {
        let c = Counters::new(2);
        assert_eq!(c.on_send(3, Some(1)), 1);
        c.on_receive(2, false, 9);
        assert_eq!(c.on_send(0, None), 10);
        let s = c.snapshot(0, 0);
        assert_eq!((s.sent, s.received, s.offnode_sent, s.egress_to_node[1]), (3, 2, 3, 3));
    }
}
