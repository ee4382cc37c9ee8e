#![allow(dead_code)]

use lanecoll::transport::thread::run_threads;
use lanecoll::{topology, Comm, CostLedger, NodeMap};

/// Runs `f` on `nodes * ppn` threads placed in node blocks and returns the
/// per-rank results plus the ledger of what `f` sent.
pub fn on_nodes<R: Send>(nodes: usize, ppn: usize, f: impl Fn(&Comm) -> R + Sync) -> (Vec<R>, CostLedger) {
    on_map(NodeMap::blocks(nodes, ppn), f)
}

pub fn on_map<R: Send>(map: NodeMap, f: impl Fn(&Comm) -> R + Sync) -> (Vec<R>, CostLedger) {
    let out = run_threads(map, |comm| {
        topology::lanes(&comm).unwrap();
        comm.barrier().unwrap();
        let before = comm.ledger_snapshot().unwrap();
        let r = f(&comm);
        comm.barrier().unwrap();
        (r, comm.ledger_snapshot().unwrap().since(&before))
    });
    let ledger = out[0].1.clone();
    (out.into_iter().map(|(r, _)| r).collect(), ledger)
}
