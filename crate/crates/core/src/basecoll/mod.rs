//! Baseline single-ported collectives over any communicator.
//!
//! Algorithms are fixed so that traffic is exact: binomial broadcast,
//! linear scatter/gather, ring allgather and reduce-scatter, pairwise
//! alltoall and chain scans. Reductions are reduce-scatter followed by an
//! (all)gather.

mod allgather;
mod alltoall;
mod bcast;
mod gather;
mod reduce;
mod scan;

use std::sync::atomic::{AtomicBool, Ordering};

pub use allgather::{allgather, allgatherv};
pub use alltoall::alltoall;
pub use bcast::bcast;
pub use gather::{gather, gatherv, scatter, scatterv};
pub use reduce::{allreduce, reduce, reduce_scatter_block, reduce_scatterv, reduce_scatterv_at};
pub use scan::{exscan, scan};

use crate::element::Element;
use crate::error::{ensure, Error, Result};
use crate::layout::{View, ViewMut};
use crate::transport::Comm;

static CHECKS: AtomicBool = AtomicBool::new(cfg!(debug_assertions));

/// Enables or disables the agreement rounds that verify that all ranks pass
/// the same root and count. On by default in debug builds.
pub fn set_consistency_checks(on: bool) {
    CHECKS.store(on, Ordering::Relaxed);
}

pub fn consistency_checks() -> bool {
    CHECKS.load(Ordering::Relaxed)
}

/// Fails with [`Error::Inconsistent`] unless every rank passed the same
/// `value`. Only runs when checks are enabled; uses uncounted control traffic.
pub(crate) fn agree(comm: &Comm, value: usize, what: &'static str) -> Result<()> {
    if consistency_checks() && comm.size() > 1 {
        let (lo, hi) = comm.agree_range(value as u64)?;
        if lo != hi {
            return Err(Error::Inconsistent { what });
        }
    }
    Ok(())
}

/// Send side of a collective: data, or "already in the receive buffer".
#[derive(Clone, Copy, Debug)]
pub enum SendBuf<'a, T> {
    InPlace,
    Data(View<'a, T>),
}

impl<'a, T: Element> SendBuf<'a, T> {
    pub fn slice(data: &'a [T]) -> Self {
        SendBuf::Data(View::slice(data))
    }

    pub fn is_in_place(&self) -> bool {
        matches!(self, SendBuf::InPlace)
    }

    /// The dense elements of a data buffer, for the reductions.
    pub(crate) fn dense(&self) -> Result<Option<&'a [T]>> {
        match self {
            SendBuf::InPlace => Ok(None),
            SendBuf::Data(v) => {
                ensure!(v.layout().is_dense(), "reductions take dense buffers");
                let n = v.elements();
                ensure!(n <= v.data().len(), "send buffer holds {} elements, {n} described", v.data().len());
                Ok(Some(&v.data()[..n]))
            }
        }
    }
}

/// Receive side of a rooted collective.
#[derive(Debug)]
pub enum RecvBuf<'a, T> {
    InPlace,
    Data(ViewMut<'a, T>),
}

impl<'a, T: Element> RecvBuf<'a, T> {
    pub fn slice(data: &'a mut [T]) -> Self {
        RecvBuf::Data(ViewMut::slice(data))
    }
}

pub(crate) fn check_vector(comm: &Comm, counts: &[usize], displs: &[usize]) -> Result<()> {
    ensure!(
        counts.len() == comm.size() && displs.len() == comm.size(),
        "counts/displacements need {} entries, got {}/{}",
        comm.size(),
        counts.len(),
        displs.len()
    );
    Ok(())
}

pub(crate) fn prefix(counts: &[usize]) -> Vec<usize> {
    counts
        .iter()
        .scan(0, |acc, &c| {
            let d = *acc;
            *acc += c;
            Some(d)
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod testutil {
    use crate::topology::NodeMap;
    use crate::transport::thread::run_threads;
    use crate::transport::{Comm, CostLedger};

    /// Runs `f` on a flat world of `p` ranks (two nodes when p is even) and
    /// returns each rank's output plus the traffic of the call.
    pub fn on_world<R: Send>(p: usize, f: impl Fn(&Comm) -> R + Sync) -> (Vec<R>, CostLedger) {
        let map = if p % 2 == 0 && p > 1 { NodeMap::blocks(2, p / 2) } else { NodeMap::blocks(1, p) };
        let out = run_threads(map, |comm| {
            comm.barrier().unwrap();
            let before = comm.ledger_snapshot().unwrap();
            let r = f(&comm);
            comm.barrier().unwrap();
            let after = comm.ledger_snapshot().unwrap();
            (r, after.since(&before))
        });
        let ledger = out[0].1.clone();
        (out.into_iter().map(|(r, _)| r).collect(), ledger)
    }
}
