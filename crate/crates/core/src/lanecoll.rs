//! Full-lane collectives: every process on a node takes part in the
//! off-node phase, each on its own lane communicator, with `1/n` of the
//! data. Strided layouts place lane blocks straight into rank order.
//!
//! On an irregular communicator the decomposition degenerates to
//! `nodecomm = self`, `lanecomm = dup(comm)` and every collective reduces to
//! the base algorithm on the duplicate.

use crate::basecoll::{
    self, agree, allgather, allgatherv, allreduce, alltoall, bcast, exscan, gather, reduce, reduce_scatter_block,
    reduce_scatterv, reduce_scatterv_at, scan, scatter, scatterv, RecvBuf, SendBuf,
};
use crate::element::Element;
use crate::error::{contract, ensure, Result};
use crate::layout::{Layout, View, ViewMut, ELEMENT};
use crate::ops::{reduce_local, ReduceOp};
use crate::topology::{lanes, partition_counts, root_coords, LaneDecomposition};
use crate::transport::Comm;

/// Which node-level sub-collectives the partitioned algorithms use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Variant {
    /// Vector variants with the remainder on the last process.
    #[default]
    Irregular,
    /// Regular variants whenever `n` divides the count; falls back to the
    /// vector variants otherwise.
    Regular,
}

struct Ctx {
    d: std::sync::Arc<LaneDecomposition>,
    n: usize,
    lanes: usize,
    i: usize,
    j: usize,
}

fn ctx(comm: &Comm) -> Result<Ctx> {
    let d = lanes(comm)?;
    let (n, lanes, i, j) = (d.n(), d.big_n(), d.coords.noderank, d.coords.lanerank);
    Ok(Ctx { d, n, lanes, i, j })
}

fn node_allgather<T: Element>(nodecomm: &Comm, buf: &mut [T], counts: &[usize], displs: &[usize], regular: bool) -> Result<()> {
    if regular {
        allgather(nodecomm, SendBuf::InPlace, ViewMut::slice(buf), counts[0])
    } else {
        allgatherv(nodecomm, SendBuf::InPlace, ViewMut::slice(buf), counts, displs)
    }
}

fn node_reduce_scatter<T: Element>(
    nodecomm: &Comm,
    send: SendBuf<'_, T>,
    recv: &mut [T],
    counts: &[usize],
    op: &ReduceOp<T>,
    regular: bool,
) -> Result<()> {
    if regular {
        reduce_scatter_block(nodecomm, send, recv, counts[0], op)
    } else {
        reduce_scatterv(nodecomm, send, recv, counts, op)
    }
}

fn use_regular(variant: Variant, count: usize, n: usize) -> bool {
    variant == Variant::Regular && count % n == 0
}

/// Broadcast: scatter on the root node, broadcast `1/n` of the data on
/// every lane, allgather on every node.
pub fn bcast_lane<T: Element>(comm: &Comm, buf: &mut [T], root: usize) -> Result<()> {
    bcast_lane_with(comm, buf, root, Variant::default())
}

pub fn bcast_lane_with<T: Element>(comm: &Comm, buf: &mut [T], root: usize, variant: Variant) -> Result<()> {
    let x = ctx(comm)?;
    let count = buf.len();
    agree(comm, count, "broadcast count")?;
    let (rootnode, noderoot) = root_coords(root, comm.size(), x.n)?;
    let (counts, displs) = partition_counts(count, x.n)?;
    let regular = use_regular(variant, count, x.n);
    let seg = displs[x.i]..displs[x.i] + counts[x.i];
    let node = &x.d.nodecomm;
    if x.j == rootnode {
        let (send, recv) = if x.i == noderoot {
            (Some(View::slice(&*buf)), RecvBuf::InPlace)
        } else {
            (None, RecvBuf::slice(&mut buf[seg.clone()]))
        };
        if regular {
            scatter(node, send, counts[0], recv, noderoot)?;
        } else {
            scatterv(node, send, &counts, &displs, recv, noderoot)?;
        }
    }
    if counts[x.i] > 0 {
        bcast(&x.d.lanecomm, &mut buf[seg], rootnode)?;
    }
    node_allgather(node, buf, &counts, &displs, regular)
}

/// Gather: lane gathers into the strided node layout at the root node, then
/// one node gather at the root that places every lane block by layout.
pub fn gather_lane<T: Element>(comm: &Comm, send: &[T], recv: Option<&mut [T]>, c: usize, root: usize) -> Result<()> {
    let x = ctx(comm)?;
    let (p, n, lanes) = (comm.size(), x.n, x.lanes);
    ensure!(send.len() >= c, "send buffer holds {} elements, needs {c}", send.len());
    let send = &send[..c];
    let (rootnode, noderoot) = root_coords(root, p, n)?;
    let (node, lane) = (&x.d.nodecomm, &x.d.lanecomm);
    if x.j == rootnode {
        if x.i == noderoot {
            let recv = recv.ok_or_else(|| contract("the gather root needs a receive buffer"))?;
            ensure!(recv.len() >= p * c, "receive buffer holds {} elements, needs {}", recv.len(), p * c);
            let nodetype = Layout::contiguous(c, ELEMENT.clone()).resized(n * c);
            let lanetype = Layout::vector(lanes, c, n * c, ELEMENT.clone()).resized(c);
            gather(lane, SendBuf::slice(send), Some(ViewMut::new(&mut recv[x.i * c..], lanes, &nodetype)), 1, rootnode)?;
            gather(node, SendBuf::InPlace, Some(ViewMut::new(recv, n, &lanetype)), 1, noderoot)
        } else {
            let mut temp = vec![T::zero(); lanes * c];
            gather(lane, SendBuf::slice(send), Some(ViewMut::slice(&mut temp)), c, rootnode)?;
            gather(node, SendBuf::slice(&temp), None, lanes * c, noderoot)
        }
    } else {
        gather(lane, SendBuf::slice(send), None, c, rootnode)
    }
}

/// Scatter: the mirror image of [`gather_lane`].
pub fn scatter_lane<T: Element>(comm: &Comm, send: Option<&[T]>, recv: &mut [T], c: usize, root: usize) -> Result<()> {
    let x = ctx(comm)?;
    let (p, n, lanes) = (comm.size(), x.n, x.lanes);
    ensure!(recv.len() >= c, "receive buffer holds {} elements, needs {c}", recv.len());
    let recv = &mut recv[..c];
    let (rootnode, noderoot) = root_coords(root, p, n)?;
    let (node, lane) = (&x.d.nodecomm, &x.d.lanecomm);
    if x.j == rootnode {
        if x.i == noderoot {
            let send = send.ok_or_else(|| contract("the scatter root needs a send buffer"))?;
            ensure!(send.len() >= p * c, "send buffer holds {} elements, needs {}", send.len(), p * c);
            let nodetype = Layout::contiguous(c, ELEMENT.clone()).resized(n * c);
            let lanetype = Layout::vector(lanes, c, n * c, ELEMENT.clone()).resized(c);
            scatter(node, Some(View::new(send, n, &lanetype)), 1, RecvBuf::InPlace, noderoot)?;
            scatter(lane, Some(View::new(&send[x.i * c..], lanes, &nodetype)), 1, RecvBuf::slice(recv), rootnode)
        } else {
            let mut temp = vec![T::zero(); lanes * c];
            scatter(node, None, lanes * c, RecvBuf::slice(&mut temp), noderoot)?;
            scatter(lane, Some(View::slice(&temp)), c, RecvBuf::slice(recv), rootnode)
        }
    } else {
        scatter(lane, None, c, RecvBuf::slice(recv), rootnode)
    }
}

/// Allgather: self-copy into the own slot, lane allgather into slots spaced
/// `n*c` apart, node allgather of the `N` strided blocks. No staging.
pub fn allgather_lane<T: Element>(comm: &Comm, send: SendBuf<'_, T>, recv: &mut [T], c: usize) -> Result<()> {
    let x = ctx(comm)?;
    let (p, n, lanes, rank) = (comm.size(), x.n, x.lanes, comm.rank());
    ensure!(recv.len() >= p * c, "receive buffer holds {} elements, needs {}", recv.len(), p * c);
    let lanetype = Layout::contiguous(c, ELEMENT.clone()).resized(n * c);
    let nodetype = Layout::vector(lanes, c, n * c, ELEMENT.clone()).resized(c);
    if let Some(s) = send.dense()? {
        ensure!(s.len() >= c, "send buffer holds {} elements, needs {c}", s.len());
        comm.self_copy(View::slice(&s[..c]), ViewMut::slice(&mut recv[rank * c..(rank + 1) * c]))?;
    }
    allgather(&x.d.lanecomm, SendBuf::InPlace, ViewMut::new(&mut recv[x.i * c..], lanes, &lanetype), 1)?;
    allgather(&x.d.nodecomm, SendBuf::InPlace, ViewMut::new(recv, n, &nodetype), 1)
}

/// Alltoall: lane alltoall of `n*c` blocks into a staging buffer, then a
/// node alltoall that reads and writes strided blocks.
pub fn alltoall_lane<T: Element>(comm: &Comm, send: &[T], recv: &mut [T], c: usize) -> Result<()> {
    let x = ctx(comm)?;
    let (p, n, lanes) = (comm.size(), x.n, x.lanes);
    ensure!(send.len() >= p * c && recv.len() >= p * c, "alltoall buffers need {} elements", p * c);
    let mut temp = vec![T::zero(); p * c];
    alltoall(&x.d.lanecomm, View::slice(&send[..p * c]), n * c, ViewMut::slice(&mut temp), n * c)?;
    let nodetype = Layout::vector(lanes, c, n * c, ELEMENT.clone()).resized(c);
    alltoall(&x.d.nodecomm, View::new(&temp, n, &nodetype), 1, ViewMut::new(recv, n, &nodetype), 1)
}

/// Allreduce: node reduce-scatter, lane allreduce of `1/n` of the data,
/// node allgather. Commutative operators only.
pub fn allreduce_lane<T: Element>(comm: &Comm, send: SendBuf<'_, T>, recv: &mut [T], count: usize, op: &ReduceOp<T>) -> Result<()> {
    allreduce_lane_with(comm, send, recv, count, op, Variant::default())
}

pub fn allreduce_lane_with<T: Element>(
    comm: &Comm,
    send: SendBuf<'_, T>,
    recv: &mut [T],
    count: usize,
    op: &ReduceOp<T>,
    variant: Variant,
) -> Result<()> {
    op.require_commutative()?;
    let x = ctx(comm)?;
    agree(comm, count, "allreduce count")?;
    ensure!(recv.len() >= count, "receive buffer holds {} elements, needs {count}", recv.len());
    let recv = &mut recv[..count];
    let (counts, displs) = partition_counts(count, x.n)?;
    let regular = use_regular(variant, count, x.n);
    let seg = displs[x.i]..displs[x.i] + counts[x.i];
    let node = &x.d.nodecomm;
    match send {
        SendBuf::InPlace => reduce_scatterv_at(node, recv, &counts, op)?,
        SendBuf::Data(_) => node_reduce_scatter(node, send, &mut recv[seg.clone()], &counts, op, regular)?,
    }
    if counts[x.i] > 0 {
        allreduce(&x.d.lanecomm, SendBuf::InPlace, &mut recv[seg], counts[x.i], op)?;
    }
    node_allgather(node, recv, &counts, &displs, regular)
}

/// Reduce: node reduce-scatter, lane reduce towards the root node, gather
/// on the root node. Commutative operators only.
pub fn reduce_lane<T: Element>(
    comm: &Comm,
    send: SendBuf<'_, T>,
    recv: Option<&mut [T]>,
    count: usize,
    op: &ReduceOp<T>,
    root: usize,
) -> Result<()> {
    op.require_commutative()?;
    let x = ctx(comm)?;
    let me = comm.rank();
    ensure!(me == root || !send.is_in_place(), "only the root may reduce in place");
    agree(comm, count, "reduce count")?;
    let (rootnode, noderoot) = root_coords(root, comm.size(), x.n)?;
    let (counts, displs) = partition_counts(count, x.n)?;
    let seg = displs[x.i]..displs[x.i] + counts[x.i];
    let (node, lane) = (&x.d.nodecomm, &x.d.lanecomm);
    if me == root {
        let recv = recv.ok_or_else(|| contract("the reduce root needs a receive buffer"))?;
        ensure!(recv.len() >= count, "receive buffer holds {} elements, needs {count}", recv.len());
        let recv = &mut recv[..count];
        match send {
            SendBuf::InPlace => reduce_scatterv_at(node, recv, &counts, op)?,
            SendBuf::Data(_) => reduce_scatterv(node, send, &mut recv[seg.clone()], &counts, op)?,
        }
        if counts[x.i] > 0 {
            reduce(lane, SendBuf::InPlace, Some(&mut recv[seg]), counts[x.i], op, rootnode)?;
        }
        basecoll::gatherv(node, SendBuf::InPlace, Some(ViewMut::slice(recv)), &counts, &displs, noderoot)
    } else {
        let mut part = vec![T::zero(); counts[x.i]];
        reduce_scatterv(node, send, &mut part, &counts, op)?;
        if counts[x.i] > 0 {
            if x.j == rootnode {
                reduce(lane, SendBuf::InPlace, Some(&mut part), counts[x.i], op, rootnode)?;
            } else {
                reduce(lane, SendBuf::slice(&part), None, counts[x.i], op, rootnode)?;
            }
        }
        if x.j == rootnode {
            basecoll::gatherv(node, SendBuf::slice(&part), None, &counts, &displs, noderoot)?;
        }
        Ok(())
    }
}

/// Regular reduce-scatter: permute blocks into lane order, reduce-scatter
/// `N*c` on the node, then `c` on the lane. Commutative operators only.
pub fn reduce_scatter_block_lane<T: Element>(
    comm: &Comm,
    send: SendBuf<'_, T>,
    recv: &mut [T],
    c: usize,
    op: &ReduceOp<T>,
) -> Result<()> {
    op.require_commutative()?;
    let x = ctx(comm)?;
    let (p, n, lanes) = (comm.size(), x.n, x.lanes);
    ensure!(recv.len() >= c, "receive buffer holds {} elements, needs {c}", recv.len());
    let permtype = Layout::contiguous(n, Layout::vector(lanes, c, n * c, ELEMENT.clone()).resized(c));
    let mut permbuf = vec![T::zero(); p * c];
    {
        let input: &[T] = match send.dense()? {
            Some(s) => s,
            None => &*recv,
        };
        ensure!(input.len() >= p * c, "reduce-scatter input holds {} elements, needs {}", input.len(), p * c);
        comm.self_copy(View::new(input, 1, &permtype), ViewMut::slice(&mut permbuf))?;
    }
    let mut temp = vec![T::zero(); lanes * c];
    reduce_scatter_block(&x.d.nodecomm, SendBuf::slice(&permbuf), &mut temp, lanes * c, op)?;
    reduce_scatter_block(&x.d.lanecomm, SendBuf::slice(&temp), recv, c, op)
}

/// Partial results shared by the full-lane scans: the node reduction,
/// split over the node, exclusively scanned along each lane.
fn lane_prefix<T: Element>(
    x: &Ctx,
    input: &[T],
    count: usize,
    op: &ReduceOp<T>,
    variant: Variant,
) -> Result<(Vec<T>, Vec<usize>, Vec<usize>, bool)> {
    let (counts, displs) = partition_counts(count, x.n)?;
    let regular = use_regular(variant, count, x.n);
    let seg = displs[x.i]..displs[x.i] + counts[x.i];
    let mut temp = vec![T::zero(); count];
    node_reduce_scatter(&x.d.nodecomm, SendBuf::slice(&input[..count]), &mut temp[seg.clone()], &counts, op, regular)?;
    if counts[x.i] > 0 {
        exscan(&x.d.lanecomm, SendBuf::InPlace, &mut temp[seg], counts[x.i], op)?;
    }
    Ok((temp, counts, displs, regular))
}

/// Inclusive scan. Commutative operators only.
///
/// With `InPlace` the node scan takes its input from `recv`.
pub fn scan_lane<T: Element>(comm: &Comm, send: SendBuf<'_, T>, recv: &mut [T], count: usize, op: &ReduceOp<T>) -> Result<()> {
    scan_lane_with(comm, send, recv, count, op, Variant::default())
}

pub fn scan_lane_with<T: Element>(
    comm: &Comm,
    send: SendBuf<'_, T>,
    recv: &mut [T],
    count: usize,
    op: &ReduceOp<T>,
    variant: Variant,
) -> Result<()> {
    op.require_commutative()?;
    let x = ctx(comm)?;
    agree(comm, count, "scan count")?;
    ensure!(recv.len() >= count, "receive buffer holds {} elements, needs {count}", recv.len());
    let (mut temp, counts, displs, regular) = {
        let input: &[T] = send.dense()?.unwrap_or(&*recv);
        ensure!(input.len() >= count, "send buffer holds {} elements, needs {count}", input.len());
        lane_prefix(&x, input, count, op, variant)?
    };
    scan(&x.d.nodecomm, send, recv, count, op)?;
    if x.j > 0 {
        node_allgather(&x.d.nodecomm, &mut temp, &counts, &displs, regular)?;
        reduce_local(&temp, &mut recv[..count], op)?;
    }
    Ok(())
}

/// Exclusive scan. Global rank 0's `recv` is left untouched. Commutative
/// operators only.
pub fn exscan_lane<T: Element>(comm: &Comm, send: SendBuf<'_, T>, recv: &mut [T], count: usize, op: &ReduceOp<T>) -> Result<()> {
    exscan_lane_with(comm, send, recv, count, op, Variant::default())
}

pub fn exscan_lane_with<T: Element>(
    comm: &Comm,
    send: SendBuf<'_, T>,
    recv: &mut [T],
    count: usize,
    op: &ReduceOp<T>,
    variant: Variant,
) -> Result<()> {
    op.require_commutative()?;
    let x = ctx(comm)?;
    agree(comm, count, "exscan count")?;
    ensure!(recv.len() >= count, "receive buffer holds {} elements, needs {count}", recv.len());
    let (mut temp, counts, displs, regular) = {
        let input: &[T] = send.dense()?.unwrap_or(&*recv);
        ensure!(input.len() >= count, "send buffer holds {} elements, needs {count}", input.len());
        lane_prefix(&x, input, count, op, variant)?
    };
    exscan(&x.d.nodecomm, send, recv, count, op)?;
    if x.j > 0 {
        let node = &x.d.nodecomm;
        if x.i == 0 {
            // Nothing precedes noderank 0 on its node: the lane prefix is the result.
            let seg = displs[0]..displs[0] + counts[0];
            let own = View::slice(&temp[seg]);
            if regular {
                allgather(node, SendBuf::Data(own), ViewMut::slice(&mut recv[..count]), counts[0])?;
            } else {
                allgatherv(node, SendBuf::Data(own), ViewMut::slice(&mut recv[..count]), &counts, &displs)?;
            }
        } else {
            node_allgather(node, &mut temp, &counts, &displs, regular)?;
            reduce_local(&temp, &mut recv[..count], op)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::CopyAudit;
    use crate::topology::NodeMap;
    use crate::transport::thread::run_threads;
    use crate::transport::CostLedger;

    fn on_nodes<R: Send>(nodes: usize, ppn: usize, f: impl Fn(&Comm) -> R + Sync) -> (Vec<R>, CostLedger) {
        let out = run_threads(NodeMap::blocks(nodes, ppn), |comm| {
            lanes(&comm).unwrap();
            comm.barrier().unwrap();
            let before = comm.ledger_snapshot().unwrap();
            let r = f(&comm);
            comm.barrier().unwrap();
            (r, comm.ledger_snapshot().unwrap().since(&before))
        });
        let l = out[0].1.clone();
        (out.into_iter().map(|(r, _)| r).collect(), l)
    }

    #[test]
    fn bcast_trace_p4() {
        let (out, ledger) = on_nodes(2, 2, |c| {
            let mut b = if c.rank() == 0 { vec![5, 6] } else { vec![0, 0] };
            bcast_lane(c, &mut b, 0).unwrap();
            b
        });
        assert!(out.iter().all(|b| b == &[5, 6]));
        assert_eq!(ledger.node_ingress(1), 2);
    }

    #[test]
    fn bcast_uneven_blocks() {
        assert_eq!(partition_counts(3, 2).unwrap().0, vec![1, 2]);
        let (out, _) = on_nodes(2, 2, |c| {
            let mut b = if c.rank() == 3 { vec![1, 2, 3] } else { vec![0; 3] };
            bcast_lane(c, &mut b, 3).unwrap();
            b
        });
        assert!(out.iter().all(|b| b == &[1, 2, 3]));
    }

    #[test]
    fn gather_trace_p4() {
        for root in 0..4 {
            let (out, _) = on_nodes(2, 2, |c| {
                let mut all = vec![-1; 4];
                let recv = (c.rank() == root).then_some(&mut all[..]);
                gather_lane(c, &[c.rank() as i32], recv, 1, root).unwrap();
                all
            });
            assert_eq!(out[root], vec![0, 1, 2, 3], "root {root}");
        }
    }

    #[test]
    fn scatter_volume() {
        let (n, lanes, c) = (3, 4, 2);
        let p = n * lanes;
        let (out, ledger) = on_nodes(lanes, n, |comm| {
            let src: Vec<i32> = (0..(p * c) as i32).collect();
            let mut mine = vec![0; c];
            let send = (comm.rank() == 4).then_some(&src[..]);
            scatter_lane(comm, send, &mut mine, c, 4).unwrap();
            mine
        });
        for (r, m) in out.iter().enumerate() {
            assert_eq!(m, &vec![(r * c) as i32, (r * c + 1) as i32]);
        }
        assert_eq!(ledger.node_egress(1) as usize, (p - n) * c);
        assert_eq!(ledger.ranks[4].sent as usize, (p - 1) * c);
    }

    #[test]
    fn allgather_trace_and_volume() {
        let (out, ledger) = on_nodes(2, 2, |c| {
            let mut all = vec![0; 4];
            allgather_lane(c, SendBuf::slice(&[10 + c.rank() as i32]), &mut all, 1).unwrap();
            all
        });
        assert!(out.iter().all(|a| a == &[10, 11, 12, 13]));
        assert!(ledger.ranks.iter().all(|t| t.sent == 3 && t.received == 3));
        assert_eq!(ledger.node_egress(0), 2);
    }

    #[test]
    fn allgather_is_zero_copy() {
        let (out, _) = on_nodes(3, 2, |c| {
            let mut all = vec![0i32; 12];
            all[2 * c.rank()] = c.rank() as i32;
            all[2 * c.rank() + 1] = 1;
            let before = CopyAudit::current();
            allgather_lane(c, SendBuf::InPlace, &mut all, 2).unwrap();
            let a = CopyAudit::current().since(&before);
            (a.explicit, a.staged, a.self_copied)
        });
        assert!(out.iter().all(|&a| a == (0, 0, 0)));
    }

    #[test]
    fn alltoall_trace_and_volume() {
        let (out, ledger) = on_nodes(2, 2, |c| {
            let r = c.rank() as i32;
            let send: Vec<i32> = (0..4).map(|j| 10 * r + j).collect();
            let mut recv = vec![0; 4];
            alltoall_lane(c, &send, &mut recv, 1).unwrap();
            recv
        });
        for (r, recv) in out.iter().enumerate() {
            assert_eq!(recv, &(0..4).map(|j| 10 * j + r as i32).collect::<Vec<_>>());
        }
        // 2pc - (N+n)c with p=4, N=n=2, c=1
        assert!(ledger.ranks.iter().all(|t| t.sent == 4 && t.received == 4));
    }

    #[test]
    fn allreduce_sum_and_commutativity_guard() {
        let (out, _) = on_nodes(2, 2, |c| {
            let r = c.rank() as i32;
            let mut got = [0, 0];
            allreduce_lane(c, SendBuf::slice(&[r, 2 * r]), &mut got, 2, &ReduceOp::sum()).unwrap();
            let bad = allreduce_lane(c, SendBuf::slice(&[r]), &mut [0], 1, &ReduceOp::first());
            (got, bad.is_err())
        });
        assert!(out.iter().all(|&(g, bad)| g == [6, 12] && bad));
    }

    #[test]
    fn allreduce_remainder_both_variants() {
        for variant in [Variant::Irregular, Variant::Regular] {
            let (out, _) = on_nodes(2, 4, |c| {
                let input: Vec<i64> = (0..10).map(|x| x * (c.rank() as i64 + 1)).collect();
                let mut got = vec![0; 10];
                allreduce_lane_with(c, SendBuf::slice(&input), &mut got, 10, &ReduceOp::sum(), variant).unwrap();
                got
            });
            let want: Vec<i64> = (0..10).map(|x| x * 36).collect();
            assert!(out.iter().all(|g| g == &want));
        }
    }

    #[test]
    fn reduce_single_element() {
        for root in [0, 5] {
            let (out, _) = on_nodes(2, 3, |c| {
                let mut got = [0];
                let recv = (c.rank() == root).then_some(&mut got[..]);
                reduce_lane(c, SendBuf::slice(&[c.rank() as i32 + 1]), recv, 1, &ReduceOp::sum(), root).unwrap();
                got[0]
            });
            assert_eq!(out[root], 21);
        }
    }

    #[test]
    fn reduce_scatter_trace() {
        let (out, _) = on_nodes(2, 2, |c| {
            let r = c.rank() as i32;
            let input: Vec<i32> = (0..4).map(|b| 100 * b + r).collect();
            let mut got = [0];
            reduce_scatter_block_lane(c, SendBuf::slice(&input), &mut got, 1, &ReduceOp::sum()).unwrap();
            let mut same = vec![7; 4];
            reduce_scatter_block_lane(c, SendBuf::InPlace, &mut same, 1, &ReduceOp::sum()).unwrap();
            (got[0], same[0])
        });
        for (r, &(g, s)) in out.iter().enumerate() {
            assert_eq!(g, 400 * r as i32 + 6);
            assert_eq!(s, 28);
        }
    }

    #[test]
    fn scan_examples() {
        let (out, _) = on_nodes(3, 2, |c| {
            let mut s = [0i32];
            scan_lane(c, SendBuf::slice(&[c.rank() as i32]), &mut s, 1, &ReduceOp::sum()).unwrap();
            let mut e = [-5i32];
            exscan_lane(c, SendBuf::slice(&[c.rank() as i32]), &mut e, 1, &ReduceOp::sum()).unwrap();
            (s[0], e[0])
        });
        assert_eq!(out[5].0, 15);
        assert_eq!(out[2].0, 3);
        assert_eq!(out.iter().map(|o| o.1).collect::<Vec<_>>(), vec![-5, 0, 1, 3, 6, 10]);
    }

    #[test]
    fn irregular_fallback_matches_base() {
        let run = |lane: bool| {
            let out = run_threads(NodeMap::uneven(&[2, 2, 1]), |comm| {
                let d = lanes(&comm).unwrap();
                assert!(!d.regular);
                comm.barrier().unwrap();
                let before = comm.ledger_snapshot().unwrap();
                let mut all = vec![0i32; 10];
                let mine = [comm.rank() as i32, 1];
                if lane {
                    allgather_lane(&comm, SendBuf::slice(&mine), &mut all, 2).unwrap();
                } else {
                    allgather(&d.lanecomm, SendBuf::slice(&mine), ViewMut::slice(&mut all), 2).unwrap();
                }
                comm.barrier().unwrap();
                (all, comm.ledger_snapshot().unwrap().since(&before))
            });
            out.into_iter().next().unwrap()
        };
        let (a, la) = run(true);
        let (b, lb) = run(false);
        assert_eq!(a, b);
        assert_eq!(la, lb);
    }
}
