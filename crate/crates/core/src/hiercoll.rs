//! Hierarchical collectives: one representative per node does all off-node
//! communication while the rest of the node waits on node-local phases.
//!
//! Node-local and lane phases both preserve rank order, so the reductions
//! accept non-commutative operators.

use crate::basecoll::{
    agree, allgather, allreduce, bcast, exscan, gather, reduce, reduce_scatter_block, scan, scatter, RecvBuf,
    SendBuf,
};
use crate::element::Element;
use crate::error::{contract, ensure, Result};
use crate::layout::{stage, View, ViewMut};
use crate::ops::{reduce_local, ReduceOp};
use crate::topology::{lanes, root_coords};
use crate::transport::Comm;

/// Lane broadcast among the root's node peers, then node broadcasts.
pub fn bcast_hier<T: Element>(comm: &Comm, buf: &mut [T], root: usize) -> Result<()> {
    let d = lanes(comm)?;
    agree(comm, buf.len(), "broadcast count")?;
    let (rootnode, noderoot) = root_coords(root, comm.size(), d.n())?;
    if d.coords.noderank == noderoot {
        bcast(&d.lanecomm, buf, rootnode)?;
    }
    bcast(&d.nodecomm, buf, noderoot)
}

/// Node gathers to the root's node peer, then a lane gather of `n*c`
/// blocks to the root.
pub fn gather_hier<T: Element>(comm: &Comm, send: &[T], recv: Option<&mut [T]>, c: usize, root: usize) -> Result<()> {
    let d = lanes(comm)?;
    let (p, n) = (comm.size(), d.n());
    let (i, j) = (d.coords.noderank, d.coords.lanerank);
    ensure!(send.len() >= c, "send buffer holds {} elements, needs {c}", send.len());
    let send = &send[..c];
    let (rootnode, noderoot) = root_coords(root, p, n)?;
    let (node, lane) = (&d.nodecomm, &d.lanecomm);
    if i != noderoot {
        return gather(node, SendBuf::slice(send), None, c, noderoot);
    }
    if j == rootnode {
        let recv = recv.ok_or_else(|| contract("the gather root needs a receive buffer"))?;
        ensure!(recv.len() >= p * c, "receive buffer holds {} elements, needs {}", recv.len(), p * c);
        gather(node, SendBuf::slice(send), Some(ViewMut::slice(&mut recv[j * n * c..(j + 1) * n * c])), c, noderoot)?;
        gather(lane, SendBuf::InPlace, Some(ViewMut::slice(&mut recv[..p * c])), n * c, rootnode)
    } else {
        let mut temp = vec![T::zero(); n * c];
        gather(node, SendBuf::slice(send), Some(ViewMut::slice(&mut temp)), c, noderoot)?;
        gather(lane, SendBuf::slice(&temp), None, n * c, rootnode)
    }
}

/// Lane scatter of `n*c` blocks among the root's node peers, then node
/// scatters.
pub fn scatter_hier<T: Element>(comm: &Comm, send: Option<&[T]>, recv: &mut [T], c: usize, root: usize) -> Result<()> {
    let d = lanes(comm)?;
    let (p, n) = (comm.size(), d.n());
    let (i, j) = (d.coords.noderank, d.coords.lanerank);
    ensure!(recv.len() >= c, "receive buffer holds {} elements, needs {c}", recv.len());
    let recv = &mut recv[..c];
    let (rootnode, noderoot) = root_coords(root, p, n)?;
    let (node, lane) = (&d.nodecomm, &d.lanecomm);
    if i != noderoot {
        return scatter(node, None, c, RecvBuf::slice(recv), noderoot);
    }
    if j == rootnode {
        let send = send.ok_or_else(|| contract("the scatter root needs a send buffer"))?;
        ensure!(send.len() >= p * c, "send buffer holds {} elements, needs {}", send.len(), p * c);
        scatter(lane, Some(View::slice(&send[..p * c])), n * c, RecvBuf::InPlace, rootnode)?;
        scatter(node, Some(View::slice(&send[j * n * c..(j + 1) * n * c])), c, RecvBuf::slice(recv), noderoot)
    } else {
        let mut temp = vec![T::zero(); n * c];
        scatter(lane, None, n * c, RecvBuf::slice(&mut temp), rootnode)?;
        scatter(node, Some(View::slice(&temp)), c, RecvBuf::slice(recv), noderoot)
    }
}

/// Node gather to noderank 0, lane allgather among noderank-0 processes,
/// node broadcast of the full result.
pub fn allgather_hier<T: Element>(comm: &Comm, send: SendBuf<'_, T>, recv: &mut [T], c: usize) -> Result<()> {
    let d = lanes(comm)?;
    let (p, n, rank) = (comm.size(), d.n(), comm.rank());
    let (i, j) = (d.coords.noderank, d.coords.lanerank);
    ensure!(recv.len() >= p * c, "receive buffer holds {} elements, needs {}", recv.len(), p * c);
    let node = &d.nodecomm;
    if i == 0 {
        gather(node, send, Some(ViewMut::slice(&mut recv[j * n * c..(j + 1) * n * c])), c, 0)?;
        allgather(&d.lanecomm, SendBuf::InPlace, ViewMut::slice(&mut recv[..p * c]), n * c)?;
    } else {
        let take = match send {
            SendBuf::InPlace => SendBuf::slice(&recv[rank * c..(rank + 1) * c]),
            data => data,
        };
        gather(node, take, None, c, 0)?;
    }
    bcast(node, &mut recv[..p * c], 0)
}

/// Node reduce to noderank 0, lane allreduce, node broadcast.
pub fn allreduce_hier<T: Element>(comm: &Comm, send: SendBuf<'_, T>, recv: &mut [T], count: usize, op: &ReduceOp<T>) -> Result<()> {
    let d = lanes(comm)?;
    agree(comm, count, "allreduce count")?;
    ensure!(recv.len() >= count, "receive buffer holds {} elements, needs {count}", recv.len());
    let recv = &mut recv[..count];
    let node = &d.nodecomm;
    if d.coords.noderank == 0 {
        reduce(node, send, Some(&mut *recv), count, op, 0)?;
        allreduce(&d.lanecomm, SendBuf::InPlace, recv, count, op)?;
    } else {
        let take = match send {
            SendBuf::InPlace => SendBuf::slice(&*recv),
            data => data,
        };
        reduce(node, take, None, count, op, 0)?;
    }
    bcast(node, recv, 0)
}

/// Node reduce to the root's node peer, then a lane reduce to the root.
pub fn reduce_hier<T: Element>(
    comm: &Comm,
    send: SendBuf<'_, T>,
    recv: Option<&mut [T]>,
    count: usize,
    op: &ReduceOp<T>,
    root: usize,
) -> Result<()> {
    let d = lanes(comm)?;
    let me = comm.rank();
    ensure!(me == root || !send.is_in_place(), "only the root may reduce in place");
    agree(comm, count, "reduce count")?;
    let (rootnode, noderoot) = root_coords(root, comm.size(), d.n())?;
    let (node, lane) = (&d.nodecomm, &d.lanecomm);
    if d.coords.noderank != noderoot {
        return reduce(node, send, None, count, op, noderoot);
    }
    if me == root {
        let recv = recv.ok_or_else(|| contract("the reduce root needs a receive buffer"))?;
        ensure!(recv.len() >= count, "receive buffer holds {} elements, needs {count}", recv.len());
        reduce(node, send, Some(&mut recv[..count]), count, op, noderoot)?;
        reduce(lane, SendBuf::InPlace, Some(&mut recv[..count]), count, op, rootnode)
    } else {
        let mut partial = vec![T::zero(); count];
        reduce(node, send, Some(&mut partial), count, op, noderoot)?;
        reduce(lane, SendBuf::slice(&partial), None, count, op, rootnode)
    }
}

/// Node reduce of all `p*c` elements, lane reduce-scatter of `n*c` blocks,
/// node scatter of `c`.
pub fn reduce_scatter_block_hier<T: Element>(
    comm: &Comm,
    send: SendBuf<'_, T>,
    recv: &mut [T],
    c: usize,
    op: &ReduceOp<T>,
) -> Result<()> {
    let d = lanes(comm)?;
    let (p, n) = (comm.size(), d.n());
    ensure!(recv.len() >= c, "receive buffer holds {} elements, needs {c}", recv.len());
    let node = &d.nodecomm;
    let mut temp = if d.coords.noderank == 0 { vec![T::zero(); p * c] } else { Vec::new() };
    {
        let input: &[T] = send.dense()?.unwrap_or(&*recv);
        ensure!(input.len() >= p * c, "reduce-scatter input holds {} elements, needs {}", input.len(), p * c);
        let root_buf = (d.coords.noderank == 0).then_some(&mut temp[..]);
        reduce(node, SendBuf::slice(&input[..p * c]), root_buf, p * c, op, 0)?;
    }
    if d.coords.noderank == 0 {
        reduce_scatter_block(&d.lanecomm, SendBuf::InPlace, &mut temp, n * c, op)?;
        scatter(node, Some(View::slice(&temp[..n * c])), c, RecvBuf::slice(&mut recv[..c]), 0)
    } else {
        scatter(node, None, c, RecvBuf::slice(&mut recv[..c]), 0)
    }
}

/// Node scan, lane exscan of the node totals held by the last process on
/// each node, node broadcast of that prefix.
pub fn scan_hier<T: Element>(comm: &Comm, send: SendBuf<'_, T>, recv: &mut [T], count: usize, op: &ReduceOp<T>) -> Result<()> {
    let d = lanes(comm)?;
    agree(comm, count, "scan count")?;
    ensure!(recv.len() >= count, "receive buffer holds {} elements, needs {count}", recv.len());
    let recv = &mut recv[..count];
    let n = d.n();
    scan(&d.nodecomm, send, recv, count, op)?;
    let mut temp = vec![T::zero(); count];
    if d.coords.noderank == n - 1 {
        exscan(&d.lanecomm, SendBuf::slice(&*recv), &mut temp, count, op)?;
    }
    if d.coords.lanerank > 0 {
        bcast(&d.nodecomm, &mut temp, n - 1)?;
        reduce_local(&temp, recv, op)?;
    }
    Ok(())
}

/// Exclusive scan built like [`scan_hier`]; the last process on each node
/// forms the node total from its exclusive prefix and its own input.
pub fn exscan_hier<T: Element>(comm: &Comm, send: SendBuf<'_, T>, recv: &mut [T], count: usize, op: &ReduceOp<T>) -> Result<()> {
    let d = lanes(comm)?;
    agree(comm, count, "exscan count")?;
    ensure!(recv.len() >= count, "receive buffer holds {} elements, needs {count}", recv.len());
    let recv = &mut recv[..count];
    let n = d.n();
    if n == 1 {
        return exscan(&d.lanecomm, send, recv, count, op);
    }
    let (i, j) = (d.coords.noderank, d.coords.lanerank);
    let last = i == n - 1;
    let own = match (last, send.dense()?) {
        (false, _) => Vec::new(),
        (true, Some(x)) => {
            ensure!(x.len() >= count, "send buffer holds {} elements, needs {count}", x.len());
            x[..count].to_vec()
        }
        (true, None) => stage(&*recv),
    };
    exscan(&d.nodecomm, send, recv, count, op)?;
    let mut temp = vec![T::zero(); count];
    if last {
        let mut total = own;
        op.fold_lower(recv, &mut total);
        exscan(&d.lanecomm, SendBuf::slice(&total), &mut temp, count, op)?;
    }
    if j > 0 {
        if i == 0 {
            bcast(&d.nodecomm, recv, n - 1)?;
        } else {
            bcast(&d.nodecomm, &mut temp, n - 1)?;
            reduce_local(&temp, recv, op)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
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

    fn offnode_ranks_per_node(ledger: &CostLedger) -> Vec<usize> {
        let mut per = vec![0; ledger.nodes];
        for t in &ledger.ranks {
            if t.offnode_sent > 0 || t.offnode_received > 0 {
                per[t.node] += 1;
            }
        }
        per
    }

    #[test]
    fn bcast_single_representative() {
        let (out, ledger) = on_nodes(3, 3, |c| {
            let mut b = if c.rank() == 4 { vec![1, 2, 3] } else { vec![0; 3] };
            bcast_hier(c, &mut b, 4).unwrap();
            b
        });
        assert!(out.iter().all(|b| b == &[1, 2, 3]));
        assert!(offnode_ranks_per_node(&ledger).iter().all(|&k| k == 1));
    }

    #[test]
    fn gather_scatter_roundtrip() {
        for root in [0, 3, 5] {
            let (out, ledger) = on_nodes(2, 3, |c| {
                let mut all = vec![0; 12];
                let me = [c.rank() as i32, -(c.rank() as i32)];
                gather_hier(c, &me, (c.rank() == root).then_some(&mut all[..]), 2, root).unwrap();
                let mut back = [0; 2];
                scatter_hier(c, (c.rank() == root).then_some(&all[..]), &mut back, 2, root).unwrap();
                (all, back)
            });
            let want: Vec<i32> = (0..6).flat_map(|r| [r, -r]).collect();
            assert_eq!(out[root].0, want);
            for (r, o) in out.iter().enumerate() {
                assert_eq!(o.1, [r as i32, -(r as i32)]);
            }
            assert!(offnode_ranks_per_node(&ledger).iter().all(|&k| k == 1));
        }
    }

    #[test]
    fn allgather_in_place() {
        let (out, _) = on_nodes(2, 3, |c| {
            let mut all = vec![0; 6];
            all[c.rank()] = 10 + c.rank() as i32;
            allgather_hier(c, SendBuf::InPlace, &mut all, 1).unwrap();
            all
        });
        assert!(out.iter().all(|a| a == &[10, 11, 12, 13, 14, 15]));
    }

    #[test]
    fn reductions_accept_rank_ordered_operators() {
        let first = ReduceOp::<i32>::first();
        let (out, _) = on_nodes(3, 2, |c| {
            let r = c.rank() as i32;
            let mut all = [0];
            allreduce_hier(c, SendBuf::slice(&[r + 1]), &mut all, 1, &first).unwrap();
            let mut red = [0];
            reduce_hier(c, SendBuf::slice(&[r + 1]), (c.rank() == 3).then_some(&mut red[..]), 1, &ReduceOp::sum(), 3)
                .unwrap();
            let mut s = [0];
            scan_hier(c, SendBuf::slice(&[r + 1]), &mut s, 1, &first).unwrap();
            (all[0], red[0], s[0])
        });
        assert!(out.iter().all(|o| o.0 == 1 && o.2 == 1));
        assert_eq!(out[3].1, 21);
    }

    #[test]
    fn reduce_scatter_block_sum() {
        let (out, _) = on_nodes(2, 2, |c| {
            let r = c.rank() as i32;
            let input: Vec<i32> = (0..4).map(|b| 100 * b + r).collect();
            let mut got = [0];
            reduce_scatter_block_hier(c, SendBuf::slice(&input), &mut got, 1, &ReduceOp::sum()).unwrap();
            got[0]
        });
        assert_eq!(out, vec![6, 406, 806, 1206]);
    }

    #[test]
    fn scans_match_prefix_sums() {
        for ppn in [1, 2, 3] {
            let (out, _) = on_nodes(3, ppn, |c| {
                let r = c.rank() as i64;
                let mut s = [0];
                scan_hier(c, SendBuf::slice(&[r]), &mut s, 1, &ReduceOp::sum()).unwrap();
                let mut e = [r];
                exscan_hier(c, SendBuf::InPlace, &mut e, 1, &ReduceOp::sum()).unwrap();
                (s[0], e[0])
            });
            for (r, &(s, e)) in out.iter().enumerate() {
                let r = r as i64;
                assert_eq!(s, r * (r + 1) / 2);
                if r > 0 {
                    assert_eq!(e, r * (r - 1) / 2);
                } else {
                    assert_eq!(e, 0);
                }
            }
        }
    }
}
