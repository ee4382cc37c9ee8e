use super::{agree, allgatherv, check_vector, gatherv, prefix, scatterv, RecvBuf, SendBuf};
use crate::element::Element;
use crate::error::{contract, ensure, Result};
use crate::layout::{View, ViewMut};
use crate::ops::ReduceOp;
use crate::topology::partition_counts;
use crate::transport::Comm;

/// Reduces `input` across ranks and returns this rank's segment.
///
/// Commutative operators use a ring: in step `s` rank `r` passes its
/// partial result for block `r-s-1` to the right, so each rank sends
/// `sum(counts) - counts[r]` elements. Other operators are reduced in rank
/// order at rank 0 and then scattered.
fn reduce_segments<T: Element>(comm: &Comm, input: &[T], counts: &[usize], op: &ReduceOp<T>) -> Result<Vec<T>> {
    let (p, me) = (comm.size(), comm.rank());
    let displs = prefix(counts);
    let total: usize = counts.iter().sum();
    ensure!(input.len() >= total, "reduction input holds {} elements, counts need {total}", input.len());
    let block = |b: usize| &input[displs[b]..displs[b] + counts[b]];
    let tag = comm.next_tag();
    if p == 1 {
        return Ok(block(0).to_vec());
    }
    if op.is_commutative() {
        let (right, left) = ((me + 1) % p, (me + p - 1) % p);
        let mut acc: Vec<T> = Vec::new();
        for s in 0..p - 1 {
            let out = (me + 2 * p - s - 1) % p;
            if s == 0 {
                comm.send_slice(right, tag, block(out))?;
            } else {
                comm.send_slice(right, tag, &acc)?;
            }
            let inc = (me + 2 * p - s - 2) % p;
            acc = comm.recv_vec(left, tag)?;
            ensure!(acc.len() == counts[inc], "ring segment of {} elements, expected {}", acc.len(), counts[inc]);
            op.fold_higher(&mut acc, block(inc));
        }
        Ok(acc)
    } else {
        let mut mine = vec![T::zero(); counts[me]];
        if me == 0 {
            let mut acc = input[..total].to_vec();
            for r in 1..p {
                let x = comm.recv_vec::<T>(r, tag)?;
                ensure!(x.len() == total, "rank {r} contributed {} elements, expected {total}", x.len());
                op.fold_higher(&mut acc, &x);
            }
            scatterv(comm, Some(View::slice(&acc)), counts, &displs, RecvBuf::slice(&mut mine), 0)?;
        } else {
            comm.send_slice(0, tag, &input[..total])?;
            scatterv(comm, None, counts, &displs, RecvBuf::slice(&mut mine), 0)?;
        }
        Ok(mine)
    }
}

/// Reduce-scatter with per-rank counts. Rank `r` gets the reduction of
/// elements `displs[r]..displs[r]+counts[r]` in `recv[..counts[r]]`.
/// With `InPlace` the input is read from `recv` (all `sum(counts)`
/// elements) and the result written to its start.
pub fn reduce_scatterv<T: Element>(
    comm: &Comm,
    send: SendBuf<'_, T>,
    recv: &mut [T],
    counts: &[usize],
    op: &ReduceOp<T>,
) -> Result<()> {
    ensure!(counts.len() == comm.size(), "counts need {} entries", comm.size());
    let me = comm.rank();
    ensure!(recv.len() >= counts[me], "receive buffer holds {} elements, needs {}", recv.len(), counts[me]);
    let seg = match send.dense()? {
        Some(input) => reduce_segments(comm, input, counts, op)?,
        None => reduce_segments(comm, recv, counts, op)?,
    };
    recv[..counts[me]].copy_from_slice(&seg);
    Ok(())
}

/// Reduce-scatter in place with the result left at this rank's own
/// displacement of `buf` rather than at its start.
pub fn reduce_scatterv_at<T: Element>(comm: &Comm, buf: &mut [T], counts: &[usize], op: &ReduceOp<T>) -> Result<()> {
    ensure!(counts.len() == comm.size(), "counts need {} entries", comm.size());
    let displs = prefix(counts);
    let me = comm.rank();
    let seg = reduce_segments(comm, buf, counts, op)?;
    buf[displs[me]..displs[me] + counts[me]].copy_from_slice(&seg);
    Ok(())
}

/// Regular reduce-scatter of `c` elements per rank.
pub fn reduce_scatter_block<T: Element>(
    comm: &Comm,
    send: SendBuf<'_, T>,
    recv: &mut [T],
    c: usize,
    op: &ReduceOp<T>,
) -> Result<()> {
    reduce_scatterv(comm, send, recv, &vec![c; comm.size()], op)
}

/// Reduction to `root`: reduce-scatter, then gather. `recv` is used at the
/// root only, where `InPlace` takes the input from `recv`.
pub fn reduce<T: Element>(
    comm: &Comm,
    send: SendBuf<'_, T>,
    recv: Option<&mut [T]>,
    count: usize,
    op: &ReduceOp<T>,
    root: usize,
) -> Result<()> {
    let (p, me) = (comm.size(), comm.rank());
    ensure!(root < p, "root {root} out of range for {p} ranks");
    ensure!(me == root || !send.is_in_place(), "only the root may reduce in place");
    agree(comm, root, "reduce root")?;
    let (counts, displs) = partition_counts(count, p)?;
    if me == root {
        let recv = recv.ok_or_else(|| contract("the reduce root needs a receive buffer"))?;
        ensure!(recv.len() >= count, "receive buffer holds {} elements, needs {count}", recv.len());
        match send {
            SendBuf::InPlace => reduce_scatterv_at(comm, &mut recv[..count], &counts, op)?,
            SendBuf::Data(_) => {
                let (lo, hi) = (displs[me], displs[me] + counts[me]);
                reduce_scatterv(comm, send, &mut recv[lo..hi], &counts, op)?
            }
        }
        gatherv(comm, SendBuf::InPlace, Some(ViewMut::slice(&mut recv[..count])), &counts, &displs, root)
    } else {
        let mut seg = vec![T::zero(); counts[me]];
        reduce_scatterv(comm, send, &mut seg, &counts, op)?;
        gatherv(comm, SendBuf::slice(&seg), None, &counts, &displs, root)
    }
}

/// Reduction to all ranks: reduce-scatter, then allgather.
pub fn allreduce<T: Element>(comm: &Comm, send: SendBuf<'_, T>, recv: &mut [T], count: usize, op: &ReduceOp<T>) -> Result<()> {
    let (counts, displs) = partition_counts(count, comm.size())?;
    check_vector(comm, &counts, &displs)?;
    ensure!(recv.len() >= count, "receive buffer holds {} elements, needs {count}", recv.len());
    let me = comm.rank();
    match send {
        SendBuf::InPlace => reduce_scatterv_at(comm, &mut recv[..count], &counts, op)?,
        SendBuf::Data(_) => {
            let (lo, hi) = (displs[me], displs[me] + counts[me]);
            reduce_scatterv(comm, send, &mut recv[lo..hi], &counts, op)?
        }
    }
    allgatherv(comm, SendBuf::InPlace, ViewMut::slice(&mut recv[..count]), &counts, &displs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basecoll::testutil::on_world;

    #[test]
    fn block_sum_of_ranks() {
        let (out, _) = on_world(4, |c| {
            let r = c.rank() as i32;
            let mut got = [0];
            reduce_scatter_block(c, SendBuf::slice(&[r, r, r, r]), &mut got, 1, &ReduceOp::sum()).unwrap();
            got[0]
        });
        assert_eq!(out, vec![6; 4]);
    }

    #[test]
    fn remainder_partition_conserves() {
        let (counts, displs) = partition_counts(10, 4).unwrap();
        let (out, _) = on_world(4, |c| {
            let input: Vec<i32> = (0..10).map(|x| x + c.rank() as i32).collect();
            let mut got = vec![0; counts[c.rank()]];
            reduce_scatterv(c, SendBuf::slice(&input), &mut got, &counts, &ReduceOp::sum()).unwrap();
            got
        });
        for (r, seg) in out.iter().enumerate() {
            let want: Vec<i32> = (displs[r]..displs[r] + counts[r]).map(|x| 4 * x as i32 + 6).collect();
            assert_eq!(seg, &want);
        }
    }

    #[test]
    fn reduce_and_allreduce_sum() {
        for root in 0..4 {
            let (out, _) = on_world(4, |c| {
                let r = c.rank() as i32;
                let mut got = [0, 0];
                let recv = (c.rank() == root).then_some(&mut got[..]);
                reduce(c, SendBuf::slice(&[r, 2 * r]), recv, 2, &ReduceOp::sum(), root).unwrap();
                let mut all = [r, 2 * r];
                allreduce(c, SendBuf::InPlace, &mut all, 2, &ReduceOp::sum()).unwrap();
                (got, all)
            });
            assert_eq!(out[root].0, [6, 12]);
            assert!(out.iter().all(|o| o.1 == [6, 12]));
        }
    }

    #[test]
    fn non_commutative_keeps_rank_order() {
        let first = ReduceOp::<i32>::first();
        let (out, _) = on_world(5, |c| {
            let r = c.rank() as i32;
            let mut got = [0; 3];
            reduce(c, SendBuf::slice(&[r + 1, r + 2, r + 3]), (c.rank() == 2).then_some(&mut got[..]), 3, &first, 2)
                .unwrap();
            got
        });
        assert_eq!(out[2], [1, 2, 3]);
    }

    #[test]
    fn ring_traffic_is_exact() {
        let (_, ledger) = on_world(4, |c| {
            let mut got = [0i32; 2];
            reduce_scatter_block(c, SendBuf::slice(&[1; 8]), &mut got, 2, &ReduceOp::sum()).unwrap();
        });
        assert!(ledger.ranks.iter().all(|t| t.sent == 6 && t.received == 6));
    }
}
