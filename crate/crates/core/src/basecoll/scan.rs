use super::SendBuf;
use crate::element::Element;
use crate::error::{ensure, Result};
use crate::ops::ReduceOp;
use crate::transport::Comm;

/// Inclusive prefix reduction along a chain: rank `r` waits for the prefix
/// of `r-1`, combines its own input on the right and forwards the result.
pub fn scan<T: Element>(comm: &Comm, send: SendBuf<'_, T>, recv: &mut [T], count: usize, op: &ReduceOp<T>) -> Result<()> {
    let (p, me) = (comm.size(), comm.rank());
    ensure!(recv.len() >= count, "receive buffer holds {} elements, needs {count}", recv.len());
    let tag = comm.next_tag();
    let recv = &mut recv[..count];
    if let Some(x) = send.dense()? {
        ensure!(x.len() >= count, "send buffer holds {} elements, needs {count}", x.len());
        recv.copy_from_slice(&x[..count]);
    }
    if me > 0 {
        let prefix = comm.recv_vec::<T>(me - 1, tag)?;
        ensure!(prefix.len() == count, "prefix of {} elements, expected {count}", prefix.len());
        op.fold_lower(&prefix, recv);
    }
    if me + 1 < p {
        comm.send_slice(me + 1, tag, recv)?;
    }
    Ok(())
}

/// Exclusive prefix reduction along a chain. Rank 0's `recv` is left
/// untouched.
pub fn exscan<T: Element>(comm: &Comm, send: SendBuf<'_, T>, recv: &mut [T], count: usize, op: &ReduceOp<T>) -> Result<()> {
    let (p, me) = (comm.size(), comm.rank());
    ensure!(recv.len() >= count, "receive buffer holds {} elements, needs {count}", recv.len());
    let tag = comm.next_tag();
    let own: Vec<T> = match send.dense()? {
        Some(x) => {
            ensure!(x.len() >= count, "send buffer holds {} elements, needs {count}", x.len());
            x[..count].to_vec()
        }
        None => recv[..count].to_vec(),
    };
    if me == 0 {
        if p > 1 {
            comm.send_slice(1, tag, &own)?;
        }
        return Ok(());
    }
    let prefix = comm.recv_vec::<T>(me - 1, tag)?;
    ensure!(prefix.len() == count, "prefix of {} elements, expected {count}", prefix.len());
    recv[..count].copy_from_slice(&prefix);
    if me + 1 < p {
        let mut next = own;
        op.fold_lower(&prefix, &mut next);
        comm.send_slice(me + 1, tag, &next)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basecoll::testutil::on_world;

    #[test]
    fn triangular_numbers() {
        let (out, _) = on_world(5, |c| {
            let mut s = [0i32];
            scan(c, SendBuf::slice(&[c.rank() as i32]), &mut s, 1, &ReduceOp::sum()).unwrap();
            s[0]
        });
        assert_eq!(out, vec![0, 1, 3, 6, 10]);
    }

    #[test]
    fn exscan_leaves_rank_zero_alone() {
        let (out, _) = on_world(4, |c| {
            let mut s = [-99i32, -99];
            let r = c.rank() as i32;
            exscan(c, SendBuf::slice(&[r + 1, 1]), &mut s, 2, &ReduceOp::sum()).unwrap();
            s
        });
        assert_eq!(out, vec![[-99, -99], [1, 1], [3, 2], [6, 3]]);
    }

    #[test]
    fn in_place_and_non_commutative() {
        let first = ReduceOp::<i64>::first();
        let (out, _) = on_world(4, |c| {
            let r = c.rank() as i64;
            let mut a = [r + 5];
            scan(c, SendBuf::InPlace, &mut a, 1, &first).unwrap();
            let mut b = [r + 7];
            exscan(c, SendBuf::InPlace, &mut b, 1, &ReduceOp::sum()).unwrap();
            (a[0], b[0])
        });
        assert_eq!(out, vec![(5, 7), (5, 7), (5, 15), (5, 24)]);
    }
}
