use super::{agree, check_vector, RecvBuf, SendBuf};
use crate::element::Element;
use crate::error::{contract, ensure, Result};
use crate::layout::View;
use crate::transport::Comm;

/// Linear scatter. `send` is read at the root only; rank `i` receives
/// units `displs[i]..displs[i]+counts[i]` of it. `InPlace` is valid at the
/// root and leaves its own block where it is.
pub fn scatterv<T: Element>(
    comm: &Comm,
    send: Option<View<'_, T>>,
    counts: &[usize],
    displs: &[usize],
    recv: RecvBuf<'_, T>,
    root: usize,
) -> Result<()> {
    let (p, me) = (comm.size(), comm.rank());
    ensure!(root < p, "root {root} out of range for {p} ranks");
    ensure!(me == root || matches!(recv, RecvBuf::Data(_)), "only the root may scatter in place");
    agree(comm, root, "scatter root")?;
    let tag = comm.next_tag();
    if me == root {
        check_vector(comm, counts, displs)?;
        let send = send.ok_or_else(|| contract("the scatter root needs a send buffer"))?;
        for i in (0..p).filter(|&i| i != root) {
            comm.send_units(i, tag, send, displs[i], counts[i])?;
        }
        if let RecvBuf::Data(dst) = recv {
            comm.self_copy(send.sub(displs[me], counts[me]), dst)?;
        }
    } else {
        let RecvBuf::Data(mut dst) = recv else {
            return Err(contract("only the root may scatter in place"));
        };
        let units = dst.count();
        comm.recv_units(root, tag, &mut dst, 0, units)?;
    }
    Ok(())
}

/// Linear gather; the inverse of [`scatterv`]. `recv` is used at the root
/// only, where `send` may be `InPlace`.
pub fn gatherv<T: Element>(
    comm: &Comm,
    send: SendBuf<'_, T>,
    recv: Option<crate::layout::ViewMut<'_, T>>,
    counts: &[usize],
    displs: &[usize],
    root: usize,
) -> Result<()> {
    let (p, me) = (comm.size(), comm.rank());
    ensure!(root < p, "root {root} out of range for {p} ranks");
    ensure!(me == root || !send.is_in_place(), "only the root may gather in place");
    agree(comm, root, "gather root")?;
    let tag = comm.next_tag();
    if me == root {
        check_vector(comm, counts, displs)?;
        let mut recv = recv.ok_or_else(|| contract("the gather root needs a receive buffer"))?;
        if let SendBuf::Data(src) = send {
            comm.self_copy(src, recv.sub_mut(displs[me], counts[me]))?;
        }
        for i in (0..p).filter(|&i| i != root) {
            comm.recv_units(i, tag, &mut recv, displs[i], counts[i])?;
        }
    } else {
        let SendBuf::Data(src) = send else {
            return Err(contract("only the root may gather in place"));
        };
        comm.send_units(root, tag, src, 0, src.count())?;
    }
    Ok(())
}

/// Regular scatter of `c` units per rank.
pub fn scatter<T: Element>(comm: &Comm, send: Option<View<'_, T>>, c: usize, recv: RecvBuf<'_, T>, root: usize) -> Result<()> {
    let p = comm.size();
    let counts = vec![c; p];
    let displs: Vec<usize> = (0..p).map(|i| i * c).collect();
    scatterv(comm, send, &counts, &displs, recv, root)
}

/// Regular gather of `c` units per rank.
pub fn gather<T: Element>(
    comm: &Comm,
    send: SendBuf<'_, T>,
    recv: Option<crate::layout::ViewMut<'_, T>>,
    c: usize,
    root: usize,
) -> Result<()> {
    let p = comm.size();
    let counts = vec![c; p];
    let displs: Vec<usize> = (0..p).map(|i| i * c).collect();
    gatherv(comm, send, recv, &counts, &displs, root)
}
