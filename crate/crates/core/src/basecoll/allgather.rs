use super::{check_vector, SendBuf};
use crate::element::Element;
use crate::error::Result;
use crate::layout::ViewMut;
use crate::transport::Comm;

/// Ring allgather. Rank `i`'s contribution lands in units
/// `displs[i]..displs[i]+counts[i]` of `recv` everywhere. With `InPlace`
/// the contribution is already there and is not copied.
///
/// Each rank receives exactly `sum(counts) - counts[rank]` elements.
pub fn allgatherv<T: Element>(
    comm: &Comm,
    send: SendBuf<'_, T>,
    mut recv: ViewMut<'_, T>,
    counts: &[usize],
    displs: &[usize],
) -> Result<()> {
    check_vector(comm, counts, displs)?;
    let (p, me) = (comm.size(), comm.rank());
    let tag = comm.next_tag();
    if let SendBuf::Data(src) = send {
        comm.self_copy(src, recv.sub_mut(displs[me], counts[me]))?;
    }
    let (right, left) = ((me + 1) % p, (me + p - 1) % p);
    for s in 0..p.saturating_sub(1) {
        let out = (me + p - s) % p;
        let inc = (me + 2 * p - s - 1) % p;
        comm.send_units(right, tag, recv.as_view(), displs[out], counts[out])?;
        comm.recv_units(left, tag, &mut recv, displs[inc], counts[inc])?;
    }
    Ok(())
}

/// Regular allgather of `c` units per rank.
pub fn allgather<T: Element>(comm: &Comm, send: SendBuf<'_, T>, recv: ViewMut<'_, T>, c: usize) -> Result<()> {
    let p = comm.size();
    let counts = vec![c; p];
    let displs: Vec<usize> = (0..p).map(|i| i * c).collect();
    allgatherv(comm, send, recv, &counts, &displs)
}
