use crate::element::Element;
use crate::error::{ensure, Result};
use crate::layout::{View, ViewMut};
use crate::transport::Comm;

/// Pairwise-exchange alltoall in `p-1` rounds: in round `s` rank `r` sends
/// to `r+s` and receives from `r-s`. Block `j` of `send` (`send_units`
/// units) goes to rank `j`; the block from rank `i` fills units
/// `i*recv_units..` of `recv`.
pub fn alltoall<T: Element>(
    comm: &Comm,
    send: View<'_, T>,
    send_units: usize,
    mut recv: ViewMut<'_, T>,
    recv_units: usize,
) -> Result<()> {
    let (p, me) = (comm.size(), comm.rank());
    ensure!(
        send_units * send.layout().size() == recv_units * recv.layout().size(),
        "alltoall blocks differ in size"
    );
    send.sub(0, p * send_units).validate()?;
    let tag = comm.next_tag();
    comm.self_copy(send.sub(me * send_units, send_units), recv.sub_mut(me * recv_units, recv_units))?;
    for s in 1..p {
        let (dst, src) = ((me + s) % p, (me + p - s) % p);
        comm.send_units(dst, tag, send, dst * send_units, send_units)?;
        comm.recv_units(src, tag, &mut recv, src * recv_units, recv_units)?;
    }
    Ok(())
}
