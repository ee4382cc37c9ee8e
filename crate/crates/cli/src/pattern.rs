//! Lane pattern: every node exchanges `c` elements with its neighbours,
//! split over the first `k` processes of the node.

use lanecoll::{Comm, Int};

use crate::error::Result;

const TAG: u32 = 17;

/// Destination and source of `rank`: the same position on the next and
/// the previous node.
pub fn partners(rank: usize, n: usize, p: usize) -> (usize, usize) {
    ((rank + n) % p, (rank + p - n % p) % p)
}

/// Elements sent by each of the `k` active processes: `c/k` each, with the
/// remainder on the first.
pub fn lane_counts(c: usize, k: usize) -> Vec<usize> {
    let mut counts = vec![c / k; k];
    counts[0] += c % k;
    counts
}

/// Elements the process at `noderank` sends per exchange.
pub fn count_for(noderank: usize, c: usize, k: usize) -> usize {
    if noderank < k {
        lane_counts(c, k)[noderank]
    } else {
        0
    }
}

/// One repetition: `iters` blocking exchanges without barriers.
pub fn exchange(comm: &Comm, n: usize, c: usize, k: usize, iters: usize, buf: &[Int]) -> Result<()> {
    let (rank, p) = (comm.rank(), comm.size());
    let mine = count_for(rank % n, c, k);
    if mine == 0 {
        return Ok(());
    }
    let (dst, src) = partners(rank, n, p);
    for _ in 0..iters {
        comm.sendrecv(dst, &buf[..mine], src, TAG)?;
    }
    Ok(())
}
