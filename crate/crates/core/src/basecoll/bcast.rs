use super::agree;
use crate::element::Element;
use crate::error::{ensure, Result};
use crate::transport::Comm;

/// Binomial-tree broadcast of `buf` from `root`; `ceil(log2 p)` rounds.
pub fn bcast<T: Element>(comm: &Comm, buf: &mut [T], root: usize) -> Result<()> {
    let p = comm.size();
    ensure!(root < p, "root {root} out of range for {p} ranks");
    agree(comm, root, "broadcast root")?;
    let tag = comm.next_tag();
    let vr = (comm.rank() + p - root) % p;
    let mut mask = 1;
    while mask < p {
        if vr & mask != 0 {
            comm.recv_slice((vr - mask + root) % p, tag, buf)?;
            break;
        }
        mask <<= 1;
    }
    mask >>= 1;
    while mask > 0 {
        if vr + mask < p {
            comm.send_slice((vr + mask + root) % p, tag, buf)?;
        }
        mask >>= 1;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basecoll::testutil::on_world;

    #[test]
    fn small_broadcasts() {
        let (out, _) = on_world(4, |c| {
            let mut b = if c.rank() == 0 { vec![7, 8] } else { vec![0, 0] };
            bcast(c, &mut b, 0).unwrap();
            b
        });
        assert!(out.iter().all(|b| b == &[7, 8]));
        let (out, _) = on_world(1, |c| {
            let mut b = vec![3];
            bcast(c, &mut b, 0).unwrap();
            b
        });
        assert_eq!(out, vec![vec![3]]);
    }

    #[test]
    fn any_root_any_size() {
        for p in 1..=9 {
            for root in 0..p {
                let (out, ledger) = on_world(p, |c| {
                    let mut b: Vec<i64> = if c.rank() == root { (0..5).map(|x| x * 31 + root as i64).collect() } else { vec![0; 5] };
                    bcast(c, &mut b, root).unwrap();
                    b
                });
                let want: Vec<i64> = (0..5).map(|x| x * 31 + root as i64).collect();
                assert!(out.iter().all(|b| b == &want), "p={p} root={root}");
                assert_eq!(ledger.total_received(), 5 * (p as u64 - 1));
                let log = usize::BITS - (p - 1).leading_zeros();
                assert!(ledger.rounds.unwrap() <= log as u64);
            }
        }
    }

    #[test]
    fn inconsistent_root_is_detected_when_checking() {
        if !crate::basecoll::consistency_checks() {
            return;
        }
        let (out, _) = on_world(3, |c| {
            let mut b = vec![0i32];
            bcast(c, &mut b, c.rank().min(1))
        });
        assert!(out.iter().all(|r| r.is_err()));
    }
}
