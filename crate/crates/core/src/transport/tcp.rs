//! TCP fabric: one connection per rank pair, one reader thread per peer.
//!
//! Bootstrap: rank 0 listens on the rendezvous address. Every other rank
//! opens its own data listener, registers that address with rank 0 and
//! receives the full address table back. Each rank then connects to every
//! lower rank and announces itself with a hello frame, and accepts one
//! connection from every higher rank.

use std::io::{BufReader, BufWriter, Write};
use std::net::{IpAddr, Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use super::wire::{read_frame, write_frame};
use super::{Comm, Endpoint, Link, Mailbox, MatchKey, Parcel};
use crate::error::{Error, Result};
use crate::topology::NodeMap;

/// Environment variable holding the rendezvous `host:port`.
pub const RENDEZVOUS_ENV: &str = "LANECOLL_RENDEZVOUS";

const BOOT_COMM: u32 = 0;
const TAG_REGISTER: u32 = 1;
const TAG_TABLE: u32 = 2;
const TAG_HELLO: u32 = 3;
const CONNECT_TIMEOUT: Duration = Duration::from_secs(30);

struct Peer {
    writer: Mutex<BufWriter<TcpStream>>,
    stream: TcpStream,
}

struct TcpLink {
    rank: usize,
    own: Arc<Mailbox>,
    peers: Vec<Option<Peer>>,
}

impl Link for TcpLink {
    fn deliver(&self, dst: usize, key: MatchKey, parcel: Parcel) -> Result<()> {
        if dst == self.rank {
            self.own.post(key, parcel);
            return Ok(());
        }
        let peer = self.peers[dst].as_ref().ok_or(Error::Disconnected { peer: dst })?;
        let mut w = peer.writer.lock().unwrap_or_else(|e| e.into_inner());
        write_frame(&mut *w, key.comm, key.tag, key.src, &parcel.payload)
            .and_then(|_| w.flush())
            .map_err(|e| Error::Transport(format!("send to rank {dst}: {e}")))
    }

    fn carries_stamps(&self) -> bool {
        false
    }
}

impl Drop for TcpLink {
    fn drop(&mut self) {
        for peer in self.peers.iter().flatten() {
            if let Ok(mut w) = peer.writer.lock() {
                let _ = w.flush();
            }
            let _ = peer.stream.shutdown(Shutdown::Write);
        }
    }
}

fn connect_retry(addr: SocketAddr) -> Result<TcpStream> {
    let start = Instant::now();
    let mut wait = Duration::from_millis(5);
    loop {
        match TcpStream::connect(addr) {
            Ok(s) => {
                s.set_nodelay(true)?;
                return Ok(s);
            }
            Err(_) if start.elapsed() < CONNECT_TIMEOUT => {
                std::thread::sleep(wait);
                wait = (wait * 2).min(Duration::from_millis(200));
            }
            Err(e) => return Err(Error::Transport(format!("connect to {addr}: {e}"))),
        }
    }
}

fn resolve(addr: &str) -> Result<SocketAddr> {
    addr.to_socket_addrs()?
        .next()
        .ok_or_else(|| Error::Transport(format!("cannot resolve {addr}")))
}

fn expect_frame(stream: &mut TcpStream, tag: u32) -> Result<super::wire::Frame> {
    let frame = read_frame(stream)?.ok_or_else(|| Error::Transport("bootstrap stream closed".into()))?;
    if frame.comm_id != BOOT_COMM || frame.tag != tag {
        return Err(Error::Frame(format!("unexpected bootstrap frame tag {}", frame.tag)));
    }
    Ok(frame)
}

/// Joins the fabric as `rank`. Rank 0 binds `rendezvous` itself.
pub fn join(rank: usize, nodes: NodeMap, rendezvous: &str) -> Result<Comm> {
    let addr = resolve(rendezvous)?;
    if rank == 0 {
        host(TcpListener::bind(addr)?, nodes)
    } else {
        let mut boot = connect_retry(addr)?;
        let ip = boot.local_addr()?.ip();
        let data = TcpListener::bind((ip, 0))?;
        let me = data.local_addr()?.to_string();
        write_frame(&mut boot, BOOT_COMM, TAG_REGISTER, rank as u32, me.as_bytes())?;
        let table = expect_frame(&mut boot, TAG_TABLE)?;
        let table = parse_table(&table.payload, nodes.len())?;
        wire_up(rank, nodes, data, &table)
    }
}

/// Rank 0 on an already bound rendezvous listener.
pub fn host(rendezvous: TcpListener, nodes: NodeMap) -> Result<Comm> {
    let p = nodes.len();
    let ip: IpAddr = rendezvous.local_addr()?.ip();
    let data = TcpListener::bind((ip, 0))?;
    let mut table = vec![String::new(); p];
    table[0] = data.local_addr()?.to_string();
    let mut boots = Vec::with_capacity(p.saturating_sub(1));
    while boots.len() + 1 < p {
        let (mut s, _) = rendezvous.accept()?;
        let reg = expect_frame(&mut s, TAG_REGISTER)?;
        let r = reg.src as usize;
        if r == 0 || r >= p || !table[r].is_empty() {
            return Err(Error::Transport(format!("bad registration from rank {r}")));
        }
        table[r] = String::from_utf8(reg.payload).map_err(|_| Error::Frame("registration address".into()))?;
        boots.push(s);
    }
    let joined = table.join("\n");
    for s in &mut boots {
        write_frame(s, BOOT_COMM, TAG_TABLE, 0, joined.as_bytes())?;
    }
    let table = parse_table(joined.as_bytes(), p)?;
    wire_up(0, nodes, data, &table)
}

fn parse_table(payload: &[u8], p: usize) -> Result<Vec<SocketAddr>> {
    let text = std::str::from_utf8(payload).map_err(|_| Error::Frame("address table".into()))?;
    let table = text
        .split('\n')
        .map(|a| a.parse::<SocketAddr>().map_err(|_| Error::Frame(format!("address {a:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if table.len() != p {
        return Err(Error::Frame(format!("address table has {} entries, expected {p}", table.len())));
    }
    Ok(table)
}

fn wire_up(rank: usize, nodes: NodeMap, data: TcpListener, table: &[SocketAddr]) -> Result<Comm> {
    let p = nodes.len();
    let mut streams: Vec<Option<TcpStream>> = (0..p).map(|_| None).collect();
    for (q, addr) in table.iter().enumerate().take(rank) {
        let mut s = connect_retry(*addr)?;
        write_frame(&mut s, BOOT_COMM, TAG_HELLO, rank as u32, &[])?;
        streams[q] = Some(s);
    }
    for _ in rank + 1..p {
        let (mut s, _) = data.accept()?;
        s.set_nodelay(true)?;
        let hello = expect_frame(&mut s, TAG_HELLO)?;
        let q = hello.src as usize;
        if q <= rank || q >= p || streams[q].is_some() {
            return Err(Error::Transport(format!("unexpected hello from rank {q}")));
        }
        streams[q] = Some(s);
    }

    let own = Arc::new(Mailbox::default());
    let mut peers = Vec::with_capacity(p);
    for (q, s) in streams.into_iter().enumerate() {
        let Some(s) = s else {
            peers.push(None);
            continue;
        };
        let mut reader = BufReader::new(s.try_clone()?);
        let mailbox = own.clone();
        std::thread::Builder::new().name(format!("tcp-reader-{rank}-{q}")).spawn(move || loop {
            match read_frame(&mut reader) {
                Ok(Some(f)) => mailbox.post(
                    MatchKey { comm: f.comm_id, src: f.src, tag: f.tag },
                    Parcel { payload: f.payload, stamp: 0 },
                ),
                Ok(None) => {
                    mailbox.close_peer(q as u32);
                    break;
                }
                Err(e) => {
                    mailbox.close_peer(q as u32);
                    mailbox.fail(&format!("link to rank {q}: {e}"));
                    break;
                }
            }
        })?;
        peers.push(Some(Peer { writer: Mutex::new(BufWriter::new(s.try_clone()?)), stream: s }));
    }
    let nodes = Arc::new(nodes);
    let link: Arc<dyn Link> = Arc::new(TcpLink { rank, own: own.clone(), peers });
    Ok(Comm::world(Arc::new(Endpoint::new(rank, nodes, link, own))))
}

/// Runs every rank of a loopback TCP fabric on a thread of this process.
///
/// The transport is real sockets; only the process boundary is missing.
pub fn run_local<R, F>(nodes: NodeMap, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(Comm) -> R + Sync,
{
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?.to_string();
    let p = nodes.len();
    let f = &f;
    let mut listener = Some(listener);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..p)
            .map(|rank| {
                let nodes = nodes.clone();
                let addr = addr.clone();
                let l = if rank == 0 { listener.take() } else { None };
                s.spawn(move || -> Result<R> {
                    let comm = match l {
                        Some(l) => host(l, nodes)?,
                        None => join(rank, nodes, &addr)?,
                    };
                    let out = f(comm.clone());
                    // Keep every link open until all ranks are done with it.
                    comm.barrier()?;
                    Ok(out)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|e| std::panic::resume_unwind(e)))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loopback_echo_and_ledger() {
        let out = run_local(NodeMap::blocks(2, 2), |comm| {
            let p = comm.size();
            let r = comm.rank();
            let got = comm.sendrecv((r + 1) % p, &[r as i32, -1], (r + p - 1) % p, 5).unwrap();
            comm.barrier().unwrap();
            (got, comm.ledger_snapshot().unwrap())
        })
        .unwrap();
        assert_eq!(out[2].0, vec![1, -1]);
        let l = &out[0].1;
        assert_eq!(l.rounds, None);
        assert_eq!(l.total_sent(), 8);
        assert!(l.is_conserved());
        assert_eq!(l.node_ingress(1), 2);
    }

    #[test]
    fn single_rank_needs_no_peers() {
        let out = run_local(NodeMap::blocks(1, 1), |comm| comm.size()).unwrap();
        assert_eq!(out, vec![1]);
    }
}
