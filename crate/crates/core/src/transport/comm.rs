use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, Mutex};

use super::{CostLedger, Endpoint, RankTraffic};
use crate::element::{decode, encode, Element};
use crate::error::{contract, ensure, Error, Result};
use crate::layout::{self, CopyKind, View, ViewMut};
use crate::topology::LaneDecomposition;

/// Tags at or above this value belong to collectives and control traffic.
pub const COLLECTIVE_TAG: u32 = 1 << 31;

const WORLD_ID: u32 = 1;

struct CommInner {
    id: u32,
    rank: usize,
    /// World rank of each member, indexed by rank in this communicator.
    members: Arc<[usize]>,
    ep: Arc<Endpoint>,
    epoch: AtomicU32,
    splits: AtomicU32,
    lanes: Mutex<Option<Arc<LaneDecomposition>>>,
}

/// A rank's handle on an ordered group of endpoints.
///
/// Cloning is cheap and yields a handle on the same communicator (same
/// identity, same tag epoch, same cached decomposition).
#[derive(Clone)]
pub struct Comm {
    inner: Arc<CommInner>,
}

impl std::fmt::Debug for Comm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Comm")
            .field("id", &self.inner.id)
            .field("rank", &self.inner.rank)
            .field("size", &self.inner.members.len())
            .finish()
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn derive_id(parent: u32, seq: u32, color: u64) -> u32 {
    let h = mix(mix(((parent as u64) << 32) | seq as u64) ^ color);
    // 0 is reserved for bootstrap traffic, WORLD_ID for the world.
    ((h as u32) & !1).max(2)
}

fn words_to_bytes(words: &[u64]) -> Vec<u8> {
    encode(words)
}

impl Comm {
    pub(crate) fn world(ep: Arc<Endpoint>) -> Self {
        let members: Arc<[usize]> = (0..ep.size()).collect();
        let rank = ep.rank();
        Self::from_parts(WORLD_ID, rank, members, ep)
    }

    fn from_parts(id: u32, rank: usize, members: Arc<[usize]>, ep: Arc<Endpoint>) -> Self {
        Comm {
            inner: Arc::new(CommInner {
                id,
                rank,
                members,
                ep,
                epoch: AtomicU32::new(0),
                splits: AtomicU32::new(0),
                lanes: Mutex::new(None),
            }),
        }
    }

    pub fn rank(&self) -> usize {
        self.inner.rank
    }

    pub fn size(&self) -> usize {
        self.inner.members.len()
    }

    pub fn id(&self) -> u32 {
        self.inner.id
    }

    /// World rank of member `r`.
    pub fn world_rank_of(&self, r: usize) -> usize {
        self.inner.members[r]
    }

    pub fn world_rank(&self) -> usize {
        self.inner.ep.rank()
    }

    /// Node hosting member `r`.
    pub fn node_of(&self, r: usize) -> usize {
        self.inner.ep.nodes().node_of(self.inner.members[r])
    }

    /// Number of nodes of the whole fabric.
    pub fn fabric_nodes(&self) -> usize {
        self.inner.ep.nodes().nodes()
    }

    /// Number of split/dup calls made on this communicator so far.
    pub fn splits_performed(&self) -> u32 {
        self.inner.splits.load(Ordering::Relaxed)
    }

    pub(crate) fn lanes_slot(&self) -> &Mutex<Option<Arc<LaneDecomposition>>> {
        &self.inner.lanes
    }

    /// Draws the tag of the next collective call.
    pub(crate) fn next_tag(&self) -> u32 {
        COLLECTIVE_TAG | (self.inner.epoch.fetch_add(1, Ordering::Relaxed) & !COLLECTIVE_TAG)
    }

    fn check_peer(&self, r: usize) -> Result<()> {
        ensure!(r < self.size(), "rank {r} out of range for a communicator of size {}", self.size());
        ensure!(r != self.rank(), "rank {r} cannot message itself; use the self-copy path");
        Ok(())
    }

    fn post_bytes(&self, dst: usize, tag: u32, payload: Vec<u8>, elements: u64, counted: bool) -> Result<()> {
        self.check_peer(dst)?;
        self.inner.ep.post(self.inner.members[dst], self.inner.id, tag, payload, elements, counted)
    }

    fn fetch_bytes(&self, src: usize, tag: u32) -> Result<(Vec<u8>, u64)> {
        self.check_peer(src)?;
        let parcel = self.inner.ep.fetch(self.inner.members[src], self.inner.id, tag)?;
        Ok((parcel.payload, parcel.stamp))
    }

    fn decode_counted<T: Element>(&self, src: usize, bytes: &[u8], stamp: u64) -> Result<Vec<T>> {
        let data = decode::<T>(bytes)
            .ok_or_else(|| Error::Frame(format!("payload of {} bytes is not a whole number of elements", bytes.len())))?;
        self.inner.ep.account_receive(self.inner.members[src], data.len() as u64, stamp);
        Ok(data)
    }

    /// Sends units `first..first+units` of `src`.
    pub(crate) fn send_units<T: Element>(&self, dst: usize, tag: u32, src: View<'_, T>, first: usize, units: usize) -> Result<()> {
        let packed = src.pack_units(first, units, CopyKind::Marshal)?;
        let n = packed.len() as u64;
        self.post_bytes(dst, tag, encode(&packed), n, true)
    }

    pub(crate) fn send_slice<T: Element>(&self, dst: usize, tag: u32, data: &[T]) -> Result<()> {
        self.send_units(dst, tag, View::slice(data), 0, data.len())
    }

    /// Receives into units `first..first+units` of `dst`.
    pub(crate) fn recv_units<T: Element>(&self, src: usize, tag: u32, dst: &mut ViewMut<'_, T>, first: usize, units: usize) -> Result<()> {
        let (bytes, stamp) = self.fetch_bytes(src, tag)?;
        let data = self.decode_counted::<T>(src, &bytes, stamp)?;
        dst.unpack_units(first, units, &data)
    }

    pub(crate) fn recv_slice<T: Element>(&self, src: usize, tag: u32, dst: &mut [T]) -> Result<()> {
        let n = dst.len();
        self.recv_units(src, tag, &mut ViewMut::slice(dst), 0, n)
    }

    /// Receives a dense payload of any length.
    pub(crate) fn recv_vec<T: Element>(&self, src: usize, tag: u32) -> Result<Vec<T>> {
        let (bytes, stamp) = self.fetch_bytes(src, tag)?;
        let data = self.decode_counted::<T>(src, &bytes, stamp)?;
        layout::record_unpack(data.len());
        Ok(data)
    }

    fn check_user_tag(tag: u32) -> Result<()> {
        ensure!(tag < COLLECTIVE_TAG, "user tag {tag} collides with the collective tag space");
        Ok(())
    }

    /// Buffered send; returns once the payload is handed to the transport.
    pub fn send<T: Element>(&self, dst: usize, tag: u32, data: &[T]) -> Result<()> {
        Self::check_user_tag(tag)?;
        self.send_slice(dst, tag, data)
    }

    /// Blocks until the next message from `src` with `tag` arrives.
    pub fn recv<T: Element>(&self, src: usize, tag: u32) -> Result<Vec<T>> {
        Self::check_user_tag(tag)?;
        self.recv_vec(src, tag)
    }

    /// Sends to `dst` and receives from `src` without ordering the two.
    ///
    /// When both partners are the calling rank the payload is returned
    /// through the self-copy path.
    pub fn sendrecv<T: Element>(&self, dst: usize, data: &[T], src: usize, tag: u32) -> Result<Vec<T>> {
        Self::check_user_tag(tag)?;
        match (dst == self.rank(), src == self.rank()) {
            (true, true) => {
                let mut out = vec![T::zero(); data.len()];
                self.self_copy(View::slice(data), ViewMut::slice(&mut out))?;
                Ok(out)
            }
            (false, false) => {
                self.send_slice(dst, tag, data)?;
                self.recv_vec(src, tag)
            }
            _ => Err(contract("sendrecv may only involve the calling rank on both sides or on neither")),
        }
    }

    /// Local copy through the self-communication path, e.g. a permuting
    /// layout on one side. Counted in the ledger as self-copied elements.
    pub fn self_copy<T: Element>(&self, src: View<'_, T>, dst: ViewMut<'_, T>) -> Result<()> {
        let n = src.elements() as u64;
        layout::self_copy(src, dst)?;
        self.inner.ep.counters().on_self_copy(n);
        Ok(())
    }

    // ---- control plane (never counted) ----

    fn control_send(&self, dst: usize, tag: u32, words: &[u64]) -> Result<()> {
        self.post_bytes(dst, tag, words_to_bytes(words), 0, false)
    }

    fn control_recv(&self, src: usize, tag: u32) -> Result<Vec<u64>> {
        let (bytes, _) = self.fetch_bytes(src, tag)?;
        decode::<u64>(&bytes).ok_or_else(|| Error::Frame("control payload".into()))
    }

    /// Every rank's `words`, indexed by rank. Not counted in the ledger.
    pub(crate) fn control_allgather(&self, words: &[u64]) -> Result<Vec<Vec<u64>>> {
        let tag = self.next_tag();
        let (p, me) = (self.size(), self.rank());
        for off in 1..p {
            self.control_send((me + off) % p, tag, words)?;
        }
        let mut out = vec![Vec::new(); p];
        out[me] = words.to_vec();
        for off in 1..p {
            let src = (me + p - off) % p;
            out[src] = self.control_recv(src, tag)?;
        }
        Ok(out)
    }

    /// Largest `value` over all ranks. Not counted in the ledger.
    pub fn agree_max(&self, value: u64) -> Result<u64> {
        Ok(self.control_allgather(&[value])?.iter().map(|w| w[0]).max().unwrap_or(value))
    }

    /// Smallest and largest `value` over all ranks.
    pub fn agree_range(&self, value: u64) -> Result<(u64, u64)> {
        let all = self.control_allgather(&[value])?;
        let it = all.iter().map(|w| w[0]);
        Ok((it.clone().min().unwrap_or(value), it.max().unwrap_or(value)))
    }

    /// Dissemination barrier. Not counted in the ledger.
    pub fn barrier(&self) -> Result<()> {
        let tag = self.next_tag();
        let (p, me) = (self.size(), self.rank());
        let mut dist = 1;
        while dist < p {
            self.control_send((me + dist) % p, tag, &[])?;
            self.control_recv((me + p - dist) % p, tag)?;
            dist *= 2;
        }
        Ok(())
    }

    /// Partitions the communicator by `color`, ordering each part by
    /// `(key, rank)`. Ranks passing `None` get no communicator.
    pub fn split(&self, color: Option<u32>, key: u32) -> Result<Option<Comm>> {
        let seq = self.inner.splits.fetch_add(1, Ordering::Relaxed);
        let mine = color.map_or(0, |c| c as u64 + 1);
        let all = self.control_allgather(&[mine, key as u64])?;
        let Some(color) = color else { return Ok(None) };
        let mut part: Vec<(u64, usize)> =
            all.iter().enumerate().filter(|(_, w)| w[0] == mine).map(|(r, w)| (w[1], r)).collect();
        part.sort_unstable();
        let rank = part.iter().position(|&(_, r)| r == self.rank()).expect("caller is in its own part");
        let members: Arc<[usize]> = part.iter().map(|&(_, r)| self.inner.members[r]).collect();
        let id = derive_id(self.inner.id, seq, color as u64);
        Ok(Some(Comm::from_parts(id, rank, members, self.inner.ep.clone())))
    }

    /// A new communicator with the same group and a fresh identity.
    pub fn dup(&self) -> Result<Comm> {
        Ok(self.split(Some(0), self.rank() as u32)?.expect("every rank passes a color"))
    }

    /// The singleton communicator of the calling rank. Local, no traffic.
    pub fn self_comm(&self) -> Comm {
        let id = derive_id(self.inner.id, u32::MAX, (1 << 40) | self.world_rank() as u64);
        Comm::from_parts(id, 0, Arc::from([self.world_rank()]), self.inner.ep.clone())
    }

    /// Counters of every member. Collective; call at a quiescent point.
    pub fn ledger_snapshot(&self) -> Result<CostLedger> {
        let me = self.inner.ep.counters().snapshot(self.world_rank(), self.node_of(self.rank()));
        let all = self.control_allgather(&me.to_words())?;
        let ranks = all
            .iter()
            .map(|w| RankTraffic::from_words(w).ok_or_else(|| Error::Frame("ledger snapshot".into())))
            .collect::<Result<Vec<_>>>()?;
        let rounds = self.inner.ep.carries_stamps().then(|| ranks.iter().map(|r| r.clock).max().unwrap_or(0));
        Ok(CostLedger { ranks, nodes: self.fabric_nodes(), rounds })
    }

    /// Zeroes this rank's counters. Call on every rank between barriers.
    pub fn reset_ledger(&self) {
        self.inner.ep.counters().reset();
    }
}
