//! Uniform entry point over the ten collectives and their three
//! implementations, with reproducible inputs and oracle verification.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basecoll::{self, RecvBuf, SendBuf};
use crate::element::Element;
use crate::error::{contract, Error, Result};
use crate::layout::{View, ViewMut};
use crate::lanecoll::{self, Variant};
use crate::ops::ReduceOp;
use crate::transport::Comm;
use crate::{hiercoll, oracle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Collective {
    Bcast,
    Gather,
    Scatter,
    Allgather,
    Alltoall,
    Reduce,
    Allreduce,
    ReduceScatterBlock,
    Scan,
    Exscan,
}

impl Collective {
    pub const ALL: [Collective; 10] = [
        Collective::Bcast,
        Collective::Gather,
        Collective::Scatter,
        Collective::Allgather,
        Collective::Alltoall,
        Collective::Reduce,
        Collective::Allreduce,
        Collective::ReduceScatterBlock,
        Collective::Scan,
        Collective::Exscan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Collective::Bcast => "bcast",
            Collective::Gather => "gather",
            Collective::Scatter => "scatter",
            Collective::Allgather => "allgather",
            Collective::Alltoall => "alltoall",
            Collective::Reduce => "reduce",
            Collective::Allreduce => "allreduce",
            Collective::ReduceScatterBlock => "reduce_scatter_block",
            Collective::Scan => "scan",
            Collective::Exscan => "exscan",
        }
    }

    pub fn is_rooted(self) -> bool {
        matches!(self, Collective::Bcast | Collective::Gather | Collective::Scatter | Collective::Reduce)
    }

    pub fn is_reduction(self) -> bool {
        matches!(
            self,
            Collective::Reduce | Collective::Allreduce | Collective::ReduceScatterBlock | Collective::Scan | Collective::Exscan
        )
    }

    /// Whether an `InPlace` send buffer is accepted.
    pub fn has_in_place(self) -> bool {
        matches!(
            self,
            Collective::Allgather
                | Collective::Reduce
                | Collective::Allreduce
                | Collective::ReduceScatterBlock
                | Collective::Scan
                | Collective::Exscan
        )
    }

    pub fn implementations(self) -> &'static [Impl] {
        match self {
            Collective::Alltoall => &[Impl::Base, Impl::Lane],
            _ => &[Impl::Base, Impl::Lane, Impl::Hier],
        }
    }

    /// Send and receive buffer lengths for a count of `c` on `p` ranks.
    /// Per-rank collectives count `c` per rank.
    pub fn buffer_lens(self, p: usize, c: usize, rank: usize, root: usize) -> (usize, usize) {
        let at_root = |len: usize| if rank == root { len } else { 0 };
        match self {
            Collective::Bcast => (c, c),
            Collective::Gather => (c, at_root(p * c)),
            Collective::Scatter => (at_root(p * c), c),
            Collective::Allgather => (c, p * c),
            Collective::Alltoall => (p * c, p * c),
            Collective::Reduce => (c, at_root(c)),
            Collective::Allreduce | Collective::Scan | Collective::Exscan => (c, c),
            Collective::ReduceScatterBlock => (p * c, c),
        }
    }
}

impl fmt::Display for Collective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Collective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Collective::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| contract(format!("unknown collective {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Impl {
    Base,
    Lane,
    Hier,
}

impl Impl {
    pub const ALL: [Impl; 3] = [Impl::Base, Impl::Lane, Impl::Hier];

    pub fn name(self) -> &'static str {
        match self {
            Impl::Base => "base",
            Impl::Lane => "lane",
            Impl::Hier => "hier",
        }
    }
}

impl fmt::Display for Impl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Impl {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Impl::ALL.into_iter().find(|i| i.name() == s).ok_or_else(|| contract(format!("unknown implementation {s:?}")))
    }
}

/// Reduction operators selectable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Sum,
    Max,
    Min,
    Prod,
}

impl OpKind {
    pub fn op<T: Element>(self) -> ReduceOp<T> {
        match self {
            OpKind::Sum => ReduceOp::sum(),
            OpKind::Max => ReduceOp::max(),
            OpKind::Min => ReduceOp::min(),
            OpKind::Prod => ReduceOp::prod(),
        }
    }
}

/// One collective invocation, identical on every rank.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Case {
    pub coll: Collective,
    pub imp: Impl,
    pub count: usize,
    pub root: usize,
    pub op: OpKind,
    pub in_place: bool,
    pub variant: Variant,
}

impl Case {
    pub fn new(coll: Collective, imp: Impl, count: usize) -> Self {
        Case { coll, imp, count, root: 0, op: OpKind::Sum, in_place: false, variant: Variant::Irregular }
    }

    pub fn root(self, root: usize) -> Self {
        Case { root, ..self }
    }

    pub fn op(self, op: OpKind) -> Self {
        Case { op, ..self }
    }

    pub fn in_place(self, in_place: bool) -> Self {
        Case { in_place, ..self }
    }

    pub fn variant(self, variant: Variant) -> Self {
        Case { variant, ..self }
    }
}

/// Marker left in receive buffers before a call, so untouched buffers are
/// recognisable.
pub fn sentinel<T: Element>() -> T {
    T::max_value()
}

/// Reproducible send buffers for all `p` ranks, drawn from `0..100`.
/// Integer reductions wrap, so results compare exactly.
pub fn generate_inputs<T: Element>(coll: Collective, p: usize, count: usize, root: usize, seed: u64) -> Vec<Vec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((p as u64) << 32) ^ (count as u64) << 8 ^ coll as u64);
    (0..p)
        .map(|rank| {
            // scatter inputs are full size everywhere so any rank can act as root
            let len = match coll {
                Collective::Scatter => p * count,
                _ => coll.buffer_lens(p, count, rank, root).0,
            };
            (0..len).map(|_| T::from(rng.random_range(0u32..100)).expect("small values fit every element type")).collect()
        })
        .collect()
}

/// The receive buffer a rank starts with.
pub fn initial_recv<T: Element>(case: &Case, p: usize, rank: usize) -> Vec<T> {
    vec![sentinel(); case.coll.buffer_lens(p, case.count, rank, case.root).1]
}

/// Runs `case` on `comm` with this rank's `input`, writing into `recv`.
/// With `case.in_place` the input is first placed where the collective
/// expects it inside `recv`.
pub fn run_case<T: Element>(comm: &Comm, case: &Case, input: &[T], recv: &mut [T]) -> Result<()> {
    let (p, me) = (comm.size(), comm.rank());
    let c = case.count;
    let op = case.op.op::<T>();
    let root = case.root;
    let in_place = case.in_place && case.coll.has_in_place() && (case.coll != Collective::Reduce || me == root);
    if in_place {
        match case.coll {
            Collective::Allgather => recv[me * c..(me + 1) * c].copy_from_slice(&input[..c]),
            Collective::ReduceScatterBlock => return run_rsb_in_place(comm, case, input, recv, &op),
            _ => recv[..c].copy_from_slice(&input[..c]),
        }
    }
    let send = if in_place { SendBuf::InPlace } else { SendBuf::slice(input) };
    let v = case.variant;
    match (case.coll, case.imp) {
        (Collective::Bcast, imp) => {
            recv[..c].copy_from_slice(&input[..c]);
            match imp {
                Impl::Base => basecoll::bcast(comm, &mut recv[..c], root),
                Impl::Lane => lanecoll::bcast_lane_with(comm, &mut recv[..c], root, v),
                Impl::Hier => hiercoll::bcast_hier(comm, &mut recv[..c], root),
            }
        }
        (Collective::Gather, imp) => {
            let r = (me == root).then_some(recv);
            match imp {
                Impl::Base => basecoll::gather(comm, send, r.map(ViewMut::slice), c, root),
                Impl::Lane => lanecoll::gather_lane(comm, input, r, c, root),
                Impl::Hier => hiercoll::gather_hier(comm, input, r, c, root),
            }
        }
        (Collective::Scatter, imp) => {
            let s = (me == root).then_some(input);
            match imp {
                Impl::Base => basecoll::scatter(comm, s.map(View::slice), c, RecvBuf::slice(recv), root),
                Impl::Lane => lanecoll::scatter_lane(comm, s, recv, c, root),
                Impl::Hier => hiercoll::scatter_hier(comm, s, recv, c, root),
            }
        }
        (Collective::Allgather, Impl::Base) => basecoll::allgather(comm, send, ViewMut::slice(&mut recv[..p * c]), c),
        (Collective::Allgather, Impl::Lane) => lanecoll::allgather_lane(comm, send, recv, c),
        (Collective::Allgather, Impl::Hier) => hiercoll::allgather_hier(comm, send, recv, c),
        (Collective::Alltoall, Impl::Base) => {
            basecoll::alltoall(comm, View::slice(&input[..p * c]), c, ViewMut::slice(&mut recv[..p * c]), c)
        }
        (Collective::Alltoall, Impl::Lane) => lanecoll::alltoall_lane(comm, input, recv, c),
        (Collective::Alltoall, Impl::Hier) => Err(contract("there is no hierarchical alltoall")),
        (Collective::Reduce, imp) => {
            let r = (me == root).then_some(recv);
            match imp {
                Impl::Base => basecoll::reduce(comm, send, r, c, &op, root),
                Impl::Lane => lanecoll::reduce_lane(comm, send, r, c, &op, root),
                Impl::Hier => hiercoll::reduce_hier(comm, send, r, c, &op, root),
            }
        }
        (Collective::Allreduce, Impl::Base) => basecoll::allreduce(comm, send, recv, c, &op),
        (Collective::Allreduce, Impl::Lane) => lanecoll::allreduce_lane_with(comm, send, recv, c, &op, v),
        (Collective::Allreduce, Impl::Hier) => hiercoll::allreduce_hier(comm, send, recv, c, &op),
        (Collective::ReduceScatterBlock, Impl::Base) => basecoll::reduce_scatter_block(comm, send, recv, c, &op),
        (Collective::ReduceScatterBlock, Impl::Lane) => lanecoll::reduce_scatter_block_lane(comm, send, recv, c, &op),
        (Collective::ReduceScatterBlock, Impl::Hier) => hiercoll::reduce_scatter_block_hier(comm, send, recv, c, &op),
        (Collective::Scan, Impl::Base) => basecoll::scan(comm, send, recv, c, &op),
        (Collective::Scan, Impl::Lane) => lanecoll::scan_lane_with(comm, send, recv, c, &op, v),
        (Collective::Scan, Impl::Hier) => hiercoll::scan_hier(comm, send, recv, c, &op),
        (Collective::Exscan, Impl::Base) => basecoll::exscan(comm, send, recv, c, &op),
        (Collective::Exscan, Impl::Lane) => lanecoll::exscan_lane_with(comm, send, recv, c, &op, v),
        (Collective::Exscan, Impl::Hier) => hiercoll::exscan_hier(comm, send, recv, c, &op),
    }
}

/// In-place reduce-scatter needs the whole input in the receive buffer.
fn run_rsb_in_place<T: Element>(comm: &Comm, case: &Case, input: &[T], recv: &mut [T], op: &ReduceOp<T>) -> Result<()> {
    let c = case.count;
    let mut buf = input[..comm.size() * c].to_vec();
    match case.imp {
        Impl::Base => basecoll::reduce_scatter_block(comm, SendBuf::InPlace, &mut buf, c, op)?,
        Impl::Lane => lanecoll::reduce_scatter_block_lane(comm, SendBuf::InPlace, &mut buf, c, op)?,
        Impl::Hier => hiercoll::reduce_scatter_block_hier(comm, SendBuf::InPlace, &mut buf, c, op)?,
    }
    recv[..c].copy_from_slice(&buf[..c]);
    Ok(())
}

/// Expected receive buffers for every rank, with the initial contents
/// wherever the collective leaves the buffer alone.
pub fn expected<T: Element>(case: &Case, inputs: &[Vec<T>]) -> Vec<Vec<T>> {
    let (p, c, root) = (inputs.len(), case.count, case.root);
    let op = case.op.op::<T>();
    let out = match case.coll {
        Collective::Bcast => oracle::bcast(inputs, c, root),
        Collective::Gather => oracle::gather(inputs, c, root),
        Collective::Scatter => oracle::scatter(inputs, c, root),
        Collective::Allgather => oracle::allgather(inputs, c),
        Collective::Alltoall => oracle::alltoall(inputs, c),
        Collective::Reduce => oracle::reduce(inputs, c, &op, root),
        Collective::Allreduce => oracle::allreduce(inputs, c, &op),
        Collective::ReduceScatterBlock => oracle::reduce_scatter_block(inputs, c, &op),
        Collective::Scan => oracle::scan(inputs, c, &op),
        Collective::Exscan => oracle::exscan(inputs, c, &op),
    };
    out.into_iter()
        .enumerate()
        .map(|(rank, want)| {
            let mut init = initial_recv::<T>(case, p, rank);
            if let Some(w) = want {
                init[..w.len()].copy_from_slice(&w);
            } else if case.in_place && case.coll == Collective::Exscan {
                // rank 0 keeps what it placed in the buffer
                init[..c].copy_from_slice(&inputs[rank][..c]);
            }
            init
        })
        .collect()
}

/// Runs `case` on this rank and compares against the oracle. Every rank
/// must pass the same `inputs`.
pub fn verify_case<T: Element>(comm: &Comm, case: &Case, inputs: &[Vec<T>]) -> Result<bool> {
    let me = comm.rank();
    let mut recv = initial_recv::<T>(case, comm.size(), me);
    run_case(comm, case, &inputs[me], &mut recv)?;
    Ok(recv == expected(case, inputs)[me])
}
