//! Node placement and the node/lane decomposition of a communicator.
//!
//! On a regular, consecutively ranked communicator with `n` processes on
//! each of `N` nodes, rank `r = j*n + i` lives on node `j` at node-local
//! position `i`. Its `nodecomm` holds the `n` ranks of node `j`, its
//! `lanecomm` the `N` ranks with node-local position `i`.

use std::sync::Arc;

use crate::error::{contract, ensure, Result};
use crate::transport::Comm;

/// Assignment of world ranks to nodes (declared by configuration).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeMap {
    node_of: Vec<usize>,
    nodes: usize,
}

impl NodeMap {
    /// `nodes` nodes with `ppn` consecutively ranked processes each.
    pub fn blocks(nodes: usize, ppn: usize) -> Self {
        Self { node_of: (0..nodes * ppn).map(|r| r / ppn.max(1)).collect(), nodes }
    }

    /// Consecutive blocks of the given sizes.
    pub fn uneven(sizes: &[usize]) -> Self {
        let node_of = sizes.iter().enumerate().flat_map(|(j, &s)| std::iter::repeat_n(j, s)).collect();
        Self { node_of, nodes: sizes.len() }
    }

    /// Explicit node id per world rank; ids must be `0..K` with no gaps.
    pub fn from_assignment(node_of: Vec<usize>) -> Result<Self> {
        let nodes = node_of.iter().max().map_or(0, |&m| m + 1);
        for j in 0..nodes {
            ensure!(node_of.contains(&j), "node {j} hosts no process");
        }
        Ok(Self { node_of, nodes })
    }

    pub fn len(&self) -> usize {
        self.node_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_of.is_empty()
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn node_of(&self, rank: usize) -> usize {
        self.node_of[rank]
    }

    pub fn members(&self, node: usize) -> Vec<usize> {
        (0..self.len()).filter(|&r| self.node_of[r] == node).collect()
    }
}

/// `p` processes over `nodes` nodes with `ppn` processes each.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WorldShape {
    pub p: usize,
    pub nodes: usize,
    pub ppn: usize,
}

impl WorldShape {
    pub fn regular(nodes: usize, ppn: usize) -> Self {
        Self { p: nodes * ppn, nodes, ppn }
    }

    /// A shape as declared by a caller; may be inconsistent (`p != n*N`),
    /// in which case decomposition falls back to the irregular layout.
    pub fn declared(p: usize, ppn: usize) -> Self {
        Self { p, nodes: p.div_ceil(ppn.max(1)), ppn }
    }

    pub fn is_consistent(&self) -> bool {
        self.ppn >= 1 && self.nodes >= 1 && self.p == self.nodes * self.ppn
    }
}

/// Position of a rank in the decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankCoords {
    pub rank: usize,
    /// Rank in `nodecomm` (`i`).
    pub noderank: usize,
    /// Rank in `lanecomm` (`j`).
    pub lanerank: usize,
}

/// The node and lane communicators of a parent communicator.
#[derive(Clone, Debug)]
pub struct LaneDecomposition {
    pub parent_id: u32,
    pub shape: WorldShape,
    pub coords: RankCoords,
    pub nodecomm: Comm,
    pub lanecomm: Comm,
    pub regular: bool,
}

impl LaneDecomposition {
    /// Processes per node as seen by the algorithms (`nodecomm` size).
    pub fn n(&self) -> usize {
        self.nodecomm.size()
    }

    /// Node count as seen by the algorithms (`lanecomm` size).
    pub fn big_n(&self) -> usize {
        self.lanecomm.size()
    }
}

/// `(rootnode, noderoot)` of `root`: its lane rank and node rank.
pub fn root_coords(root: usize, p: usize, n: usize) -> Result<(usize, usize)> {
    ensure!(root < p, "root {root} out of range for {p} processes");
    ensure!(n >= 1, "node size must be positive");
    Ok((root / n, root % n))
}

/// Splits `count` into `parts` blocks of `count/parts`, the remainder going
/// to the last block, together with the prefix-sum displacements.
pub fn partition_counts(count: usize, parts: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    if parts == 0 {
        return Err(contract("cannot partition into zero parts"));
    }
    let block = count / parts;
    let mut counts = vec![block; parts];
    counts[parts - 1] += count % parts;
    let displs = counts
        .iter()
        .scan(0, |acc, &c| {
            let d = *acc;
            *acc += c;
            Some(d)
        })
        .collect();
    Ok((counts, displs))
}

/// Whether `node_ids` (indexed by rank) places exactly `ppn` consecutive
/// ranks on each node, every node hosting one block.
fn is_regular(node_ids: &[u64], shape: &WorldShape) -> bool {
    if !shape.is_consistent() || node_ids.len() != shape.p {
        return false;
    }
    let n = shape.ppn;
    let mut seen = std::collections::HashSet::new();
    node_ids.chunks(n).all(|block| block.iter().all(|&x| x == block[0]) && seen.insert(block[0]))
}

fn build(comm: &Comm, shape: Option<WorldShape>) -> Result<LaneDecomposition> {
    let me = comm.node_of(comm.rank()) as u64;
    let ids: Vec<u64> = comm.control_allgather(&[me])?.into_iter().map(|w| w[0]).collect();
    let shape = shape.unwrap_or_else(|| {
        let ppn = ids.iter().filter(|&&x| x == ids[0]).count();
        WorldShape::declared(comm.size(), ppn)
    });
    ensure!(shape.p == comm.size(), "shape declares {} processes, communicator has {}", shape.p, comm.size());
    let r = comm.rank();
    if is_regular(&ids, &shape) {
        let n = shape.ppn;
        let (i, j) = (r % n, r / n);
        let nodecomm = comm.split(Some(j as u32), r as u32)?.expect("colored");
        let lanecomm = comm.split(Some(i as u32), r as u32)?.expect("colored");
        Ok(LaneDecomposition {
            parent_id: comm.id(),
            shape,
            coords: RankCoords { rank: r, noderank: i, lanerank: j },
            nodecomm,
            lanecomm,
            regular: true,
        })
    } else {
        Ok(LaneDecomposition {
            parent_id: comm.id(),
            shape,
            coords: RankCoords { rank: r, noderank: 0, lanerank: r },
            nodecomm: comm.self_comm(),
            lanecomm: comm.dup()?,
            regular: false,
        })
    }
}

/// Decomposes `comm` according to `shape`. Collective on first use; later
/// calls return the cached decomposition without communicating.
pub fn decompose(comm: &Comm, shape: WorldShape) -> Result<Arc<LaneDecomposition>> {
    cached(comm, Some(shape))
}

/// Like [`decompose`], with processes-per-node read off the node map.
pub fn lanes(comm: &Comm) -> Result<Arc<LaneDecomposition>> {
    cached(comm, None)
}

fn cached(comm: &Comm, shape: Option<WorldShape>) -> Result<Arc<LaneDecomposition>> {
    let mut slot = comm.lanes_slot().lock().unwrap_or_else(|e| e.into_inner());
    if let Some(d) = slot.as_ref() {
        return Ok(d.clone());
    }
    let d = Arc::new(build(comm, shape)?);
    *slot = Some(d.clone());
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::thread::run_threads;

    #[test]
    fn root_coords_examples() {
        assert_eq!(root_coords(5, 8, 4).unwrap(), (1, 1));
        assert_eq!(root_coords(0, 6, 3).unwrap(), (0, 0));
        assert_eq!(root_coords(31, 64, 32).unwrap(), (0, 31));
        assert!(root_coords(8, 8, 4).is_err());
    }

    #[test]
    fn partition_examples() {
        let (c, d) = partition_counts(1152, 32).unwrap();
        assert!(c.iter().all(|&x| x == 36));
        assert_eq!(d, (0..32).map(|i| 36 * i).collect::<Vec<_>>());
        assert_eq!(partition_counts(10, 4).unwrap(), (vec![2, 2, 2, 4], vec![0, 2, 4, 6]));
        assert_eq!(partition_counts(0, 3).unwrap().0, vec![0, 0, 0]);
        assert!(partition_counts(3, 0).is_err());
    }

    #[test]
    fn partition_conserves_exhaustively() {
        for count in 0..=10_000usize {
            for parts in 1..=64usize {
                let (c, d) = partition_counts(count, parts).unwrap();
                assert_eq!(c.iter().sum::<usize>(), count);
                assert!(c[..parts - 1].iter().all(|&x| x == count / parts));
                assert_eq!(d[parts - 1] + c[parts - 1], count);
            }
        }
    }

    #[test]
    fn p4_decomposition() {
        let out = run_threads(NodeMap::blocks(2, 2), |comm| {
            let d = decompose(&comm, WorldShape::regular(2, 2)).unwrap();
            let node: Vec<usize> = (0..d.nodecomm.size()).map(|r| d.nodecomm.world_rank_of(r)).collect();
            let lane: Vec<usize> = (0..d.lanecomm.size()).map(|r| d.lanecomm.world_rank_of(r)).collect();
            (d.regular, node, lane)
        });
        assert_eq!(out[0], (true, vec![0, 1], vec![0, 2]));
        assert_eq!(out[1], (true, vec![0, 1], vec![1, 3]));
        assert_eq!(out[2], (true, vec![2, 3], vec![0, 2]));
        assert_eq!(out[3], (true, vec![2, 3], vec![1, 3]));
    }

    #[test]
    fn five_ranks_with_two_per_node_fall_back() {
        let out = run_threads(NodeMap::uneven(&[2, 2, 1]), |comm| {
            let d = decompose(&comm, WorldShape::declared(5, 2)).unwrap();
            (d.regular, d.nodecomm.size(), d.lanecomm.size(), d.lanecomm.id() != comm.id())
        });
        assert!(out.iter().all(|&o| o == (false, 1, 5, true)));
    }

    #[test]
    fn non_consecutive_ranking_is_irregular() {
        let map = NodeMap::from_assignment(vec![0, 1, 0, 1]).unwrap();
        let out = run_threads(map, |comm| lanes(&comm).unwrap().regular);
        assert!(out.iter().all(|&r| !r));
    }

    #[test]
    fn singleton_uses_self_communicators() {
        let out = run_threads(NodeMap::blocks(1, 1), |comm| {
            let d = lanes(&comm).unwrap();
            (d.regular, d.nodecomm.size(), d.lanecomm.size())
        });
        assert_eq!(out[0], (true, 1, 1));
    }

    #[test]
    fn decomposition_is_cached() {
        let out = run_threads(NodeMap::blocks(2, 3), |comm| {
            let a = lanes(&comm).unwrap();
            let before = comm.splits_performed();
            let b = lanes(&comm).unwrap();
            (before, comm.splits_performed(), a.nodecomm.id() == b.nodecomm.id(), a.coords == b.coords)
        });
        assert!(out.iter().all(|&(x, y, same, eq)| x == 2 && y == 2 && same && eq));
    }

    #[test]
    fn coordinates_recover_rank_exhaustively() {
        for nodes in 1..=8 {
            for ppn in 1..=8 {
                let out = run_threads(NodeMap::blocks(nodes, ppn), |comm| {
                    let d = lanes(&comm).unwrap();
                    let c = d.coords;
                    assert!(d.regular);
                    assert_eq!(c.noderank, d.nodecomm.rank());
                    assert_eq!(c.lanerank, d.lanecomm.rank());
                    assert_eq!((d.nodecomm.size(), d.lanecomm.size()), (ppn, nodes));
                    c.lanerank * ppn + c.noderank == comm.rank()
                });
                assert!(out.into_iter().all(|ok| ok), "shape {nodes}x{ppn}");
            }
        }
    }
}
