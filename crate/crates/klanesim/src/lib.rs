//! Synchronous-step simulator for the k-lane model.
//!
//! Processors sit on nodes. In one step every processor may send one block
//! to a processor on another node, receive one block from another node, and
//! at the same time exchange blocks with the other processors on its own
//! node. Time is counted in element units: a step that moves blocks of `C`
//! elements costs `C`.

mod engine;
mod error;
mod graph;
mod kported;
mod pipeline;

pub use engine::{Engine, StepRecord, StepTrace, Transfer};
pub use error::{Result, SimError};
pub use graph::{CommGraph, EdgeKind};
pub use kported::{kported_baseline_steps, simulate_kported_transform};
pub use pipeline::{build_pipeline_replica, simulate_broadcast, simulate_linear_pipeline};

/// Problem parameters of a pipelined broadcast.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KLaneConfig {
    /// Total number of processors.
    pub p: usize,
    /// Lanes, which is also the number of processors per node.
    pub k: usize,
    /// Elements in the whole message.
    pub c: usize,
    /// Pipeline block size in elements.
    pub block: usize,
}

impl KLaneConfig {
    pub fn new(p: usize, k: usize, c: usize, block: usize) -> Result<Self> {
        let cfg = KLaneConfig { p, k, c, block };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let KLaneConfig { p, k, c, block } = *self;
        if k == 0 || block == 0 || c == 0 || p == 0 {
            return Err(SimError::contract("p, k, c and the block size must be positive"));
        }
        if p % k != 0 {
            return Err(SimError::contract(format!("k={k} does not divide p={p}")));
        }
        if c % (k * block) != 0 {
            return Err(SimError::contract(format!("k*C={} does not divide c={c}", k * block)));
        }
        Ok(())
    }

    /// Nodes, which is the length of each replica path.
    pub fn nodes(&self) -> usize {
        self.p / self.k
    }

    /// Blocks that travel down each replica.
    pub fn blocks_per_lane(&self) -> usize {
        self.c / (self.k * self.block)
    }
}

/// Running time of the single-ported linear pipeline:
/// `(p-1)C + (c/C-1)C`. A single processor needs no communication.
pub fn t_single(p: usize, c: usize, block: usize) -> Result<u64> {
    if p == 0 || block == 0 || c == 0 {
        return Err(SimError::contract("p, c and the block size must be positive"));
    }
    if c % block != 0 {
        return Err(SimError::contract(format!("C={block} does not divide c={c}")));
    }
    if p == 1 {
        return Ok(0);
    }
    Ok(((p - 1) * block + (c / block - 1) * block) as u64)
}

/// Running time of the replicated pipeline: `(p/k + 2)C + (c/(kC) - 1)C`.
pub fn t_klane(p: usize, k: usize, c: usize, block: usize) -> Result<u64> {
    let cfg = KLaneConfig::new(p, k, c, block)?;
    Ok(((cfg.nodes() + 2) * block + (cfg.blocks_per_lane() - 1) * block) as u64)
}

/// Steps of the physical machine needed for one step of an algorithm that
/// uses `n` virtual lanes on `k` physical ones.
pub fn self_simulation_factor(n: usize, k: usize) -> Result<usize> {
    if k == 0 {
        return Err(SimError::contract("k must be positive"));
    }
    Ok(n.div_ceil(k))
}

/// Base trees the replica construction applies to, with the constant number
/// of extra pipeline slots each one costs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeFamily {
    Path,
    Binary,
}

impl TreeFamily {
    pub fn overhead_slots(self) -> usize {
        match self {
            TreeFamily::Path => 3,
            TreeFamily::Binary => 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(t_single(8, 64, 4).unwrap(), 88);
        assert_eq!(t_single(2, 4, 4).unwrap(), 4);
        assert_eq!(t_single(1, 16, 4).unwrap(), 0);
        assert_eq!(t_klane(8, 2, 64, 4).unwrap(), 52);
        assert_eq!(t_klane(16, 2, 1024, 1).unwrap(), 521);
        assert_eq!(t_single(16, 1024, 1).unwrap(), 1038);
        assert!(t_single(4, 10, 4).is_err());
        assert!(t_klane(9, 2, 64, 4).is_err());
        assert!(t_klane(8, 2, 12, 4).is_err());
    }

    #[test]
    fn one_lane_adds_three_slots() {
        for p in 2..10 {
            assert_eq!(t_klane(p, 1, 40, 4).unwrap(), t_single(p, 40, 4).unwrap() + 12);
        }
    }

    #[test]
    fn serialization_factor() {
        assert_eq!(self_simulation_factor(32, 2).unwrap(), 16);
        assert_eq!(self_simulation_factor(3, 3).unwrap(), 1);
        assert_eq!(self_simulation_factor(5, 2).unwrap(), 3);
        assert!(self_simulation_factor(5, 0).is_err());
    }

    #[test]
    fn overhead_table() {
        assert_eq!(TreeFamily::Path.overhead_slots(), 3);
        assert_eq!(TreeFamily::Binary.overhead_slots(), TreeFamily::Path.overhead_slots() - 1);
    }
}
