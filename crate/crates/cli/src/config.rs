use lanecoll::dispatch::{Collective, Impl};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchKind {
    /// Point-to-point exchange between neighbouring nodes over `k` lanes.
    Lane,
    /// `k` concurrent alltoalls on the first `k` lane communicators.
    Multicoll,
    /// One collective under each implementation.
    Coll,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transport {
    Thread,
    Tcp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Output {
    Csv,
    Table,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchConfig {
    pub kind: BenchKind,
    /// Nodes (`N`).
    pub nodes: usize,
    /// Processes per node (`n`).
    pub ppn: usize,
    /// Virtual lanes (`k`).
    pub lanes: usize,
    pub count: usize,
    pub reps: usize,
    pub inner_iters: usize,
    pub warmup: usize,
    pub transport: Transport,
    pub coll: Collective,
    /// `None` runs every implementation the collective has.
    pub imp: Option<Impl>,
    pub seed: u64,
    pub output: Output,
}

impl BenchConfig {
    pub fn new(kind: BenchKind, nodes: usize, ppn: usize, count: usize) -> Self {
        BenchConfig {
            kind,
            nodes,
            ppn,
            lanes: ppn,
            count,
            reps: 100,
            inner_iters: 50,
            warmup: 5,
            transport: Transport::Thread,
            coll: Collective::Bcast,
            imp: None,
            seed: 1,
            output: Output::Csv,
        }
    }

    pub fn p(&self) -> usize {
        self.nodes * self.ppn
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.nodes == 0 || self.ppn == 0 {
            return bad("nodes and processes per node must be positive".into());
        }
        if self.lanes == 0 || self.lanes > self.ppn {
            return bad(format!("lanes must be in 1..={}, got {}", self.ppn, self.lanes));
        }
        if self.reps <= self.warmup {
            return bad(format!("{} repetitions leave nothing after {} warmup runs", self.reps, self.warmup));
        }
        if self.imp == Some(Impl::Hier) && self.coll == Collective::Alltoall {
            return bad("there is no hierarchical alltoall".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_checks() {
        let mut cfg = BenchConfig::new(BenchKind::Lane, 2, 4, 100);
        assert_eq!((cfg.reps, cfg.inner_iters, cfg.warmup, cfg.lanes), (100, 50, 5, 4));
        cfg.validate().unwrap();
        cfg.lanes = 5;
        assert!(cfg.validate().is_err());
        cfg.lanes = 2;
        cfg.reps = 5;
        assert!(cfg.validate().is_err());
    }
}
