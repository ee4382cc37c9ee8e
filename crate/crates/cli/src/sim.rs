use std::fmt::Write as _;

use klanesim::{build_pipeline_replica, simulate_broadcast, t_klane, t_single, KLaneConfig, StepTrace};

use crate::error::Result;

#[derive(Clone, Debug)]
pub struct PipelineReport {
    pub cfg: KLaneConfig,
    pub trace: StepTrace,
    pub t_klane: u64,
    pub t_single: u64,
}

pub fn sim_pipeline(p: usize, k: usize, c: usize, block: usize) -> Result<PipelineReport> {
    let cfg = KLaneConfig::new(p, k, c, block)?;
    let trace = simulate_broadcast(&build_pipeline_replica(p, k)?, &cfg)?;
    Ok(PipelineReport { cfg, trace, t_klane: t_klane(p, k, c, block)?, t_single: t_single(p, c, block)? })
}

/// Summary line, then one line per node with its off-node volumes.
pub fn emit(r: &PipelineReport) -> String {
    let KLaneConfig { p, k, c, block } = r.cfg;
    let mut out = String::new();
    let _ = writeln!(out, "p,k,c,block,steps,t_klane,t_single,short_path");
    let _ = writeln!(out, "{p},{k},{c},{block},{},{},{},{}", r.trace.step_count(), r.t_klane, r.t_single, r.trace.short_path);
    let _ = writeln!(out, "node,ingress,egress");
    for (node, (i, e)) in r.trace.node_ingress.iter().zip(&r.trace.node_egress).enumerate() {
        let _ = writeln!(out, "{node},{i},{e}");
    }
    out
}
