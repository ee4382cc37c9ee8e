use crate::engine::{Engine, StepTrace, Transfer};
use crate::error::{Result, SimError};
use crate::graph::CommGraph;
use crate::KLaneConfig;

/// Replicates a path over `p/k` nodes `k` times: one path per lane, a
/// clique on every node, and a back edge from the leaf to the root of
/// every replica except the first.
pub fn build_pipeline_replica(p: usize, k: usize) -> Result<CommGraph> {
    if k == 0 || p == 0 || p % k != 0 {
        return Err(SimError::contract(format!("k={k} must divide p={p}")));
    }
    Ok(CommGraph::from_paths(k, p / k))
}

/// Pipelined broadcast from vertex 0 over the replica graph.
///
/// Part `i` of the message (`c/k` elements in blocks of `C`) travels down
/// replica `i`. Step 1 hands the first block of every part to the root
/// replicas; afterwards all replicas advance in lockstep, each vertex
/// sharing the block it received in the previous step with its node. The
/// root replicas never see part 0 from the root, so the leaves send it back
/// to them one step after their own exchange. The schedule always spans
/// `p/k + 1 + c/(kC)` steps; with one lane those reserved slots stay idle.
pub fn simulate_broadcast(graph: &CommGraph, cfg: &KLaneConfig) -> Result<StepTrace> {
    cfg.validate()?;
    if graph.k() != cfg.k || graph.vertices() != cfg.p {
        return Err(SimError::contract("graph and configuration disagree on p or k"));
    }
    let (k, m, blocks) = (cfg.k, cfg.nodes(), cfg.blocks_per_lane());
    if m < 2 {
        return Err(SimError::contract("the pipeline needs at least two nodes"));
    }
    let id = |part: usize, b: usize| part * blocks + b;
    let at = |s: usize, delay: usize| s.checked_sub(delay).filter(|&b| b < blocks);
    let root = graph.root();
    let mut engine = Engine::new(graph.placement().to_vec(), k * blocks, cfg.block, Some(graph));
    engine.set_short_path(m == 2);
    for b in 0..k * blocks {
        engine.give(root, b);
    }
    for s in 1..=m + 1 + blocks {
        let (mut off, mut on) = (Vec::new(), Vec::new());
        for i in 0..k {
            let path = graph.replica(i);
            // root to the root replicas
            if let (true, Some(b)) = (i > 0, at(s, 1)) {
                on.push(Transfer { from: root, to: path[0], block: id(i, b) });
            }
            // down the path: position j gets block b in step b+1+j
            for j in 1..m {
                if let Some(b) = at(s, 1 + j) {
                    off.push(Transfer { from: path[j - 1], to: path[j], block: id(i, b) });
                }
            }
            // share last step's block with the other lanes of the node
            for j in 0..m {
                if i == 0 && j == 0 {
                    continue;
                }
                let delay = if j == 0 { 2 } else { 2 + j };
                if let Some(b) = at(s, delay) {
                    for peer in (0..k).filter(|&q| q != i && !(j == 0 && q == 0)) {
                        on.push(Transfer { from: path[j], to: graph.replica(peer)[j], block: id(i, b) });
                    }
                }
            }
            // leaf returns part 0 to its root
            if let (true, Some(b)) = (i > 0, at(s, m + 2)) {
                off.push(Transfer { from: path[m - 1], to: path[0], block: id(0, b) });
            }
        }
        engine.step(off, on)?;
    }
    engine.finish()
}

/// The single-ported linear pipeline over `p` processors on `p` nodes:
/// processor `j` receives block `b` in step `b + j`.
pub fn simulate_linear_pipeline(p: usize, c: usize, block: usize) -> Result<StepTrace> {
    crate::t_single(p, c, block)?;
    let blocks = c / block;
    let mut engine = Engine::new((0..p).collect(), blocks, block, None);
    for b in 0..blocks {
        engine.give(0, b);
    }
    if p > 1 {
        for s in 1..=p + blocks - 2 {
            let off = (1..p)
                .filter_map(|j| s.checked_sub(j).filter(|&b| b < blocks).map(|b| Transfer { from: j - 1, to: j, block: b }))
                .collect();
            engine.step(off, Vec::new())?;
        }
    }
    engine.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeKind;
    use crate::{t_klane, t_single};

    #[test]
    fn small_replica_graph() {
        let g = build_pipeline_replica(4, 2).unwrap();
        g.check().unwrap();
        assert_eq!(g.replica(0), &[0, 2]);
        assert_eq!(g.replica(1), &[1, 3]);
        assert_eq!(g.count(EdgeKind::Back), 1);
        assert_eq!(g.count(EdgeKind::Clique), 4);
        assert_eq!(g.edge(3, 1), Some(EdgeKind::Back));
    }

    #[test]
    fn degenerate_graphs() {
        let path = build_pipeline_replica(5, 1).unwrap();
        path.check().unwrap();
        assert_eq!(path.count(EdgeKind::Clique), 0);
        assert_eq!(path.count(EdgeKind::Back), 0);
        let single = build_pipeline_replica(3, 3).unwrap();
        single.check().unwrap();
        assert_eq!(single.nodes(), 1);
        assert_eq!(single.count(EdgeKind::Tree), 0);
        assert!(build_pipeline_replica(5, 2).is_err());
    }

    #[test]
    fn eight_processors_two_lanes() {
        let cfg = KLaneConfig::new(8, 2, 64, 4).unwrap();
        let trace = simulate_broadcast(&build_pipeline_replica(8, 2).unwrap(), &cfg).unwrap();
        assert_eq!(trace.step_count(), 52);
        assert_eq!(trace.step_count(), t_klane(8, 2, 64, 4).unwrap());
        assert!(trace.steps.last().unwrap().held.iter().all(|&h| h == 16));
        assert_eq!(trace.node_ingress, vec![32, 64, 64, 64]);
        assert_eq!(trace.node_egress, vec![64, 64, 64, 32]);
        assert_eq!(trace.last_active(), trace.rounds());
        assert!(!trace.short_path);
    }

    #[test]
    fn one_lane_reserves_three_slots() {
        let cfg = KLaneConfig::new(6, 1, 24, 4).unwrap();
        let trace = simulate_broadcast(&build_pipeline_replica(6, 1).unwrap(), &cfg).unwrap();
        assert_eq!(trace.step_count(), t_single(6, 24, 4).unwrap() + 3 * 4);
        // idle first step, then the classic pipeline, then two idle slots
        assert!(trace.steps[0].offnode.is_empty());
        assert_eq!(trace.last_active() - 1, 6 - 1 + 24 / 4 - 1);
    }

    #[test]
    fn two_node_paths_are_flagged() {
        let cfg = KLaneConfig::new(4, 2, 8, 1).unwrap();
        let trace = simulate_broadcast(&build_pipeline_replica(4, 2).unwrap(), &cfg).unwrap();
        assert!(trace.short_path);
        assert_eq!(trace.step_count(), t_klane(4, 2, 8, 1).unwrap());
    }

    #[test]
    fn linear_pipeline_matches_closed_form() {
        for p in 1..8 {
            for blocks in 1..6 {
                let trace = simulate_linear_pipeline(p, blocks * 3, 3).unwrap();
                assert_eq!(trace.step_count(), t_single(p, blocks * 3, 3).unwrap());
            }
        }
    }

    #[test]
    fn single_node_is_rejected() {
        let cfg = KLaneConfig::new(2, 2, 8, 1).unwrap();
        assert!(simulate_broadcast(&build_pipeline_replica(2, 2).unwrap(), &cfg).is_err());
    }
}
