use crate::engine::{Engine, StepTrace, Transfer};
use crate::error::{Result, SimError};

/// Steps of a k-ported broadcast, where every informed processor reaches
/// `k` new ones per step: the least `s` with `(k+1)^s >= p`.
pub fn kported_baseline_steps(p: usize, k: usize) -> usize {
    let (mut informed, mut steps) = (1usize, 0);
    while informed < p {
        informed = informed.saturating_mul(k + 1);
        steps += 1;
    }
    steps
}

/// Non-pipelined broadcast of `c` elements on `p/k` nodes of `k`
/// processors, derived from a k-ported broadcast.
///
/// A processor that is the first of its node to get the data shares it
/// with the rest of the node in the next step. Once every processor of a
/// node holds the data, each of them acts as one port and sends to an
/// untouched node, to first processors before second ones.
pub fn simulate_kported_transform(p: usize, k: usize, c: usize) -> Result<StepTrace> {
    if k == 0 || p == 0 || p % k != 0 {
        return Err(SimError::contract(format!("k={k} must divide p={p}")));
    }
    let nodes = p / k;
    let mut engine = Engine::new((0..p).map(|v| v / k).collect(), 1, c, None);
    engine.give(0, 0);
    while !engine.is_complete() {
        let informed = |e: &Engine, node: usize| (0..k).filter(|&q| e.holds(node * k + q, 0)).count();
        let (mut off, mut on) = (Vec::new(), Vec::new());
        let mut senders = Vec::new();
        let mut untouched = Vec::new();
        for node in 0..nodes {
            match informed(&engine, node) {
                0 => untouched.push(node),
                x if x == k => senders.extend((0..k).map(|q| node * k + q)),
                _ => {
                    let from = (0..k).map(|q| node * k + q).find(|&v| engine.holds(v, 0)).expect("node is partly informed");
                    for q in 0..k {
                        if !engine.holds(node * k + q, 0) {
                            on.push(Transfer { from, to: node * k + q, block: 0 });
                        }
                    }
                }
            }
        }
        let targets = (0..k).flat_map(|q| untouched.iter().map(move |&node| node * k + q));
        for (from, to) in senders.into_iter().zip(targets) {
            off.push(Transfer { from, to, block: 0 });
        }
        engine.step(off, on)?;
    }
    engine.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_is_a_log() {
        assert_eq!(kported_baseline_steps(1, 2), 0);
        assert_eq!(kported_baseline_steps(16, 4), 2);
        assert_eq!(kported_baseline_steps(17, 1), 5);
        assert_eq!(kported_baseline_steps(9, 2), 2);
    }

    #[test]
    fn two_nodes_take_two_steps() {
        for k in 1..6 {
            let trace = simulate_kported_transform(2 * k, k, 10).unwrap();
            let expect = if k == 1 { 1 } else { 2 };
            assert_eq!(trace.rounds(), expect, "k={k}");
        }
    }

    #[test]
    fn one_lane_is_binomial() {
        for p in 1..40 {
            let trace = simulate_kported_transform(p, 1, 1).unwrap();
            assert_eq!(trace.rounds(), kported_baseline_steps(p, 1));
        }
    }

    #[test]
    fn sixteen_processors_four_lanes() {
        let trace = simulate_kported_transform(16, 4, 8).unwrap();
        assert!(trace.rounds() <= 2 * kported_baseline_steps(16, 4));
        assert_eq!(trace.rounds(), 3);
    }
}
