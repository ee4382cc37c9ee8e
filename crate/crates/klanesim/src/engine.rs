use crate::error::{Result, SimError};
use crate::graph::{CommGraph, EdgeKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transfer {
    pub from: usize,
    pub to: usize,
    pub block: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StepRecord {
    pub offnode: Vec<Transfer>,
    pub onnode: Vec<Transfer>,
    /// Blocks held by each vertex after the step.
    pub held: Vec<usize>,
}

/// Result of a simulation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepTrace {
    pub steps: Vec<StepRecord>,
    /// Elements per block, which is also the time one step costs.
    pub block_elems: usize,
    pub blocks: usize,
    pub node_ingress: Vec<u64>,
    pub node_egress: Vec<u64>,
    pub onnode_elems: u64,
    /// The replica paths have only two nodes, so every leaf is its root's
    /// direct successor.
    pub short_path: bool,
}

impl StepTrace {
    pub fn rounds(&self) -> usize {
        self.steps.len()
    }

    /// Running time in element units.
    pub fn step_count(&self) -> u64 {
        (self.steps.len() * self.block_elems) as u64
    }

    /// The last step that moved any data, 1-based; 0 if none did.
    pub fn last_active(&self) -> usize {
        self.steps.iter().rposition(|s| !s.offnode.is_empty() || !s.onnode.is_empty()).map_or(0, |i| i + 1)
    }
}

/// Executes steps while enforcing the model rules.
pub struct Engine<'g> {
    node_of: Vec<usize>,
    graph: Option<&'g CommGraph>,
    holds: Vec<Vec<bool>>,
    trace: StepTrace,
}

impl<'g> Engine<'g> {
    /// An engine for processors placed by `node_of`, moving `blocks` blocks
    /// of `block_elems` elements. With a graph, every transfer must follow
    /// one of its edges.
    pub fn new(node_of: Vec<usize>, blocks: usize, block_elems: usize, graph: Option<&'g CommGraph>) -> Self {
        let nodes = node_of.iter().max().map_or(0, |&m| m + 1);
        let holds = vec![vec![false; blocks]; node_of.len()];
        Engine {
            node_of,
            graph,
            holds,
            trace: StepTrace {
                steps: Vec::new(),
                block_elems,
                blocks,
                node_ingress: vec![0; nodes],
                node_egress: vec![0; nodes],
                onnode_elems: 0,
                short_path: false,
            },
        }
    }

    pub fn give(&mut self, v: usize, block: usize) {
        self.holds[v][block] = true;
    }

    pub fn holds(&self, v: usize, block: usize) -> bool {
        self.holds[v][block]
    }

    pub fn is_complete(&self) -> bool {
        self.holds.iter().all(|h| h.iter().all(|&b| b))
    }

    pub fn set_short_path(&mut self, flag: bool) {
        self.trace.short_path = flag;
    }

    /// Runs one synchronous step. Senders must hold their blocks before the
    /// step starts; nobody receives a block twice.
    pub fn step(&mut self, offnode: Vec<Transfer>, onnode: Vec<Transfer>) -> Result<()> {
        let step = self.trace.steps.len() + 1;
        let fail = |detail: String| Err(SimError::Schedule { step, detail });
        let p = self.node_of.len();
        let (mut sends, mut recvs) = (vec![0u8; p], vec![0u8; p]);
        let mut pairs = std::collections::HashSet::new();
        let mut incoming: Vec<(usize, usize)> = Vec::new();
        for (t, off) in offnode.iter().map(|t| (t, true)).chain(onnode.iter().map(|t| (t, false))) {
            if t.from >= p || t.to >= p || t.block >= self.trace.blocks {
                return fail(format!("transfer {t:?} out of range"));
            }
            if !self.holds[t.from][t.block] {
                return fail(format!("vertex {} sends block {} it does not hold", t.from, t.block));
            }
            if self.holds[t.to][t.block] || incoming.contains(&(t.to, t.block)) {
                return fail(format!("vertex {} receives block {} twice", t.to, t.block));
            }
            incoming.push((t.to, t.block));
            let same_node = self.node_of[t.from] == self.node_of[t.to];
            if let Some(g) = self.graph {
                let ok = match g.edge(t.from, t.to) {
                    Some(EdgeKind::Clique) => !off,
                    Some(EdgeKind::Tree | EdgeKind::Back) => off,
                    None => false,
                };
                if !ok {
                    return fail(format!("{t:?} does not follow an edge of the graph"));
                }
            }
            if off {
                if same_node {
                    return fail(format!("off-node transfer {t:?} stays on a node"));
                }
                sends[t.from] += 1;
                recvs[t.to] += 1;
                if sends[t.from] > 1 || recvs[t.to] > 1 {
                    return fail(format!("vertex {} or {} exceeds one off-node transfer", t.from, t.to));
                }
            } else {
                if !same_node || t.from == t.to {
                    return fail(format!("on-node transfer {t:?} leaves the node"));
                }
                if !pairs.insert((t.from, t.to)) {
                    return fail(format!("two on-node blocks from {} to {}", t.from, t.to));
                }
            }
        }
        let elems = self.trace.block_elems as u64;
        for t in &offnode {
            self.trace.node_egress[self.node_of[t.from]] += elems;
            self.trace.node_ingress[self.node_of[t.to]] += elems;
        }
        self.trace.onnode_elems += elems * onnode.len() as u64;
        for (v, b) in incoming {
            self.holds[v][b] = true;
        }
        let held = self.holds.iter().map(|h| h.iter().filter(|&&b| b).count()).collect();
        self.trace.steps.push(StepRecord { offnode, onnode, held });
        Ok(())
    }

    /// Ends the run; fails unless every vertex holds every block.
    pub fn finish(self) -> Result<StepTrace> {
        for (vertex, h) in self.holds.iter().enumerate() {
            let missing = h.iter().filter(|&&b| !b).count();
            if missing > 0 {
                return Err(SimError::Incomplete { vertex, missing });
            }
        }
        Ok(self.trace)
    }
}
