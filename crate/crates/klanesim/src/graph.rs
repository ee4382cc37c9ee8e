use std::collections::HashMap;

use crate::error::{Result, SimError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    /// Parent to child inside one replica tree.
    Tree,
    /// Between two processors on the same node.
    Clique,
    /// From the leaf of replica `i >= 1` back to its root.
    Back,
}

/// Replicated communication trees with processors placed on nodes.
///
/// Replica `i` position `j` is vertex `j*k + i` on node `j`, so the `k`
/// replicas of a base vertex share a node.
#[derive(Clone, Debug)]
pub struct CommGraph {
    k: usize,
    node_of: Vec<usize>,
    replicas: Vec<Vec<usize>>,
    edges: HashMap<(usize, usize), EdgeKind>,
}

impl CommGraph {
    pub(crate) fn from_paths(k: usize, base_len: usize) -> Self {
        let node_of: Vec<usize> = (0..base_len * k).map(|v| v / k).collect();
        let replicas: Vec<Vec<usize>> = (0..k).map(|i| (0..base_len).map(|j| j * k + i).collect()).collect();
        let mut edges = HashMap::new();
        for path in &replicas {
            for w in path.windows(2) {
                edges.insert((w[0], w[1]), EdgeKind::Tree);
            }
        }
        for node in 0..base_len {
            for a in 0..k {
                for b in (0..k).filter(|&b| b != a) {
                    edges.insert((node * k + a, node * k + b), EdgeKind::Clique);
                }
            }
        }
        if base_len > 1 {
            for path in &replicas[1..] {
                edges.insert((path[base_len - 1], path[0]), EdgeKind::Back);
            }
        }
        CommGraph { k, node_of, replicas, edges }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn vertices(&self) -> usize {
        self.node_of.len()
    }

    pub fn nodes(&self) -> usize {
        self.node_of.len() / self.k
    }

    pub fn node_of(&self, v: usize) -> usize {
        self.node_of[v]
    }

    pub fn placement(&self) -> &[usize] {
        &self.node_of
    }

    /// Vertices of replica `i` in tree order, root first.
    pub fn replica(&self, i: usize) -> &[usize] {
        &self.replicas[i]
    }

    pub fn root(&self) -> usize {
        self.replicas[0][0]
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<EdgeKind> {
        self.edges.get(&(from, to)).copied()
    }

    pub fn count(&self, kind: EdgeKind) -> usize {
        self.edges.values().filter(|&&e| e == kind).count()
    }

    /// Checks the structural invariants of the construction.
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(SimError::contract(msg));
        let len = self.replicas[0].len();
        for (i, path) in self.replicas.iter().enumerate() {
            if path.len() != len {
                return bad(format!("replica {i} has {} vertices, replica 0 has {len}", path.len()));
            }
            for (j, &v) in path.iter().enumerate() {
                if self.node_of[v] != self.node_of[self.replicas[0][j]] {
                    return bad(format!("replica {i} vertex {j} is not on the node of its base vertex"));
                }
            }
            let tree_edges = path.windows(2).filter(|w| self.edge(w[0], w[1]) == Some(EdgeKind::Tree)).count();
            if tree_edges + 1 != len {
                return bad(format!("replica {i} is not a path"));
            }
            let back = self.edge(path[len - 1], path[0]) == Some(EdgeKind::Back);
            if back != (i > 0 && len > 1) {
                return bad(format!("replica {i} back edge mismatch"));
            }
        }
        let cliques = self.count(EdgeKind::Clique);
        if cliques != self.nodes() * self.k * (self.k - 1) {
            return bad(format!("{cliques} clique edges"));
        }
        Ok(())
    }
}
