//! Directed graphs with certified strong connectivity.
//!
//! Nodes are indexed `0..n_nodes`. Out-neighborhoods are stored in
//! compressed sparse row form; the order of neighbors of a node follows the
//! order in which its edges were supplied.

use std::collections::{HashSet, VecDeque};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_nodes: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    // Position of each CSR edge in the caller's edge list.
    input_order: Vec<usize>,
}

impl Graph {
    /// Builds a graph from `(from, to)` pairs.
    ///
    /// Rejects self-loops, duplicate edges and nodes that touch no edge, then
    /// checks strong connectivity with a forward and a reverse traversal
    /// from node 0.
    pub fn new(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::TooFewNodes(n_nodes));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut degree = vec![0usize; n_nodes];
        let mut touched = vec![false; n_nodes];
        for &(from, to) in edges {
            if from >= n_nodes || to >= n_nodes {
                return Err(Error::NodeOutOfRange { from, to, n_nodes });
            }
            if from == to {
                return Err(Error::SelfLoop { node: from });
            }
            if !seen.insert((from, to)) {
                return Err(Error::DuplicateEdge { from, to });
            }
            degree[from] += 1;
            touched[from] = true;
            touched[to] = true;
        }
        if let Some(node) = touched.iter().position(|t| !t) {
            return Err(Error::IsolatedNode { node });
        }

        let mut offsets = Vec::with_capacity(n_nodes + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n_nodes].to_vec();
        let mut targets = vec![0; edges.len()];
        let mut input_order = vec![0; edges.len()];
        for (k, &(from, to)) in edges.iter().enumerate() {
            targets[cursor[from]] = to;
            input_order[cursor[from]] = k;
            cursor[from] += 1;
        }

        let graph = Self {
            n_nodes,
            offsets,
            targets,
            input_order,
        };
        graph.check_strongly_connected()?;
        Ok(graph)
    }

    fn check_strongly_connected(&self) -> Result<()> {
        let forward = self.reachable_from(0, false);
        if let Some(to) = forward.iter().position(|r| !r) {
            return Err(Error::NotStronglyConnected { from: 0, to });
        }
        let backward = self.reachable_from(0, true);
        if let Some(from) = backward.iter().position(|r| !r) {
            return Err(Error::NotStronglyConnected { from, to: 0 });
        }
        Ok(())
    }

    fn reachable_from(&self, root: usize, reversed: bool) -> Vec<bool> {
        let adjacency: Vec<Vec<usize>> = if reversed {
            let mut rev = vec![Vec::new(); self.n_nodes];
            for i in 0..self.n_nodes {
                for &j in self.neighbors(i) {
                    rev[j].push(i);
                }
            }
            rev
        } else {
            (0..self.n_nodes).map(|i| self.neighbors(i).to_vec()).collect()
        };
        let mut visited = vec![false; self.n_nodes];
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        while let Some(i) = queue.pop_front() {
            for &j in &adjacency[i] {
                if !visited[j] {
                    visited[j] = true;
                    queue.push_back(j);
                }
            }
        }
        visited
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.targets.len()
    }

    /// Out-neighbors `V(i)` of node `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Range of CSR edge indices leaving node `i`.
    pub fn edge_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// All edges as `(from, to)` in CSR order (grouped by source node).
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_nodes).flat_map(move |i| self.neighbors(i).iter().map(move |&j| (i, j)))
    }

    /// Index in the original edge list of the CSR edge `e`.
    pub fn input_index(&self, e: usize) -> usize {
        self.input_order[e]
    }

    /// CSR index of the edge `(from, to)`, if present.
    pub fn edge_index(&self, from: usize, to: usize) -> Option<usize> {
        self.neighbors(from)
            .iter()
            .position(|&j| j == to)
            .map(|k| self.offsets[from] + k)
    }
}
