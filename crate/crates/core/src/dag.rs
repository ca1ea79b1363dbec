//! Random DAGs over labelled nodes.
//!
//! Sampling runs a symmetric Markov chain over the space of DAGs (the PMMixed
//! idea): each step picks one of {add, remove, reverse} and an ordered node
//! pair uniformly, and applies the move unless it would create a cycle or
//! break the parent limit. Every move has an inverse proposed with the same
//! probability, so the stationary distribution is uniform over the allowed
//! DAGs.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use rand::Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    node_count: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Dag {
    pub fn empty(node_count: usize) -> Self {
        Dag {
            node_count,
            edges: BTreeSet::new(),
        }
    }

    /// Builds a DAG, rejecting self-loops, out-of-range endpoints and cycles.
    /// Duplicate edges collapse.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::invalid(format!(
                    "edge {u}->{v} out of range for {node_count} nodes"
                )));
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop on node {u}")));
            }
            set.insert((u, v));
        }
        topo_sort(node_count, set.iter().copied())?;
        Ok(Dag {
            node_count,
            edges: set,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u, v))
    }

    pub fn parents(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.1 == v).map(|e| e.0)
    }

    pub fn children(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.range((u, 0)..(u + 1, 0)).map(|e| e.1)
    }

    /// Nodes without incoming edges, ascending.
    pub fn roots(&self) -> Vec<usize> {
        let mut has_parent = vec![false; self.node_count];
        for &(_, v) in &self.edges {
            has_parent[v] = true;
        }
        (0..self.node_count).filter(|&v| !has_parent[v]).collect()
    }

    /// `root` and every node reachable from it, ascending.
    pub fn descendants_inclusive(&self, root: usize) -> Vec<usize> {
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(u) = stack.pop() {
            for c in self.children(u) {
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        (0..self.node_count).filter(|&v| seen[v]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DagPolicy {
    /// Markov chain length. `None` uses `50 * n^2`.
    pub mixing_steps: Option<usize>,
    /// Maximum in-degree of any node.
    pub max_parents: Option<usize>,
    /// Rejection budget for [`generate_connected_dag`].
    pub max_rejections: usize,
}

impl Default for DagPolicy {
    fn default() -> Self {
        DagPolicy {
            mixing_steps: None,
            max_parents: None,
            max_rejections: 1_000_000,
        }
    }
}

impl DagPolicy {
    pub const MIXING_FACTOR: usize = 50;

    pub fn steps_for(&self, n: usize) -> usize {
        self.mixing_steps
            .unwrap_or(Self::MIXING_FACTOR * n * n)
            .max(1)
    }
}

/// Working state of the DAG Markov chain.
#[derive(Debug, Clone)]
pub struct MarkovChain {
    n: usize,
    adj: Vec<bool>,
    in_degree: Vec<usize>,
    max_parents: Option<usize>,
}

impl MarkovChain {
    pub fn new(n: usize, max_parents: Option<usize>) -> Self {
        MarkovChain {
            n,
            adj: vec![false; n * n],
            in_degree: vec![0; n],
            max_parents,
        }
    }

    fn has(&self, u: usize, v: usize) -> bool {
        self.adj[u * self.n + v]
    }

    fn set(&mut self, u: usize, v: usize, on: bool) {
        let cell = &mut self.adj[u * self.n + v];
        if *cell != on {
            *cell = on;
            if on {
                self.in_degree[v] += 1;
            } else {
                self.in_degree[v] -= 1;
            }
        }
    }

    fn parent_room(&self, v: usize) -> bool {
        self.max_parents.is_none_or(|m| self.in_degree[v] < m)
    }

    /// Whether `to` is reachable from `from`, optionally ignoring one edge.
    fn reaches(&self, from: usize, to: usize, skip: Option<(usize, usize)>) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(u) = stack.pop() {
            if u == to {
                return true;
            }
            for w in 0..self.n {
                if self.has(u, w) && !seen[w] && skip != Some((u, w)) {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        false
    }

    /// One chain step. Returns whether the state changed.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        if self.n < 2 {
            return false;
        }
        let mv = rng.random_range(0..3u8);
        let u = rng.random_range(0..self.n);
        let mut v = rng.random_range(0..self.n - 1);
        if v >= u {
            v += 1;
        }
        match mv {
            // add u -> v
            0 => {
                if self.has(u, v) || self.has(v, u) || !self.parent_room(v) || self.reaches(v, u, None)
                {
                    return false;
                }
                self.set(u, v, true);
                true
            }
            // remove u -> v
            1 => {
                if !self.has(u, v) {
                    return false;
                }
                self.set(u, v, false);
                true
            }
            // reverse u -> v into v -> u
            _ => {
                if !self.has(u, v) || !self.parent_room(u) || self.reaches(u, v, Some((u, v))) {
                    return false;
                }
                self.set(u, v, false);
                self.set(v, u, true);
                true
            }
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n)
            .flat_map(move |u| (0..self.n).map(move |v| (u, v)))
            .filter(|&(u, v)| self.has(u, v))
    }

    pub fn to_dag(&self) -> Dag {
        Dag {
            node_count: self.n,
            edges: self.edges().collect(),
        }
    }
}

/// Samples a DAG on `n` nodes by running the Markov chain from the empty graph.
pub fn generate_random_dag<R: Rng + ?Sized>(n: usize, policy: &DagPolicy, rng: &mut R) -> Result<Dag> {
    if n == 0 {
        return Err(Error::invalid("DAG needs at least one node"));
    }
    let mut chain = MarkovChain::new(n, policy.max_parents);
    for _ in 0..policy.steps_for(n) {
        chain.step(rng);
    }
    Ok(chain.to_dag())
}

pub fn is_weakly_connected(g: &Dag) -> bool {
    let n = g.node_count;
    if n <= 1 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for (u, v) in g.edges() {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == n
}

/// Rejection-samples a weakly connected DAG. Also returns the number of
/// rejected draws.
pub fn sample_connected_dag<R: Rng + ?Sized>(
    n: usize,
    policy: &DagPolicy,
    rng: &mut R,
) -> Result<(Dag, usize)> {
    let mut rejections = 0;
    loop {
        let g = generate_random_dag(n, policy, rng)?;
        if is_weakly_connected(&g) {
            return Ok((g, rejections));
        }
        rejections += 1;
        if rejections >= policy.max_rejections {
            return Err(Error::RejectionBudget {
                nodes: n,
                rejections,
            });
        }
    }
}

pub fn generate_connected_dag<R: Rng + ?Sized>(n: usize, policy: &DagPolicy, rng: &mut R) -> Result<Dag> {
    sample_connected_dag(n, policy, rng).map(|(g, _)| g)
}

pub fn topological_order(g: &Dag) -> Result<Vec<usize>> {
    topo_sort(g.node_count, g.edges())
}

/// Kahn's algorithm with a min-heap, so ties resolve by ascending index.
pub fn topo_sort<I>(n: usize, edges: I) -> Result<Vec<usize>>
where
    I: IntoIterator<Item = (usize, usize)>,
{
    let mut succ = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for (u, v) in edges {
        succ[u].push(v);
        indeg[v] += 1;
    }
    topo_sort_adjacency(&succ, &mut indeg)
}

pub(crate) fn topo_sort_adjacency(succ: &[Vec<usize>], indeg: &mut [usize]) -> Result<Vec<usize>> {
    let n = succ.len();
    let mut heap: BinaryHeap<Reverse<usize>> = (0..n).filter(|&v| indeg[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(u)) = heap.pop() {
        order.push(u);
        for &v in &succ[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                heap.push(Reverse(v));
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err(Error::Cyclic)
    }
}
