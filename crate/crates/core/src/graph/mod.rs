//! The support-provider network: weighted undirected graphs, the disparity
//! backbone filter, Girvan-Newman community detection, complete-linkage
//! validation clustering, and the subject co-occurrence network.

mod community;
mod disparity;
mod hierarchy;

pub use community::{components, girvan_newman, modularity, Partition};
pub use disparity::{
    disparity_filter, edge_significance, select_alpha, sweep_alpha, AlphaSweepPoint,
};
pub use hierarchy::{complete_linkage, hierarchical_clustering, Dendrogram, Merge};

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DocumentRecord;
use crate::embed::SimilarityMatrix;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("node {0} out of range")]
    NodeOutOfRange(usize),
    #[error("self-loop on node {0}")]
    SelfLoop(String),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(String, String),
}

/// One undirected weighted edge, stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Undirected weighted graph with node size attributes (occurrence counts).
/// At most one edge per unordered pair and no self-loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    pub nodes: Vec<String>,
    pub sizes: Vec<u64>,
    pub edges: Vec<Edge>,
}

impl WeightedGraph {
    pub fn new(nodes: Vec<String>, sizes: Vec<u64>) -> Self {
        assert_eq!(nodes.len(), sizes.len());
        Self {
            nodes,
            sizes,
            edges: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    pub fn add_edge(&mut self, u: usize, v: usize, weight: f64) -> Result<(), GraphError> {
        if u >= self.nodes.len() {
            return Err(GraphError::NodeOutOfRange(u));
        }
        if v >= self.nodes.len() {
            return Err(GraphError::NodeOutOfRange(v));
        }
        if u == v {
            return Err(GraphError::SelfLoop(self.nodes[u].clone()));
        }
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        if self.edges.iter().any(|e| e.u == u && e.v == v) {
            return Err(GraphError::DuplicateEdge(
                self.nodes[u].clone(),
                self.nodes[v].clone(),
            ));
        }
        self.edges.push(Edge { u, v, weight });
        Ok(())
    }

    /// Neighbor lists as (neighbor index, weight) pairs.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[e.u].push((e.v, e.weight));
            adj[e.v].push((e.u, e.weight));
        }
        for list in &mut adj {
            list.sort_by(|a, b| a.0.cmp(&b.0));
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.nodes.len()];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    pub fn strengths(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.nodes.len()];
        for e in &self.edges {
            s[e.u] += e.weight;
            s[e.v] += e.weight;
        }
        s
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Canonical lexicographic edge identifier, used for tie-breaking.
    pub fn edge_id(&self, e: &Edge) -> (String, String) {
        let a = self.nodes[e.u].clone();
        let b = self.nodes[e.v].clone();
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }
}

/// Complete similarity graph over providers; pairs with similarity <= 0 are
/// omitted when `clip_negative` is set (the disparity filter needs positive
/// weights).
pub fn build_graph(
    similarity: &SimilarityMatrix,
    occurrence_counts: &BTreeMap<String, usize>,
    clip_negative: bool,
) -> WeightedGraph {
    let nodes = similarity.providers.clone();
    let sizes = nodes
        .iter()
        .map(|n| occurrence_counts.get(n).copied().unwrap_or(0) as u64)
        .collect();
    let mut g = WeightedGraph::new(nodes, sizes);
    let n = similarity.providers.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let w = similarity.get(i, j);
            let keep = if clip_negative { w > 0.0 } else { w != 0.0 };
            if keep {
                g.add_edge(i, j, w).expect("unique pair");
            }
        }
    }
    g
}

/// Subject co-occurrence network: nodes are subjects (lowercased), node size
/// is the number of documents listing the subject, and an edge weight counts
/// the documents listing both endpoints.
pub fn subject_cooccurrence(records: &[DocumentRecord]) -> WeightedGraph {
    let mut subject_docs: BTreeMap<String, u64> = BTreeMap::new();
    let mut pair_docs: HashMap<(String, String), f64> = HashMap::new();
    for rec in records {
        let subjects: HashSet<String> = rec
            .subjects
            .iter()
            .map(|s| s.trim().to_lowercase())
            .filter(|s| !s.is_empty())
            .collect();
        let mut sorted: Vec<&String> = subjects.iter().collect();
        sorted.sort();
        for s in &sorted {
            *subject_docs.entry((*s).clone()).or_insert(0) += 1;
        }
        for i in 0..sorted.len() {
            for j in (i + 1)..sorted.len() {
                *pair_docs
                    .entry((sorted[i].clone(), sorted[j].clone()))
                    .or_insert(0.0) += 1.0;
            }
        }
    }
    let nodes: Vec<String> = subject_docs.keys().cloned().collect();
    let sizes: Vec<u64> = subject_docs.values().copied().collect();
    let index: HashMap<String, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i))
        .collect();
    let mut g = WeightedGraph::new(nodes, sizes);
    let mut pairs: Vec<(&(String, String), &f64)> = pair_docs.iter().collect();
    pairs.sort_by(|a, b| a.0.cmp(b.0));
    for ((a, b), w) in pairs {
        let (u, v) = (index[a], index[b]);
        g.add_edge(u, v, *w).expect("unique pair");
    }
    g
}
