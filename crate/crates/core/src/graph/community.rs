//! Girvan-Newman community detection: repeatedly remove the edge with the
//! highest weighted betweenness (shortest paths under distance = 1/weight)
//! and keep the partition that maximizes weighted modularity on the original
//! graph.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use super::{GraphError, WeightedGraph};

/// Node-to-community assignment plus the modularity it achieves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Partition {
    pub assignment: BTreeMap<String, usize>,
    pub modularity: f64,
    pub n_communities: usize,
}

impl Partition {
    pub fn labels_for(&self, nodes: &[String]) -> Vec<usize> {
        nodes.iter().map(|n| self.assignment[n]).collect()
    }
}

/// Connected components labeled canonically: component ids are assigned in
/// node-index order of first discovery.
pub fn components(g: &WeightedGraph) -> Vec<usize> {
    let adj = g.adjacency();
    let n = g.node_count();
    let mut label = vec![usize::MAX; n];
    let mut next = 0usize;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        label[start] = next;
        while let Some(u) = stack.pop() {
            for &(v, _) in &adj[u] {
                if label[v] == usize::MAX {
                    label[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    label
}

/// Weighted modularity of a labeling, evaluated against `g`:
/// `Q = sum_c [ w_in(c)/m - (S(c)/2m)^2 ]`.
pub fn modularity(g: &WeightedGraph, labels: &[usize]) -> f64 {
    let m = g.total_weight();
    if m <= 0.0 {
        return 0.0;
    }
    let n_comm = labels.iter().copied().max().map(|x| x + 1).unwrap_or(0);
    let mut w_in = vec![0.0; n_comm];
    let mut strength = vec![0.0; n_comm];
    for e in &g.edges {
        if labels[e.u] == labels[e.v] {
            w_in[labels[e.u]] += e.weight;
        }
        strength[labels[e.u]] += e.weight;
        strength[labels[e.v]] += e.weight;
    }
    (0..n_comm)
        .map(|c| w_in[c] / m - (strength[c] / (2.0 * m)).powi(2))
        .sum()
}

#[derive(PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, node)
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap()
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Brandes' betweenness accumulation over weighted shortest paths with
/// distance 1/weight. Returns per-edge betweenness aligned with `g.edges`
/// (undirected paths counted once).
pub fn edge_betweenness(g: &WeightedGraph) -> Vec<f64> {
    let n = g.node_count();
    let adj = g.adjacency();
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    for (i, e) in g.edges.iter().enumerate() {
        edge_index.insert((e.u, e.v), i);
        edge_index.insert((e.v, e.u), i);
    }
    let mut betweenness = vec![0.0; g.edges.len()];

    let mut dist = vec![f64::INFINITY; n];
    let mut sigma = vec![0.0f64; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut visited = vec![false; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut delta = vec![0.0f64; n];

    for source in 0..n {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        sigma.iter_mut().for_each(|s| *s = 0.0);
        preds.iter_mut().for_each(|p| p.clear());
        visited.iter_mut().for_each(|v| *v = false);
        order.clear();
        delta.iter_mut().for_each(|d| *d = 0.0);

        dist[source] = 0.0;
        sigma[source] = 1.0;
        let mut heap = BinaryHeap::new();
        heap.push(HeapItem {
            dist: 0.0,
            node: source,
        });
        while let Some(HeapItem { node: u, .. }) = heap.pop() {
            if visited[u] {
                continue;
            }
            visited[u] = true;
            order.push(u);
            for &(v, w) in &adj[u] {
                let candidate = dist[u] + 1.0 / w;
                let first_visit = dist[v].is_infinite();
                if first_visit || (candidate < dist[v] && !close(candidate, dist[v])) {
                    dist[v] = candidate;
                    sigma[v] = sigma[u];
                    preds[v].clear();
                    preds[v].push(u);
                    heap.push(HeapItem {
                        dist: candidate,
                        node: v,
                    });
                } else if !visited[v] && close(candidate, dist[v]) {
                    sigma[v] += sigma[u];
                    preds[v].push(u);
                }
            }
        }
        for &w_node in order.iter().rev() {
            for &v in &preds[w_node] {
                let c = sigma[v] / sigma[w_node] * (1.0 + delta[w_node]);
                betweenness[edge_index[&(v, w_node)]] += c;
                delta[v] += c;
            }
        }
    }
    // every undirected path was accumulated from both endpoints
    betweenness.iter_mut().for_each(|b| *b *= 0.5);
    betweenness
}

/// Relabels nodes into lexicographic name order so betweenness accumulation
/// and tie-breaking do not depend on input ordering.
fn canonicalize(g: &WeightedGraph) -> WeightedGraph {
    let mut order: Vec<usize> = (0..g.node_count()).collect();
    order.sort_by(|&a, &b| g.nodes[a].cmp(&g.nodes[b]));
    let mut remap = vec![0usize; g.node_count()];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }
    let nodes: Vec<String> = order.iter().map(|&i| g.nodes[i].clone()).collect();
    let sizes: Vec<u64> = order.iter().map(|&i| g.sizes[i]).collect();
    let mut canonical = WeightedGraph::new(nodes, sizes);
    let mut edges: Vec<(usize, usize, f64)> = g
        .edges
        .iter()
        .map(|e| {
            let (u, v) = (remap[e.u], remap[e.v]);
            if u < v {
                (u, v, e.weight)
            } else {
                (v, u, e.weight)
            }
        })
        .collect();
    edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    for (u, v, w) in edges {
        canonical.add_edge(u, v, w).expect("unique pair");
    }
    canonical
}

/// Full Girvan-Newman sweep with modularity-maximum selection over the
/// removal sequence (the untouched graph's component partition included).
/// Betweenness ties within a relative 1e-9 are broken by lexicographic
/// edge id.
pub fn girvan_newman(g: &WeightedGraph) -> Result<Partition, GraphError> {
    if g.node_count() == 0 {
        return Err(GraphError::EmptyGraph);
    }
    let original = canonicalize(g);
    let mut working = original.clone();

    let mut best_labels = components(&working);
    let mut best_q = modularity(&original, &best_labels);

    while working.edge_count() > 0 {
        let betweenness = edge_betweenness(&working);
        let mut pick = 0usize;
        for i in 1..working.edges.len() {
            let bi = betweenness[i];
            let bp = betweenness[pick];
            let tie = (bi - bp).abs() <= 1e-9 * bi.abs().max(bp.abs()).max(1.0);
            if (bi > bp && !tie)
                || (tie && working.edge_id(&working.edges[i]) < working.edge_id(&working.edges[pick]))
            {
                pick = i;
            }
        }
        working.edges.remove(pick);
        let labels = components(&working);
        let q = modularity(&original, &labels);
        if q > best_q + 1e-12 {
            best_q = q;
            best_labels = labels;
        }
    }

    let n_communities = best_labels.iter().copied().max().map(|x| x + 1).unwrap_or(0);
    let assignment = original
        .nodes
        .iter()
        .cloned()
        .zip(best_labels.iter().copied())
        .collect();
    Ok(Partition {
        assignment,
        modularity: best_q,
        n_communities,
    })
}
