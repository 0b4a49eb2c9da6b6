//! Disparity filter: per-node significance test that keeps edges whose
//! weight share is improbably large under a uniform split of the node's
//! strength across its edges.

use serde::{Deserialize, Serialize};

use super::WeightedGraph;

/// Closed-form significance of an edge carrying fraction `p` of a degree-`k`
/// node's strength: the tail probability `(1 - p)^(k - 1)` of the uniform
/// null model. Smaller is more significant.
pub fn edge_significance(p: f64, k: usize) -> f64 {
    if k <= 1 {
        // a single edge carries everything; the null has no room to reject
        return 1.0;
    }
    (1.0 - p).powi(k as i32 - 1)
}

/// Backbone extraction. An edge is kept when significant (`alpha_ij < alpha`)
/// from at least one endpoint; endpoints of degree 1 keep their only edge.
/// Every node is preserved even if it loses all edges.
pub fn disparity_filter(g: &WeightedGraph, alpha: f64) -> WeightedGraph {
    let degrees = g.degrees();
    let strengths = g.strengths();
    let mut backbone = WeightedGraph::new(g.nodes.clone(), g.sizes.clone());
    for e in &g.edges {
        if edge_survives(e.u, e.weight, &degrees, &strengths, alpha)
            || edge_survives(e.v, e.weight, &degrees, &strengths, alpha)
        {
            backbone.add_edge(e.u, e.v, e.weight).expect("unique pair");
        }
    }
    backbone
}

fn edge_survives(node: usize, weight: f64, degrees: &[usize], strengths: &[f64], alpha: f64) -> bool {
    let k = degrees[node];
    if k == 1 {
        return true;
    }
    let p = weight / strengths[node];
    edge_significance(p, k) < alpha
}

/// One point of an alpha sweep: the node fraction still covered by at least
/// one backbone edge, and the backbone edge count.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AlphaSweepPoint {
    pub alpha: f64,
    pub node_coverage: f64,
    pub edge_count: usize,
}

/// Evaluates the backbone at each alpha (ascending).
pub fn sweep_alpha(g: &WeightedGraph, alphas: &[f64]) -> Vec<AlphaSweepPoint> {
    alphas
        .iter()
        .map(|&alpha| {
            let backbone = disparity_filter(g, alpha);
            let degrees = backbone.degrees();
            let covered = degrees.iter().filter(|&&d| d > 0).count();
            let coverage = if backbone.node_count() == 0 {
                0.0
            } else {
                covered as f64 / backbone.node_count() as f64
            };
            AlphaSweepPoint {
                alpha,
                node_coverage: coverage,
                edge_count: backbone.edge_count(),
            }
        })
        .collect()
}

/// The sparsest backbone that still touches every node: the smallest swept
/// alpha with full coverage.
pub fn select_alpha(sweep: &[AlphaSweepPoint]) -> Option<f64> {
    sweep
        .iter()
        .find(|p| (p.node_coverage - 1.0).abs() < 1e-12)
        .map(|p| p.alpha)
}
