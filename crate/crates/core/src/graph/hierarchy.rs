//! Agglomerative complete-linkage clustering used to cross-check the
//! network communities: distance is 1 - cosine similarity, merges track the
//! maximum pairwise distance between clusters.

use serde::{Deserialize, Serialize};

use crate::embed::SimilarityMatrix;

/// One agglomerative merge. Cluster ids follow the usual convention:
/// leaves are `0..n`, the i-th merge creates id `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Flat clustering with `k` clusters: replay merges until `k` remain.
    /// Labels are canonical (numbered by smallest member leaf).
    pub fn cut(&self, k: usize) -> Vec<usize> {
        let n = self.n_leaves;
        let k = k.clamp(1, n.max(1));
        let mut parent: Vec<usize> = (0..n + self.merges.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let steps = n.saturating_sub(k).min(self.merges.len());
        for (i, m) in self.merges.iter().take(steps).enumerate() {
            let new_id = n + i;
            let a = find(&mut parent, m.left);
            let b = find(&mut parent, m.right);
            parent[a] = new_id;
            parent[b] = new_id;
        }
        // canonical labels: order of first appearance over leaves
        let mut label_of_root: std::collections::HashMap<usize, usize> =
            std::collections::HashMap::new();
        let mut labels = Vec::with_capacity(n);
        for leaf in 0..n {
            let root = find(&mut parent, leaf);
            let next = label_of_root.len();
            labels.push(*label_of_root.entry(root).or_insert(next));
        }
        labels
    }
}

/// Complete-linkage agglomeration over a symmetric distance matrix.
/// Ties on merge distance are broken by the smallest (leaf-id, leaf-id)
/// pair so the trace is deterministic.
pub fn complete_linkage(distance: &[Vec<f64>]) -> Dendrogram {
    let n = distance.len();
    let mut dendrogram = Dendrogram {
        n_leaves: n,
        merges: Vec::new(),
    };
    if n <= 1 {
        return dendrogram;
    }
    // active cluster list: (cluster id, min leaf, size)
    let mut active: Vec<(usize, usize, usize)> = (0..n).map(|i| (i, i, 1)).collect();
    // distances between active clusters, indexed by position in `active`
    let mut d: Vec<Vec<f64>> = distance.to_vec();

    for step in 0..n - 1 {
        let mut best = (0usize, 1usize);
        let mut best_d = f64::INFINITY;
        for i in 0..active.len() {
            for j in (i + 1)..active.len() {
                let dij = d[i][j];
                let better = dij < best_d - 1e-15
                    || ((dij - best_d).abs() <= 1e-15
                        && (active[i].1, active[j].1) < (active[best.0].1, active[best.1].1));
                if better {
                    best_d = dij;
                    best = (i, j);
                }
            }
        }
        let (i, j) = best;
        let (id_i, leaf_i, size_i) = active[i];
        let (id_j, leaf_j, size_j) = active[j];
        let (left, right) = if id_i < id_j { (id_i, id_j) } else { (id_j, id_i) };
        dendrogram.merges.push(Merge {
            left,
            right,
            height: best_d,
            size: size_i + size_j,
        });

        // Lance-Williams update for complete linkage: new distance is the max
        let merged_row: Vec<f64> = (0..active.len())
            .filter(|&k| k != i && k != j)
            .map(|k| d[i][k].max(d[j][k]))
            .collect();
        // drop j first (j > i), then i, then push the merged cluster
        let remove = |d: &mut Vec<Vec<f64>>, idx: usize| {
            d.remove(idx);
            for row in d.iter_mut() {
                row.remove(idx);
            }
        };
        remove(&mut d, j);
        remove(&mut d, i);
        active.remove(j);
        active.remove(i);
        for (row, &md) in d.iter_mut().zip(&merged_row) {
            row.push(md);
        }
        let mut new_row = merged_row;
        new_row.push(0.0);
        d.push(new_row);
        active.push((n + step, leaf_i.min(leaf_j), size_i + size_j));
    }
    dendrogram
}

/// Clusters providers on distance `1 - cosine similarity` and cuts the tree
/// at `k` clusters.
pub fn hierarchical_clustering(
    similarity: &SimilarityMatrix,
    k: usize,
) -> (Dendrogram, Vec<usize>) {
    let n = similarity.providers.len();
    let mut distance = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                distance[i][j] = 1.0 - similarity.get(i, j);
            }
        }
    }
    let dendrogram = complete_linkage(&distance);
    let labels = dendrogram.cut(k);
    (dendrogram, labels)
}
