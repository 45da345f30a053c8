//! Weighted rooted trees and the p-metrics they induce.

use crate::error::{Error, Result};
use crate::space::PMetricSpace;
use crate::trees::RootedTreeTopology;

/// A rooted tree with positive edge weights. `weight[x]` is the weight of
/// the edge from `x` to its parent; the root entry is unused and zero.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedRootedTree {
    labels: Vec<String>,
    topology: RootedTreeTopology,
    weight: Vec<f64>,
}

impl WeightedRootedTree {
    pub fn new(
        labels: Vec<String>,
        root: usize,
        parent: &[Option<usize>],
        weight: Vec<f64>,
    ) -> Result<Self> {
        let m = parent.len();
        if m < 2 {
            return Err(Error::input("a weighted tree needs at least two vertices"));
        }
        if labels.len() != m || weight.len() != m {
            return Err(Error::input("labels, parents and weights must have equal length"));
        }
        let topology = RootedTreeTopology::from_parents(root, parent)?;
        let mut weight = weight;
        for x in 0..m {
            if x == root {
                weight[x] = 0.0;
            } else if !(weight[x].is_finite() && weight[x] > 0.0) {
                return Err(Error::input(format!(
                    "edge weight at vertex {:?} must be positive, got {}",
                    labels[x], weight[x]
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(l) = labels.iter().find(|l| l.is_empty() || !seen.insert(l.as_str())) {
            return Err(Error::input(format!("vertex label {l:?} is empty or repeated")));
        }
        Ok(WeightedRootedTree { labels, topology, weight })
    }

    /// Builds a tree from undirected weighted edges, oriented toward `root`.
    pub fn from_edges(
        labels: Vec<String>,
        root: usize,
        edges: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let m = labels.len();
        if root >= m {
            return Err(Error::input("root index out of range"));
        }
        if edges.len() + 1 != m {
            return Err(Error::input(format!(
                "a tree on {m} vertices has {} edges, got {}",
                m.saturating_sub(1),
                edges.len()
            )));
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        for &(u, v, w) in edges {
            if u >= m || v >= m || u == v {
                return Err(Error::input(format!("bad edge ({u},{v})")));
            }
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        let mut parent = vec![None; m];
        let mut weight = vec![0.0; m];
        let mut seen = vec![false; m];
        seen[root] = true;
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            for &(y, w) in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    parent[y] = Some(x);
                    weight[y] = w;
                    stack.push(y);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::input("edges do not connect every vertex"));
        }
        Self::new(labels, root, &parent, weight)
    }

    pub fn len(&self) -> usize {
        self.weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weight.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn root(&self) -> usize {
        self.topology.root()
    }

    pub fn parent(&self, x: usize) -> Option<usize> {
        self.topology.parent(x)
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weight[x]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn topology(&self) -> &RootedTreeTopology {
        &self.topology
    }

    /// Non-root vertices without children.
    pub fn leaves(&self) -> Vec<usize> {
        self.topology.leaves()
    }

    /// `(parent, child, weight)` for every edge.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.topology
            .edges()
            .map(|(u, v)| (u, v, self.weight[v]))
            .collect()
    }

    /// `d_{w,q}(x,y)^q`: sum of `w^q` over the edges of the tree path.
    pub fn path_power_sum(&self, x: usize, y: usize, q: f64) -> f64 {
        let (mut x, mut y) = (x, y);
        let mut s = 0.0;
        while x != y {
            if self.topology.rank(x) >= self.topology.rank(y) {
                s += self.weight[x].powf(q);
                x = self.parent(x).expect("non-root vertex has a parent");
            } else {
                s += self.weight[y].powf(q);
                y = self.parent(y).expect("non-root vertex has a parent");
            }
        }
        s
    }
}

/// The q-metric space of a weighted tree: distances are the `q`-sums of
/// edge weights along tree paths, with the root as base point.
pub fn path_p_metric(tree: &WeightedRootedTree, q: f64) -> Result<PMetricSpace> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Exponent { p: q, q: 1.0 });
    }
    let m = tree.len();
    let mut dist = vec![vec![0.0; m]; m];
    for x in 0..m {
        for y in (x + 1)..m {
            let d = if tree.parent(y) == Some(x) {
                tree.weight(y)
            } else if tree.parent(x) == Some(y) {
                tree.weight(x)
            } else {
                tree.path_power_sum(x, y, q).powf(1.0 / q)
            };
            dist[x][y] = d;
            dist[y][x] = d;
        }
    }
    PMetricSpace::new(tree.labels().to_vec(), tree.root(), q, dist)
}
