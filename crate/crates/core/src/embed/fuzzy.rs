//! Fuzzy simplicial set: locally scaled, symmetrized k-NN membership weights.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::knn::NeighborGraph;

pub const SIGMA_TOLERANCE: f64 = 1e-5;
pub const SIGMA_MAX_ITERATIONS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzyGraph {
    n: usize,
    rho: Vec<f64>,
    sigma: Vec<f64>,
    directed: Vec<Vec<(usize, f64)>>,
    edges: Vec<Edge>,
}

impl FuzzyGraph {
    /// Builds a graph directly from undirected edges, for callers that already have
    /// membership weights. `rho`/`sigma` are zero and the directed view mirrors the edges.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = Edge>) -> FuzzyGraph {
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for e in edges {
            assert!(
                e.a < n && e.b < n && e.a != e.b,
                "edge ({}, {}) out of range",
                e.a,
                e.b
            );
            assert!(
                e.weight > 0.0 && e.weight <= 1.0,
                "edge weight {} outside (0, 1]",
                e.weight
            );
            merged.insert((e.a.min(e.b), e.a.max(e.b)), e.weight);
        }
        let mut directed = vec![Vec::new(); n];
        let edges: Vec<Edge> = merged
            .into_iter()
            .map(|((a, b), weight)| {
                directed[a].push((b, weight));
                directed[b].push((a, weight));
                Edge { a, b, weight }
            })
            .collect();
        FuzzyGraph {
            n,
            rho: vec![0.0; n],
            sigma: vec![0.0; n],
            directed,
            edges,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Pre-symmetrization memberships of each point's neighbours.
    pub fn directed(&self, i: usize) -> &[(usize, f64)] {
        &self.directed[i]
    }

    /// Symmetrized edges with `a < b`, sorted.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        let key = (a.min(b), a.max(b));
        self.edges
            .binary_search_by(|e| (e.a, e.b).cmp(&key))
            .map(|pos| self.edges[pos].weight)
            .unwrap_or(0.0)
    }
}

pub(crate) fn membership_sum(distances: &[f64], rho: f64, sigma: f64) -> f64 {
    distances
        .iter()
        .map(|&d| (-(d - rho).max(0.0) / sigma).exp())
        .sum()
}

/// Bisection for the scale at which the memberships of `distances` sum to `log2(k)`.
/// Returns 1.0 when every distance equals `rho`, where the target cannot be met.
pub fn smooth_knn_sigma(distances: &[f64], rho: f64) -> f64 {
    if distances.iter().all(|&d| d == rho) {
        return 1.0;
    }
    let target = (distances.len() as f64).log2();
    let (mut lo, mut hi, mut mid) = (0.0_f64, f64::INFINITY, 1.0_f64);
    for _ in 0..SIGMA_MAX_ITERATIONS {
        let sum = membership_sum(distances, rho, mid);
        if (sum - target).abs() < SIGMA_TOLERANCE {
            break;
        }
        if sum > target {
            hi = mid;
            mid = (lo + hi) / 2.0;
        } else {
            lo = mid;
            mid = if hi.is_infinite() {
                mid * 2.0
            } else {
                (lo + hi) / 2.0
            };
        }
    }
    mid
}

pub fn fuzzy_simplicial_set(graph: &NeighborGraph) -> FuzzyGraph {
    let n = graph.len();
    let mut rho = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut directed = Vec::with_capacity(n);
    let mut pairs: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();

    for (i, neighbors) in graph.iter().enumerate() {
        let distances: Vec<f64> = neighbors.iter().map(|nb| nb.distance).collect();
        let r = distances[0];
        let s = smooth_knn_sigma(&distances, r);
        let mut out = Vec::with_capacity(neighbors.len());
        for nb in neighbors {
            let w = (-(nb.distance - r).max(0.0) / s).exp();
            out.push((nb.index, w));
            if w > 0.0 {
                let slot = pairs.entry((i.min(nb.index), i.max(nb.index))).or_default();
                if i < nb.index {
                    slot.0 = w;
                } else {
                    slot.1 = w;
                }
            }
        }
        rho.push(r);
        sigma.push(s);
        directed.push(out);
    }

    let edges = pairs
        .into_iter()
        .map(|((a, b), (ab, ba))| Edge {
            a,
            b,
            weight: (ab + ba - ab * ba).min(1.0),
        })
        .filter(|e| e.weight > 0.0)
        .collect();

    FuzzyGraph {
        n,
        rho,
        sigma,
        directed,
        edges,
    }
}
