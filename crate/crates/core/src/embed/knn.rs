//! Exact k-nearest-neighbour graph under cosine distance.

use serde::{Deserialize, Serialize};

use crate::error::{Result, StanceError};
use crate::features::SparseVector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// Per point, its `k` nearest other points sorted by ascending distance (ties by index).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborGraph {
    k: usize,
    neighbors: Vec<Vec<Neighbor>>,
}

impl NeighborGraph {
    pub fn from_lists(k: usize, neighbors: Vec<Vec<Neighbor>>) -> Result<NeighborGraph> {
        for (i, list) in neighbors.iter().enumerate() {
            if list.len() != k {
                return Err(StanceError::InvalidParameter(format!(
                    "point {i} has {} neighbours, expected {k}",
                    list.len()
                )));
            }
            if list.iter().any(|nb| nb.index == i || nb.index >= neighbors.len()) {
                return Err(StanceError::InvalidParameter(format!(
                    "bad neighbour index at point {i}"
                )));
            }
            if list.windows(2).any(|w| w[0].distance > w[1].distance) {
                return Err(StanceError::InvalidParameter(format!(
                    "unsorted neighbours at point {i}"
                )));
            }
        }
        Ok(NeighborGraph { k, neighbors })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[Neighbor] {
        &self.neighbors[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Neighbor]> {
        self.neighbors.iter().map(Vec::as_slice)
    }
}

/// Precomputed squared norms make identical vectors land at distance exactly 0.
pub(crate) struct CosineIndex<'a> {
    vectors: &'a [SparseVector],
    sq_norms: Vec<f64>,
}

impl<'a> CosineIndex<'a> {
    pub(crate) fn new(vectors: &'a [SparseVector]) -> CosineIndex<'a> {
        let sq_norms = vectors
            .iter()
            .map(|v| {
                v.entries()
                    .iter()
                    .map(|&(_, c)| u64::from(c) * u64::from(c))
                    .sum::<u64>() as f64
            })
            .collect();
        CosineIndex { vectors, sq_norms }
    }

    pub(crate) fn distance(&self, i: usize, j: usize) -> f64 {
        let denom = self.sq_norms[i] * self.sq_norms[j];
        if denom == 0.0 {
            return 1.0;
        }
        let sim = self.vectors[i].dot(&self.vectors[j]) / denom.sqrt();
        (1.0 - sim).clamp(0.0, 1.0)
    }

    pub(crate) fn nearest(&self, i: usize, k: usize) -> Vec<Neighbor> {
        let mut all: Vec<Neighbor> = (0..self.vectors.len())
            .filter(|&j| j != i)
            .map(|j| Neighbor {
                index: j,
                distance: self.distance(i, j),
            })
            .collect();
        let order = |a: &Neighbor, b: &Neighbor| {
            a.distance
                .total_cmp(&b.distance)
                .then_with(|| a.index.cmp(&b.index))
        };
        if k < all.len() {
            all.select_nth_unstable_by(k, order);
            all.truncate(k);
        }
        all.sort_by(order);
        all
    }
}

pub fn cosine_distance(a: &SparseVector, b: &SparseVector) -> f64 {
    let pair = [a.clone(), b.clone()];
    CosineIndex::new(&pair).distance(0, 1)
}

pub fn knn_graph(vectors: &[SparseVector], k: usize) -> Result<NeighborGraph> {
    let n = vectors.len();
    if n < 2 {
        return Err(StanceError::TooFewPoints { needed: 2, got: n });
    }
    if k == 0 || k > n - 1 {
        return Err(StanceError::InvalidParameter(format!(
            "k must be in 1..={} for {n} points, got {k}",
            n - 1
        )));
    }
    let index = CosineIndex::new(vectors);
    #[cfg(feature = "parallel")]
    let neighbors = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(|i| index.nearest(i, k)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let neighbors = (0..n).map(|i| index.nearest(i, k)).collect();
    Ok(NeighborGraph { k, neighbors })
}

/// The graph `knn_graph(vectors, k)` would return, where `base` was built on every
/// vector except the last with at least `min(k, n - 2)` neighbours per point.
pub fn knn_graph_append(base: &NeighborGraph, vectors: &[SparseVector], k: usize) -> Result<NeighborGraph> {
    let n = vectors.len();
    if base.len() + 1 != n {
        return Err(StanceError::InvalidParameter(format!(
            "base graph has {} points, expected {}",
            base.len(),
            n.saturating_sub(1)
        )));
    }
    if k == 0 || k > n - 1 {
        return Err(StanceError::InvalidParameter(format!(
            "k must be in 1..={} for {n} points, got {k}",
            n - 1
        )));
    }
    if base.k() < k.min(n - 2) {
        return Err(StanceError::InvalidParameter(format!(
            "base graph keeps {} neighbours, need {}",
            base.k(),
            k.min(n - 2)
        )));
    }
    let index = CosineIndex::new(vectors);
    let new = n - 1;
    let mut neighbors: Vec<Vec<Neighbor>> = base
        .iter()
        .enumerate()
        .map(|(i, list)| {
            let extra = Neighbor {
                index: new,
                distance: index.distance(i, new),
            };
            // `new` has the largest index, so it follows every equal distance.
            let pos = list.partition_point(|nb| nb.distance <= extra.distance);
            let mut out: Vec<Neighbor> = list[..pos.min(k)].to_vec();
            if out.len() < k {
                out.push(extra);
                out.extend(list[pos..].iter().take(k - out.len()));
            }
            out
        })
        .collect();
    neighbors.push(index.nearest(new, k));
    Ok(NeighborGraph { k, neighbors })
}
