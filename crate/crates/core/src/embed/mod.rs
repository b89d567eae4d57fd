//! UMAP: exact cosine k-NN, fuzzy simplicial set, stochastic layout.

pub mod fuzzy;
pub mod knn;
pub mod layout;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use fuzzy::{fuzzy_simplicial_set, smooth_knn_sigma, Edge, FuzzyGraph};
pub use knn::{cosine_distance, knn_graph, knn_graph_append, Neighbor, NeighborGraph};
pub use layout::{fit_ab, optimize_layout, LayoutMode, LayoutParams};

use crate::error::{Result, StanceError};
use crate::features::SparseVector;
use crate::points::Points;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UmapParams {
    pub n_neighbors: usize,
    pub dim: usize,
    pub min_dist: f64,
    pub epochs: usize,
    pub negative_sample_rate: usize,
    /// Clamp `n_neighbors` to `n - 1` on small inputs instead of failing.
    pub clamp_k: bool,
    pub mode: LayoutMode,
}

impl Default for UmapParams {
    fn default() -> Self {
        UmapParams {
            n_neighbors: 15,
            dim: 2,
            min_dist: 0.1,
            epochs: 200,
            negative_sample_rate: 5,
            clamp_k: true,
            mode: LayoutMode::Deterministic,
        }
    }
}

impl UmapParams {
    /// Neighbour count used for `n` points.
    pub fn effective_k(&self, n: usize) -> usize {
        if self.clamp_k {
            self.n_neighbors.min(n.saturating_sub(1)).max(1)
        } else {
            self.n_neighbors
        }
    }

    pub fn layout(&self) -> LayoutParams {
        LayoutParams {
            dim: self.dim,
            epochs: self.epochs,
            min_dist: self.min_dist,
            negative_sample_rate: self.negative_sample_rate,
            mode: self.mode,
            ..LayoutParams::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub coords: Points,
    pub seed: u64,
    pub params: UmapParams,
}

impl Embedding {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.coords.row(i)
    }

    /// `point_id,x0,...,x{d-1}` with a header row.
    pub fn to_csv(&self, ids: Option<&[String]>) -> String {
        let dim = self.coords.dim();
        let mut out = String::from("point_id");
        for d in 0..dim {
            out.push_str(&format!(",x{d}"));
        }
        out.push('\n');
        for (i, row) in self.coords.rows().enumerate() {
            match ids {
                Some(ids) => out.push_str(&ids[i]),
                None => out.push_str(&i.to_string()),
            }
            for x in row {
                out.push_str(&format!(",{x}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path, ids: Option<&[String]>) -> Result<()> {
        fs::write(path, self.to_csv(ids)).map_err(|e| StanceError::io(path, e))
    }
}

pub fn umap(vectors: &[SparseVector], params: &UmapParams, seed: u64) -> Result<Embedding> {
    let graph = knn_graph(vectors, params.effective_k(vectors.len()))?;
    umap_from_graph(&graph, params, seed)
}

/// Layout from a precomputed neighbour graph.
pub fn umap_from_graph(graph: &NeighborGraph, params: &UmapParams, seed: u64) -> Result<Embedding> {
    let fuzzy = fuzzy_simplicial_set(graph);
    let coords = optimize_layout(&fuzzy, &params.layout(), seed)?;
    Ok(Embedding {
        coords,
        seed,
        params: *params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(pairs: &[(u32, u32)]) -> SparseVector {
        SparseVector::from_pairs(pairs.iter().copied())
    }

    #[test]
    fn two_points_need_clamping() {
        let pts = vec![v(&[(0, 1)]), v(&[(1, 1)])];
        let strict = UmapParams {
            clamp_k: false,
            ..UmapParams::default()
        };
        assert!(umap(&pts, &strict, 0).is_err());
        let out = umap(&pts, &UmapParams::default(), 0).unwrap();
        assert_eq!(out.len(), 2);
        assert!(umap(&pts[..1], &UmapParams::default(), 0).is_err());
    }

    #[test]
    fn identical_inputs_stay_finite() {
        let pts = vec![v(&[(0, 2), (3, 1)]); 25];
        let out = umap(&pts, &UmapParams::default(), 3).unwrap();
        assert!(out.coords.all_finite());
        assert_eq!(out.len(), 25);
    }

    #[test]
    fn csv_dump_has_one_row_per_point() {
        let pts = vec![v(&[(0, 1)]), v(&[(1, 1)]), v(&[(0, 1), (1, 1)])];
        let out = umap(
            &pts,
            &UmapParams {
                epochs: 5,
                ..UmapParams::default()
            },
            0,
        )
        .unwrap();
        let csv = out.to_csv(None);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "point_id,x0,x1");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,"));
    }
}
