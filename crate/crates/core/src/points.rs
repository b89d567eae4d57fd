use serde::{Deserialize, Serialize};

use crate::error::{Result, StanceError};

/// Dense row-major `n × dim` coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Points> {
        if dim == 0 {
            return Err(StanceError::InvalidParameter("dimension must be positive".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(StanceError::InvalidParameter(format!(
                "{} values do not form rows of width {dim}",
                data.len()
            )));
        }
        Ok(Points { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Points> {
        let dim = rows.first().map_or(1, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(StanceError::InvalidParameter("ragged rows".into()));
        }
        Points::new(dim, rows.concat())
    }

    pub fn zeros(n: usize, dim: usize) -> Points {
        Points {
            dim,
            data: vec![0.0; n * dim],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}
