//! L2-regularized hinge-loss linear SVM solved by dual coordinate descent.
//!
//! The bias is learned as the weight of an implicit constant-1 feature, so it is
//! regularized together with the other weights.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StanceError};
use crate::features::SparseVector;

/// A feature row the linear models can consume: sparse counts or a dense real vector.
pub trait Features {
    fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_;

    fn dot(&self, dense: &[f64]) -> f64 {
        self.terms()
            .filter(|&(i, _)| i < dense.len())
            .map(|(i, v)| dense[i] * v)
            .sum()
    }

    fn squared_norm(&self) -> f64 {
        self.terms().map(|(_, v)| v * v).sum()
    }

    fn max_index(&self) -> Option<usize> {
        self.terms().map(|(i, _)| i).max()
    }
}

impl Features for SparseVector {
    fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries().iter().map(|&(i, c)| (i as usize, f64::from(c)))
    }
}

impl Features for Vec<f64> {
    fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.iter().copied().enumerate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    /// Stop once the largest projected-gradient violation of a pass falls below this.
    pub tolerance: f64,
    pub max_passes: usize,
    /// Seeds the per-pass coordinate order.
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            tolerance: 1e-8,
            max_passes: 10_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
}

impl LinearModel {
    pub fn score<X: Features + ?Sized>(&self, x: &X) -> f64 {
        x.dot(&self.weights) + self.bias
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmFit {
    pub model: LinearModel,
    pub alphas: Vec<f64>,
    /// `½ αᵀQα − Σα` at the returned point (the minimised dual).
    pub dual_objective: f64,
    /// Largest projected-gradient violation over all coordinates at termination.
    pub kkt_violation: f64,
    pub passes: usize,
}

fn validate<X: Features>(examples: &[(X, i8)], dim: usize) -> Result<()> {
    let mut seen = [false; 2];
    for (x, y) in examples {
        match y {
            1 => seen[0] = true,
            -1 => seen[1] = true,
            other => {
                return Err(StanceError::InvalidParameter(format!(
                    "SVM labels must be -1 or +1, got {other}"
                )))
            }
        }
        if x.max_index().is_some_and(|i| i >= dim) {
            return Err(StanceError::InvalidParameter(format!(
                "feature index beyond dimension {dim}"
            )));
        }
    }
    if !(seen[0] && seen[1]) {
        return Err(StanceError::SingleClass);
    }
    Ok(())
}

pub fn svm_train_detailed<X: Features>(
    examples: &[(X, i8)],
    dim: usize,
    params: &SvmParams,
) -> Result<SvmFit> {
    validate(examples, dim)?;
    if params.c.is_nan() || params.c <= 0.0 {
        return Err(StanceError::InvalidParameter("C must be positive".into()));
    }
    let c = params.c;
    let n = examples.len();
    let ys: Vec<f64> = examples.iter().map(|(_, y)| f64::from(*y)).collect();
    // Diagonal of Q including the constant feature.
    let qd: Vec<f64> = examples.iter().map(|(x, _)| x.squared_norm() + 1.0).collect();
    let mut alphas = vec![0.0; n];
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let margin = |w: &[f64], b: f64, i: usize| examples[i].0.dot(w) + b;

    let mut passes = 0;
    while passes < params.max_passes {
        passes += 1;
        order.shuffle(&mut rng);
        let mut max_violation = 0.0_f64;
        for &i in &order {
            let (x, _) = &examples[i];
            let yi = ys[i];
            let g = yi * margin(&w, b, i) - 1.0;
            let pg = projected_gradient(g, alphas[i], c);
            max_violation = max_violation.max(pg.abs());
            if pg != 0.0 {
                let old = alphas[i];
                alphas[i] = (old - g / qd[i]).clamp(0.0, c);
                let step = (alphas[i] - old) * yi;
                for (j, v) in x.terms() {
                    w[j] += step * v;
                }
                b += step;
            }
        }
        if max_violation < params.tolerance {
            break;
        }
    }

    let kkt_violation = (0..n)
        .map(|i| projected_gradient(ys[i] * margin(&w, b, i) - 1.0, alphas[i], c).abs())
        .fold(0.0, f64::max);
    let w_norm_sq: f64 = w.iter().map(|v| v * v).sum::<f64>() + b * b;
    let dual_objective = 0.5 * w_norm_sq - alphas.iter().sum::<f64>();

    Ok(SvmFit {
        model: LinearModel {
            weights: w,
            bias: b,
            c,
        },
        alphas,
        dual_objective,
        kkt_violation,
        passes,
    })
}

fn projected_gradient(g: f64, alpha: f64, c: f64) -> f64 {
    if alpha <= 0.0 {
        g.min(0.0)
    } else if alpha >= c {
        g.max(0.0)
    } else {
        g
    }
}

pub fn svm_train<X: Features>(examples: &[(X, i8)], dim: usize, c: f64) -> Result<LinearModel> {
    let params = SvmParams {
        c,
        ..SvmParams::default()
    };
    svm_train_detailed(examples, dim, &params).map(|fit| fit.model)
}

/// Decision value and predicted sign; a zero score goes to `+1`.
pub fn svm_predict<X: Features + ?Sized>(model: &LinearModel, x: &X) -> (f64, i8) {
    let score = model.score(x);
    (score, if score >= 0.0 { 1 } else { -1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(pairs: &[(u32, u32)]) -> SparseVector {
        SparseVector::from_pairs(pairs.iter().copied())
    }

    #[test]
    fn zero_model_predicts_positive() {
        let model = LinearModel {
            weights: vec![0.0; 3],
            bias: 0.0,
            c: 1.0,
        };
        assert_eq!(svm_predict(&model, &v(&[(1, 4)])), (0.0, 1));
    }

    #[test]
    fn empty_vector_scores_bias() {
        let model = LinearModel {
            weights: vec![1.0, -2.0],
            bias: 0.25,
            c: 1.0,
        };
        assert_eq!(svm_predict(&model, &SparseVector::default()).0, 0.25);
    }

    #[test]
    fn separable_square() {
        let data: Vec<(Vec<f64>, i8)> = vec![
            (vec![0.0, 2.0], 1),
            (vec![0.0, -2.0], -1),
            (vec![1.0, 2.0], 1),
            (vec![1.0, -2.0], -1),
        ];
        let model = svm_train(&data, 2, 1.0).unwrap();
        for (x, y) in &data {
            assert_eq!(svm_predict(&model, x).1, *y);
        }
        assert!(svm_predict(&model, &vec![0.0, 2.0]).0 > 0.0);
    }

    #[test]
    fn single_class_is_an_error() {
        let data = vec![(v(&[(0, 1)]), 1), (v(&[(1, 1)]), 1)];
        assert!(matches!(svm_train(&data, 2, 1.0), Err(StanceError::SingleClass)));
        let bad = vec![(v(&[(0, 1)]), 2), (v(&[(1, 1)]), -1)];
        assert!(svm_train(&bad, 2, 1.0).is_err());
    }

    #[test]
    fn separates_two_sparse_groups() {
        let data = vec![
            (v(&[(0, 3)]), 1),
            (v(&[(0, 1), (2, 1)]), 1),
            (v(&[(1, 2)]), -1),
            (v(&[(1, 1), (2, 1)]), -1),
        ];
        let fit = svm_train_detailed(&data, 3, &SvmParams::default()).unwrap();
        for (x, y) in &data {
            assert_eq!(svm_predict(&fit.model, x).1, *y);
        }
        assert!(fit.kkt_violation < 1e-3);
    }
}
