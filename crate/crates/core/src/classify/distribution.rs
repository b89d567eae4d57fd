use serde::{Deserialize, Serialize};

use crate::error::{Result, StanceError};
use crate::labels::Class;

/// Probabilities over the two stance classes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution([f64; 2]);

impl ClassDistribution {
    pub const UNIFORM: ClassDistribution = ClassDistribution([0.5, 0.5]);

    /// Accepts non-negative values summing to 1 within 1e-9.
    pub fn new(p0: f64, p1: f64) -> Option<ClassDistribution> {
        let ok = p0 >= 0.0 && p1 >= 0.0 && ((p0 + p1) - 1.0).abs() <= 1e-9;
        ok.then_some(ClassDistribution([p0, p1]))
    }

    /// Scales non-negative scores to sum to one.
    pub fn normalized(p0: f64, p1: f64) -> Option<ClassDistribution> {
        let total = p0 + p1;
        (p0 >= 0.0 && p1 >= 0.0 && total > 0.0 && total.is_finite())
            .then(|| ClassDistribution([p0 / total, p1 / total]))
    }

    pub fn from_logits(logits: [f64; 2]) -> ClassDistribution {
        let m = logits[0].max(logits[1]);
        let e0 = (logits[0] - m).exp();
        let e1 = (logits[1] - m).exp();
        let total = e0 + e1;
        ClassDistribution([e0 / total, e1 / total])
    }

    pub fn probs(&self) -> [f64; 2] {
        self.0
    }

    pub fn prob(&self, class: Class) -> f64 {
        self.0[class.index()]
    }

    /// Most probable class; ties go to class 0.
    pub fn argmax(&self) -> Class {
        if self.0[1] > self.0[0] {
            Class::ONE
        } else {
            Class::ZERO
        }
    }
}

/// Mean distribution over a user's tweets and its argmax.
pub fn aggregate_user(tweet_dists: &[ClassDistribution]) -> Result<(Class, ClassDistribution)> {
    if tweet_dists.is_empty() {
        return Err(StanceError::EmptyInput("tweet score list"));
    }
    let n = tweet_dists.len() as f64;
    let sum = tweet_dists
        .iter()
        .fold([0.0, 0.0], |acc, d| [acc[0] + d.0[0], acc[1] + d.0[1]]);
    let mean = ClassDistribution([sum[0] / n, sum[1] / n]);
    Ok((mean.argmax(), mean))
}
