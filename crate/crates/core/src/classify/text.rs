//! Shallow text classifier: a tweet is the mean of its token embeddings, followed by a
//! linear softmax layer. Trained with per-example SGD on cross-entropy.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distribution::ClassDistribution;
use crate::error::{Result, StanceError};
use crate::labels::Class;
use crate::preprocess::TokenList;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextModelParams {
    pub dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TextModelParams {
    fn default() -> Self {
        TextModelParams {
            dim: 100,
            learning_rate: 0.1,
            epochs: 5,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamGroup {
    Embeddings,
    OutputWeights,
    OutputBias,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TextModelData")]
pub struct TextModel {
    dim: usize,
    vocab: Vec<String>,
    /// `|V| x dim`, row-major.
    embeddings: Vec<f64>,
    /// `2 x dim`, one row per class.
    output_weights: Vec<f64>,
    output_bias: [f64; 2],
    #[serde(skip)]
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct TextModelData {
    dim: usize,
    vocab: Vec<String>,
    embeddings: Vec<f64>,
    output_weights: Vec<f64>,
    output_bias: [f64; 2],
}

impl TryFrom<TextModelData> for TextModel {
    type Error = String;

    fn try_from(d: TextModelData) -> std::result::Result<Self, String> {
        if d.dim == 0 || d.embeddings.len() != d.vocab.len() * d.dim || d.output_weights.len() != 2 * d.dim {
            return Err("text model parameter shapes do not match its vocabulary".into());
        }
        let mut model = TextModel {
            dim: d.dim,
            vocab: d.vocab,
            embeddings: d.embeddings,
            output_weights: d.output_weights,
            output_bias: d.output_bias,
            index: HashMap::new(),
        };
        model.rebuild_index();
        Ok(model)
    }
}

/// Gradient of the loss on one example. Embedding rows are listed only for tokens
/// that occur in it.
#[derive(Clone, Debug, PartialEq)]
pub struct TextGradient {
    pub embeddings: BTreeMap<usize, Vec<f64>>,
    pub output_weights: Vec<f64>,
    pub output_bias: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    /// Mean loss over each epoch, measured before each example's update.
    pub epoch_losses: Vec<f64>,
    pub skipped_empty: usize,
}

impl TextModel {
    /// Assembles a model from raw parameters. Panics if shapes disagree.
    pub fn from_parts(
        vocab: Vec<String>,
        dim: usize,
        embeddings: Vec<f64>,
        output_weights: Vec<f64>,
        output_bias: [f64; 2],
    ) -> TextModel {
        assert!(dim >= 1, "embedding dimension must be positive");
        assert_eq!(embeddings.len(), vocab.len() * dim, "embedding shape");
        assert_eq!(output_weights.len(), 2 * dim, "output weight shape");
        let mut model = TextModel {
            dim,
            vocab,
            embeddings,
            output_weights,
            output_bias,
            index: HashMap::new(),
        };
        model.rebuild_index();
        model
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn embedding(&self, token: &str) -> Option<&[f64]> {
        let i = *self.index.get(token)?;
        Some(&self.embeddings[i * self.dim..(i + 1) * self.dim])
    }

    pub fn params(&self, group: ParamGroup) -> &[f64] {
        match group {
            ParamGroup::Embeddings => &self.embeddings,
            ParamGroup::OutputWeights => &self.output_weights,
            ParamGroup::OutputBias => &self.output_bias,
        }
    }

    pub fn params_mut(&mut self, group: ParamGroup) -> &mut [f64] {
        match group {
            ParamGroup::Embeddings => &mut self.embeddings,
            ParamGroup::OutputWeights => &mut self.output_weights,
            ParamGroup::OutputBias => &mut self.output_bias,
        }
    }

    pub fn all_finite(&self) -> bool {
        self.embeddings
            .iter()
            .chain(&self.output_weights)
            .chain(&self.output_bias)
            .all(|v| v.is_finite())
    }

    fn token_ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().filter_map(|t| self.index.get(t).copied()).collect()
    }

    fn hidden(&self, ids: &[usize]) -> Vec<f64> {
        let mut rep = vec![0.0; self.dim];
        for &id in ids {
            let row = &self.embeddings[id * self.dim..(id + 1) * self.dim];
            for (r, e) in rep.iter_mut().zip(row) {
                *r += e;
            }
        }
        let inv = 1.0 / ids.len() as f64;
        rep.iter_mut().for_each(|r| *r *= inv);
        rep
    }

    fn logits(&self, rep: &[f64]) -> [f64; 2] {
        let mut out = self.output_bias;
        for (c, o) in out.iter_mut().enumerate() {
            let w = &self.output_weights[c * self.dim..(c + 1) * self.dim];
            *o += w.iter().zip(rep).map(|(a, b)| a * b).sum::<f64>();
        }
        out
    }

    /// Cross-entropy of `class` given the in-vocabulary tokens, or `None` if none remain.
    pub fn loss(&self, tokens: &[String], class: Class) -> Option<f64> {
        let ids = self.token_ids(tokens);
        if ids.is_empty() {
            return None;
        }
        let logits = self.logits(&self.hidden(&ids));
        Some(cross_entropy(logits, class))
    }

    pub fn loss_and_gradient(&self, tokens: &[String], class: Class) -> Option<(f64, TextGradient)> {
        let ids = self.token_ids(tokens);
        if ids.is_empty() {
            return None;
        }
        let rep = self.hidden(&ids);
        let logits = self.logits(&rep);
        let loss = cross_entropy(logits, class);
        let probs = ClassDistribution::from_logits(logits).probs();
        let mut g_logit = probs;
        g_logit[class.index()] -= 1.0;

        let d = self.dim;
        let mut output_weights = vec![0.0; 2 * d];
        let mut g_rep = vec![0.0; d];
        for c in 0..2 {
            let w = &self.output_weights[c * d..(c + 1) * d];
            for j in 0..d {
                output_weights[c * d + j] = g_logit[c] * rep[j];
                g_rep[j] += g_logit[c] * w[j];
            }
        }
        let inv = 1.0 / ids.len() as f64;
        let mut embeddings: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for &id in &ids {
            let row = embeddings.entry(id).or_insert_with(|| vec![0.0; d]);
            for (r, g) in row.iter_mut().zip(&g_rep) {
                *r += g * inv;
            }
        }
        Some((
            loss,
            TextGradient {
                embeddings,
                output_weights,
                output_bias: g_logit,
            },
        ))
    }

    fn apply(&mut self, grad: &TextGradient, lr: f64) {
        let d = self.dim;
        for (&id, row) in &grad.embeddings {
            for (e, g) in self.embeddings[id * d..(id + 1) * d].iter_mut().zip(row) {
                *e -= lr * g;
            }
        }
        for (w, g) in self.output_weights.iter_mut().zip(&grad.output_weights) {
            *w -= lr * g;
        }
        for c in 0..2 {
            self.output_bias[c] -= lr * grad.output_bias[c];
        }
    }
}

fn cross_entropy(logits: [f64; 2], class: Class) -> f64 {
    let m = logits[0].max(logits[1]);
    let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
    lse - logits[class.index()]
}

pub fn ft_train(
    examples: &[(TokenList, Class)],
    params: &TextModelParams,
) -> Result<(TextModel, TrainReport)> {
    if params.dim == 0 {
        return Err(StanceError::InvalidParameter(
            "embedding dimension must be positive".into(),
        ));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate.is_finite()) {
        return Err(StanceError::InvalidParameter(
            "learning rate must be positive".into(),
        ));
    }
    let usable: Vec<&(TokenList, Class)> = examples.iter().filter(|(t, _)| !t.is_empty()).collect();
    let skipped_empty = examples.len() - usable.len();
    if skipped_empty > 0 {
        log::warn!("skipping {skipped_empty} empty training examples");
    }
    let mut seen = [false; 2];
    for (_, c) in &usable {
        seen[c.index()] = true;
    }
    if !(seen[0] && seen[1]) {
        return Err(StanceError::SingleClass);
    }

    let vocab: Vec<String> = usable
        .iter()
        .flat_map(|(t, _)| t.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let d = params.dim;
    let bound = 1.0 / d as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let embeddings = (0..vocab.len() * d)
        .map(|_| rng.gen_range(-bound..=bound))
        .collect();
    let output_weights = (0..2 * d).map(|_| rng.gen_range(-bound..=bound)).collect();
    let mut model = TextModel::from_parts(vocab, d, embeddings, output_weights, [0.0; 2]);

    let total_steps = (params.epochs * usable.len()) as f64;
    let mut step = 0usize;
    let mut order: Vec<usize> = (0..usable.len()).collect();
    let mut epoch_losses = Vec::with_capacity(params.epochs);
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for &i in &order {
            let (tokens, class) = usable[i];
            let lr = params.learning_rate * (1.0 - step as f64 / total_steps);
            step += 1;
            let (loss, grad) = model
                .loss_and_gradient(tokens, *class)
                .expect("training tokens are in the vocabulary");
            sum += loss;
            model.apply(&grad, lr);
        }
        if !model.all_finite() {
            return Err(StanceError::NonFiniteGradient { epoch });
        }
        epoch_losses.push(sum / usable.len() as f64);
    }
    Ok((
        model,
        TrainReport {
            epoch_losses,
            skipped_empty,
        },
    ))
}

/// Class distribution for one tweet; uniform when no token is in the vocabulary.
pub fn ft_predict(model: &TextModel, tokens: &[String]) -> ClassDistribution {
    let ids = model.token_ids(tokens);
    if ids.is_empty() {
        return ClassDistribution::UNIFORM;
    }
    ClassDistribution::from_logits(model.logits(&model.hidden(&ids)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> TokenList {
        TokenList::new(words.iter().map(|w| w.to_string()).collect())
    }

    fn toy() -> Vec<(TokenList, Class)> {
        (0..100)
            .map(|i| {
                if i % 2 == 0 {
                    (toks(&["aa", "common"]), Class::ZERO)
                } else {
                    (toks(&["bb", "common"]), Class::ONE)
                }
            })
            .collect()
    }

    #[test]
    fn separable_toy_set() {
        let params = TextModelParams {
            dim: 10,
            ..TextModelParams::default()
        };
        let data = toy();
        let (model, report) = ft_train(&data, &params).unwrap();
        for w in report.epoch_losses.windows(2) {
            assert!(w[1] < w[0], "{:?}", report.epoch_losses);
        }
        for (t, c) in &data {
            assert_eq!(ft_predict(&model, t).argmax(), *c);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let params = TextModelParams {
            dim: 8,
            seed: 4,
            ..TextModelParams::default()
        };
        let a = ft_train(&toy(), &params).unwrap().0;
        let b = ft_train(&toy(), &params).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_fallbacks() {
        let zero = TextModel::from_parts(vec!["x".into()], 3, vec![0.3; 3], vec![0.0; 6], [0.0; 2]);
        assert_eq!(ft_predict(&zero, &toks(&["x"])), ClassDistribution::UNIFORM);
        let (model, _) = ft_train(
            &toy(),
            &TextModelParams {
                dim: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(
            ft_predict(&model, &toks(&["zz", "yy"])),
            ClassDistribution::UNIFORM
        );
        assert_eq!(ft_predict(&model, &toks(&[])), ClassDistribution::UNIFORM);
    }

    #[test]
    fn rejects_single_class_and_counts_empty() {
        let one = vec![(toks(&["a"]), Class::ZERO), (toks(&[]), Class::ONE)];
        assert!(matches!(
            ft_train(&one, &TextModelParams::default()),
            Err(StanceError::SingleClass)
        ));
        let mut data = toy();
        data.push((toks(&[]), Class::ZERO));
        let (_, report) = ft_train(
            &data,
            &TextModelParams {
                dim: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(report.skipped_empty, 1);
    }
}
