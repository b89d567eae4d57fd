//! Experiment configuration and its `key = value` text format.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are listed in
//! `docs/formats.md`; the same keys are accepted by the CLI's `--set key=value`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::unsupervised::UnsupervisedParams;
use super::{Condition, Method};
use crate::classify::TextModelParams;
use crate::embed::LayoutMode;
use crate::error::{Result, StanceError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub svm_c: f64,
    /// Vocabulary cutoff for the SVM baselines; `None` uses the feature mode default.
    pub min_vocab_users: Option<usize>,
    pub text: TextModelParams,
    pub unsupervised: UnsupervisedParams,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            svm_c: 1.0,
            min_vocab_users: None,
            text: TextModelParams::default(),
            unsupervised: UnsupervisedParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub topic: String,
    pub method: Method,
    pub expand_train: bool,
    pub expand_test: bool,
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
    /// Tweet score file, required by `EXTERNAL`.
    pub external_scores: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(topic: impl Into<String>, method: Method) -> ExperimentConfig {
        ExperimentConfig {
            topic: topic.into(),
            method,
            expand_train: false,
            expand_test: false,
            hyperparameters: Hyperparameters::default(),
            seed: 0,
            external_scores: None,
        }
    }

    pub fn condition(&self) -> Condition {
        Condition::from_flags(self.expand_train, self.expand_test)
    }

    pub fn with_condition(mut self, condition: Condition) -> ExperimentConfig {
        self.expand_train = condition.expand_train();
        self.expand_test = condition.expand_test();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.method == Method::External && self.external_scores.is_none() {
            return Err(StanceError::Config(
                "EXTERNAL needs external_scores = <path>".into(),
            ));
        }
        if self.hyperparameters.svm_c.is_nan() || self.hyperparameters.svm_c <= 0.0 {
            return Err(StanceError::Config("svm.c must be positive".into()));
        }
        Ok(())
    }

    /// Sets one field from its textual key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let h = &mut self.hyperparameters;
        let u = &mut h.unsupervised;
        match key {
            "topic" => self.topic = value.to_string(),
            "method" => self.method = value.parse()?,
            "expand_train" => self.expand_train = parse_value(key, value)?,
            "expand_test" => self.expand_test = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "external_scores" => self.external_scores = Some(PathBuf::from(value)),
            "svm.c" => h.svm_c = parse_value(key, value)?,
            "features.min_users" => h.min_vocab_users = Some(parse_value(key, value)?),
            "text.dim" => h.text.dim = parse_value(key, value)?,
            "text.lr" => h.text.learning_rate = parse_value(key, value)?,
            "text.epochs" => h.text.epochs = parse_value(key, value)?,
            "umap.n_neighbors" => u.umap.n_neighbors = parse_value(key, value)?,
            "umap.dim" => u.umap.dim = parse_value(key, value)?,
            "umap.min_dist" => u.umap.min_dist = parse_value(key, value)?,
            "umap.epochs" => u.umap.epochs = parse_value(key, value)?,
            "umap.negative_sample_rate" => u.umap.negative_sample_rate = parse_value(key, value)?,
            "umap.mode" => {
                u.umap.mode = match value {
                    "deterministic" => LayoutMode::Deterministic,
                    "parallel" => LayoutMode::Parallel,
                    _ => return Err(bad_value(key, value)),
                }
            }
            "meanshift.quantile" => u.mean_shift.quantile = parse_value(key, value)?,
            "meanshift.min_members" => u.mean_shift.min_members = parse_value(key, value)?,
            "unsupervised.batch" => u.batch = parse_value(key, value)?,
            _ => return Err(StanceError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies every pair on top of `base`.
    pub fn from_pairs(base: ExperimentConfig, pairs: &BTreeMap<String, String>) -> Result<ExperimentConfig> {
        let mut config = base;
        for (k, v) in pairs {
            config.set(k, v)?;
        }
        Ok(config)
    }

    pub fn from_str_with_defaults(raw: &str) -> Result<ExperimentConfig> {
        let pairs = parse_key_values(raw)?;
        let config =
            ExperimentConfig::from_pairs(ExperimentConfig::new("default", Method::Unsupervised), &pairs)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let raw = fs::read_to_string(path).map_err(|e| StanceError::io(path, e))?;
        ExperimentConfig::from_str_with_defaults(&raw)
    }
}

fn bad_value(key: &str, value: &str) -> StanceError {
    StanceError::Config(format!("bad value {value:?} for {key}"))
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad_value(key, value))
}

/// `key = value` lines into a map; repeated keys are an error.
pub fn parse_key_values(raw: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(StanceError::parse(i + 1, "expected key = value"));
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(StanceError::parse(i + 1, "empty key"));
        }
        if out.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(StanceError::parse(i + 1, format!("key {key:?} repeated")));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_config_file() {
        let raw = "# run\ntopic = vaccine\nmethod = SVM_RT\nexpand_test = true\nseed=7\nsvm.c = 0.5\n\numap.mode = parallel\n";
        let c = ExperimentConfig::from_str_with_defaults(raw).unwrap();
        assert_eq!(c.topic, "vaccine");
        assert_eq!(c.method, Method::SvmRt);
        assert_eq!(c.condition(), Condition::ExpandedTest);
        assert_eq!(c.seed, 7);
        assert_eq!(c.hyperparameters.svm_c, 0.5);
        assert_eq!(c.hyperparameters.unsupervised.umap.mode, LayoutMode::Parallel);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(ExperimentConfig::from_str_with_defaults("method = BERT\n").is_err());
        assert!(ExperimentConfig::from_str_with_defaults("nonsense = 1\n").is_err());
        assert!(ExperimentConfig::from_str_with_defaults("seed = x\n").is_err());
        assert!(ExperimentConfig::from_str_with_defaults("seed = 1\nseed = 2\n").is_err());
        assert!(ExperimentConfig::from_str_with_defaults("just words\n").is_err());
        assert!(ExperimentConfig::from_str_with_defaults("method = EXTERNAL\n").is_err());
        assert!(
            ExperimentConfig::from_str_with_defaults("method = EXTERNAL\nexternal_scores = s.tsv\n").is_ok()
        );
    }
}
