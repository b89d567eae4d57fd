//! One cell of the experiment grid: train or prepare a method on the training users,
//! label every test user, and score the labels against gold.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::unsupervised::{classify_batch_unsupervised, Diagnostics, TrainingSet};
use super::Method;
use crate::classify::{
    aggregate_user, ft_predict, ft_train, load_external_scores, svm_predict, svm_train, ClassDistribution,
};
use crate::corpus::{UserCorpus, UserRecord};
use crate::error::{Result, StanceError};
use crate::evalkit::{confusion, ReportRow};
use crate::features::{build_vocab, user_vector, FeatureMode};
use crate::labels::{Class, StanceLabel};
use crate::preprocess::tokenize;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub row: ReportRow,
    pub predictions: BTreeMap<String, StanceLabel>,
    /// Filled for `UNSUPERVISED` only.
    pub diagnostics: BTreeMap<String, Diagnostics>,
}

/// `train_corpus` users carry their training label in `gold_label`; users without one
/// are used only by `UNSUPERVISED`, as unlabeled points.
pub fn run_experiment(
    config: &ExperimentConfig,
    train_corpus: &UserCorpus,
    test_corpus: &UserCorpus,
    gold: &BTreeMap<String, Class>,
) -> Result<ExperimentOutcome> {
    config.validate()?;
    if test_corpus.is_empty() {
        return Err(StanceError::EmptyInput("test set"));
    }
    if config.expand_train && !train_corpus.has_timelines() {
        return Err(StanceError::MissingTimeline("training-set"));
    }
    if config.expand_test && !test_corpus.has_timelines() {
        return Err(StanceError::MissingTimeline("test-set"));
    }
    if let Some(user) = test_corpus.users.keys().find(|u| !gold.contains_key(*u)) {
        return Err(StanceError::MissingGold(user.clone()));
    }

    let test_users: Vec<&UserRecord> = test_corpus.users.values().collect();
    let mut diagnostics = BTreeMap::new();
    let labels: Vec<StanceLabel> = match config.method {
        Method::SvmRt => svm_labels(config, FeatureMode::Rt, train_corpus, &test_users)?,
        Method::SvmText => svm_labels(config, FeatureMode::Text, train_corpus, &test_users)?,
        Method::TextClf => text_labels(config, train_corpus, &test_users)?,
        Method::External => external_labels(config, &test_users)?,
        Method::Unsupervised => {
            let results = unsupervised_labels(config, train_corpus, &test_users)?;
            results
                .into_iter()
                .zip(&test_users)
                .map(|((label, diag), user)| {
                    diagnostics.insert(user.user_id.clone(), diag);
                    label
                })
                .collect()
        }
    };

    let predictions: BTreeMap<String, StanceLabel> =
        test_users.iter().map(|u| u.user_id.clone()).zip(labels).collect();
    let cm = confusion(&predictions, gold)?;
    Ok(ExperimentOutcome {
        row: ReportRow::new(&config.topic, config.method.name(), config.condition().name(), cm),
        predictions,
        diagnostics,
    })
}

fn labeled_training(train: &UserCorpus) -> Vec<(&UserRecord, Class)> {
    train
        .users
        .values()
        .filter_map(|u| u.gold_label.map(|g| (u, g)))
        .collect()
}

fn svm_labels(
    config: &ExperimentConfig,
    mode: FeatureMode,
    train: &UserCorpus,
    test: &[&UserRecord],
) -> Result<Vec<StanceLabel>> {
    let h = &config.hyperparameters;
    let labeled = labeled_training(train);
    let mut labeled_corpus = UserCorpus::new(train.topic.clone());
    for (u, _) in &labeled {
        labeled_corpus.insert((*u).clone());
    }
    let min_users = h.min_vocab_users.unwrap_or(mode.default_min_users());
    let vocab = build_vocab(&labeled_corpus, mode, min_users, config.expand_train);
    let examples: Vec<_> = labeled
        .iter()
        .map(|(u, c)| (user_vector(u, &vocab, config.expand_train), c.sign()))
        .collect();
    let model = svm_train(&examples, vocab.len(), h.svm_c)?;
    Ok(test
        .iter()
        .map(|u| {
            let (_, sign) = svm_predict(&model, &user_vector(u, &vocab, config.expand_test));
            StanceLabel::Class(Class::from_sign(sign))
        })
        .collect())
}

fn tweet_tokens(user: &UserRecord, use_timeline: bool) -> impl Iterator<Item = Vec<String>> + '_ {
    user.selected_tweets(use_timeline)
        .map(|t| tokenize(&t.text, t.retweeted_user.as_deref()).into_inner())
}

fn text_labels(
    config: &ExperimentConfig,
    train: &UserCorpus,
    test: &[&UserRecord],
) -> Result<Vec<StanceLabel>> {
    // Every tweet inherits its author's label.
    let examples: Vec<_> = labeled_training(train)
        .into_iter()
        .flat_map(|(u, c)| {
            tweet_tokens(u, config.expand_train).map(move |t| (crate::preprocess::TokenList::new(t), c))
        })
        .collect();
    let params = crate::classify::TextModelParams {
        seed: config.seed,
        ..config.hyperparameters.text
    };
    let (model, _) = ft_train(&examples, &params)?;
    test.iter()
        .map(|u| {
            let dists: Vec<ClassDistribution> = tweet_tokens(u, config.expand_test)
                .map(|t| ft_predict(&model, &t))
                .collect();
            Ok(match aggregate_user(&dists) {
                Ok((class, _)) => StanceLabel::Class(class),
                Err(StanceError::EmptyInput(_)) => StanceLabel::Unassigned,
                Err(e) => return Err(e),
            })
        })
        .collect()
}

fn external_labels(config: &ExperimentConfig, test: &[&UserRecord]) -> Result<Vec<StanceLabel>> {
    let path = config
        .external_scores
        .as_deref()
        .ok_or_else(|| StanceError::Config("EXTERNAL needs external_scores".into()))?;
    let scores = load_external_scores(path)?;
    let mut missing = 0usize;
    let labels = test
        .iter()
        .map(|u| {
            let dists: Vec<ClassDistribution> = u
                .selected_tweets(config.expand_test)
                .filter_map(|t| {
                    let d = scores.scores.get(&t.id).copied();
                    missing += usize::from(d.is_none());
                    d
                })
                .collect();
            aggregate_user(&dists).map_or(StanceLabel::Unassigned, |(c, _)| StanceLabel::Class(c))
        })
        .collect();
    if missing > 0 {
        log::warn!("{missing} test tweet(s) have no external score");
    }
    Ok(labels)
}

fn unsupervised_labels(
    config: &ExperimentConfig,
    train: &UserCorpus,
    test: &[&UserRecord],
) -> Result<Vec<(StanceLabel, Diagnostics)>> {
    let params = &config.hyperparameters.unsupervised;
    let train_list: Vec<(UserRecord, StanceLabel)> = train
        .users
        .values()
        .map(|u| {
            let label = u.gold_label.map_or(StanceLabel::Unassigned, StanceLabel::Class);
            (u.clone(), label)
        })
        .collect();
    let expansion = (config.expand_train, config.expand_test);
    if params.batch {
        return classify_batch_unsupervised(test, &train_list, params, config.seed, expansion);
    }
    let set = TrainingSet::new(&train_list, params, config.expand_train)?;
    let classify = |(i, user): (usize, &&UserRecord)| {
        set.classify(user, config.expand_test, config.seed.wrapping_add(i as u64))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        test.par_iter().enumerate().map(classify).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        test.iter().enumerate().map(classify).collect()
    }
}
