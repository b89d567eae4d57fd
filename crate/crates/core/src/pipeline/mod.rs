//! Training-set bootstrapping, per-user unsupervised classification and the
//! expansion experiment grid.

pub mod bootstrap;
pub mod config;
pub mod experiment;
pub mod unsupervised;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::StanceError;

pub use bootstrap::{bootstrap_training_set, orient_by_inspection, BootstrapOutcome, BootstrapParams};
pub use config::{parse_key_values, ExperimentConfig, Hyperparameters};
pub use experiment::{run_experiment, ExperimentOutcome};
pub use unsupervised::{
    classify_batch_unsupervised, classify_user_unsupervised, Diagnostics, TrainingSet, UnassignedReason,
    UnsupervisedParams,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    SvmRt,
    SvmText,
    TextClf,
    External,
    Unsupervised,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::SvmRt,
        Method::SvmText,
        Method::TextClf,
        Method::External,
        Method::Unsupervised,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::SvmRt => "SVM_RT",
            Method::SvmText => "SVM_TEXT",
            Method::TextClf => "TEXTCLF",
            Method::External => "EXTERNAL",
            Method::Unsupervised => "UNSUPERVISED",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = StanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == upper)
            .ok_or_else(|| StanceError::UnknownMethod(s.to_string()))
    }
}

/// Which sides of the experiment use timeline tweets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    NoExpansion,
    ExpandedTest,
    ExpandedTrain,
    ExpandedBoth,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::NoExpansion,
        Condition::ExpandedTest,
        Condition::ExpandedTrain,
        Condition::ExpandedBoth,
    ];

    pub fn from_flags(expand_train: bool, expand_test: bool) -> Condition {
        match (expand_train, expand_test) {
            (false, false) => Condition::NoExpansion,
            (false, true) => Condition::ExpandedTest,
            (true, false) => Condition::ExpandedTrain,
            (true, true) => Condition::ExpandedBoth,
        }
    }

    pub fn expand_train(self) -> bool {
        matches!(self, Condition::ExpandedTrain | Condition::ExpandedBoth)
    }

    pub fn expand_test(self) -> bool {
        matches!(self, Condition::ExpandedTest | Condition::ExpandedBoth)
    }

    pub fn name(self) -> &'static str {
        match self {
            Condition::NoExpansion => "no_expansion",
            Condition::ExpandedTest => "expanded_test",
            Condition::ExpandedTrain => "expanded_train",
            Condition::ExpandedBoth => "expanded_both",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
