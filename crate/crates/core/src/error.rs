use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, StanceError>;

#[derive(Debug, Error)]
pub enum StanceError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("tweet id {id:?} appears twice with conflicting content")]
    ConflictingDuplicate { id: String },

    #[error("duplicate tweet id {id:?} in score file (line {line})")]
    DuplicateScore { id: String, line: usize },

    #[error("line {line}: negative probability for tweet {id:?}")]
    NegativeProbability { id: String, line: usize },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("all points coincide, bandwidth is zero; skip clustering for this input")]
    ZeroBandwidth,

    #[error("training data contains a single class; both classes are required")]
    SingleClass,

    #[error("{0} is empty")]
    EmptyInput(&'static str),

    #[error("non-finite gradient during layout optimization at epoch {epoch}")]
    NonFiniteGradient { epoch: usize },

    #[error("only {found} cluster(s) survived; inspect the embedding manually before bootstrapping")]
    TooFewClusters { found: usize },

    #[error("user {0:?} has a prediction but no gold label")]
    MissingGold(String),

    #[error("no assigned predictions; metrics are undefined")]
    NoAssignedPredictions,

    #[error("{0} expansion requested but no timeline tweets are loaded")]
    MissingTimeline(&'static str),

    #[error("unknown method {0:?}")]
    UnknownMethod(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl StanceError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        StanceError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        StanceError::Parse {
            line,
            message: message.into(),
        }
    }
}
