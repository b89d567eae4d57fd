//! Supervised baselines and tweet-to-user score aggregation.

pub mod distribution;
pub mod external;
pub mod persist;
pub mod svm;
pub mod text;

pub use distribution::{aggregate_user, ClassDistribution};
pub use external::{load_external_scores, parse_external_scores, ExternalScores};
pub use persist::{load_model, save_model, vocab_hash, SavedModel};
pub use svm::{svm_predict, svm_train, svm_train_detailed, Features, LinearModel, SvmFit, SvmParams};
pub use text::{ft_predict, ft_train, ParamGroup, TextGradient, TextModel, TextModelParams, TrainReport};
