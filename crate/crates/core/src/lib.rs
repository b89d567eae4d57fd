//! Stance classification for users with few posts.
//!
//! Users are represented by the accounts they retweet (or by their words), embedded
//! with UMAP and clustered with mean shift; supervised linear and shallow text
//! baselines and an evaluation kit complete the toolkit. [`synth`] generates
//! polarized corpora with known stances for end-to-end checks.

pub mod classify;
pub mod cluster;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod evalkit;
pub mod features;
pub mod labels;
pub mod pipeline;
pub mod points;
pub mod preprocess;
pub mod synth;

pub use error::{Result, StanceError};
pub use labels::{Class, StanceLabel};
pub use points::Points;
