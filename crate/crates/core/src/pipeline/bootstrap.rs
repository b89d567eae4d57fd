//! Labeled training data from unlabeled active users: embed their retweet vectors,
//! cluster, and sample equally from the two largest clusters.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::{estimate_bandwidth, mean_shift, ClusterAssignment, MeanShiftParams};
use crate::corpus::{select_active_users, UserCorpus, UserRecord};
use crate::embed::{umap, Embedding, UmapParams};
use crate::error::{Result, StanceError};
use crate::features::{build_vocab, user_vector, FeatureMode};
use crate::labels::{Class, StanceLabel};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapParams {
    pub n_active: usize,
    pub min_tweets: usize,
    pub per_cluster: usize,
    pub seed: u64,
    pub umap: UmapParams,
    pub mean_shift: MeanShiftParams,
}

impl Default for BootstrapParams {
    fn default() -> Self {
        BootstrapParams {
            n_active: 5000,
            min_tweets: 10,
            per_cluster: 500,
            seed: 0,
            umap: UmapParams::default(),
            mean_shift: MeanShiftParams::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BootstrapOutcome {
    /// Sampled users of the larger cluster (class 0) followed by the other (class 1).
    pub users: Vec<(UserRecord, StanceLabel)>,
    /// Ids of the active users, in embedding order.
    pub active_ids: Vec<String>,
    pub embedding: Embedding,
    pub clusters: ClusterAssignment,
    /// Set when either cluster had fewer than `per_cluster` members.
    pub shortage: bool,
}

impl BootstrapOutcome {
    pub fn labels(&self) -> BTreeMap<String, Class> {
        self.users
            .iter()
            .filter_map(|(u, l)| l.class().map(|c| (u.user_id.clone(), c)))
            .collect()
    }

    /// Training corpus with the bootstrap labels as `gold_label`.
    pub fn to_corpus(&self, topic: &str) -> UserCorpus {
        let mut corpus = UserCorpus::new(topic);
        for (user, label) in &self.users {
            let mut user = user.clone();
            user.gold_label = label.class();
            corpus.insert(user);
        }
        corpus
    }

    pub fn flip(&mut self) {
        for (_, label) in &mut self.users {
            if let StanceLabel::Class(c) = label {
                *label = StanceLabel::Class(c.other());
            }
        }
    }
}

pub fn bootstrap_training_set(corpus: &UserCorpus, params: &BootstrapParams) -> Result<BootstrapOutcome> {
    if params.per_cluster == 0 {
        return Err(StanceError::InvalidParameter(
            "per_cluster must be positive".into(),
        ));
    }
    let active = select_active_users(corpus, params.n_active, params.min_tweets);
    if active.len() < 2 {
        return Err(StanceError::TooFewPoints {
            needed: 2,
            got: active.len(),
        });
    }
    let vocab = build_vocab(&active, FeatureMode::Rt, 1, false);
    let users: Vec<&UserRecord> = active.users.values().collect();
    let vectors: Vec<_> = users.iter().map(|u| user_vector(u, &vocab, false)).collect();
    let embedding = umap(&vectors, &params.umap, params.seed)?;
    let clusters = match estimate_bandwidth(&embedding.coords, params.mean_shift.quantile) {
        Ok(bw) => mean_shift(&embedding.coords, bw, params.mean_shift.min_members)?,
        Err(StanceError::ZeroBandwidth) => return Err(StanceError::TooFewClusters { found: 1 }),
        Err(e) => return Err(e),
    };
    if clusters.n_clusters() < 2 {
        return Err(StanceError::TooFewClusters {
            found: clusters.n_clusters(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(1));
    let mut sampled = Vec::new();
    let mut shortage = false;
    // Cluster ids are ordered by size, so cluster 0 is the larger one.
    for class in Class::ALL {
        let mut members: Vec<usize> = clusters.members(class.index()).collect();
        if members.len() < params.per_cluster {
            shortage = true;
            log::warn!(
                "cluster {} has only {} members; taking all of them instead of {}",
                class.index(),
                members.len(),
                params.per_cluster
            );
        }
        members.shuffle(&mut rng);
        members.truncate(params.per_cluster);
        members.sort_unstable();
        sampled.extend(
            members
                .into_iter()
                .map(|i| (users[i].clone(), StanceLabel::Class(class))),
        );
    }
    Ok(BootstrapOutcome {
        users: sampled,
        active_ids: users.iter().map(|u| u.user_id.clone()).collect(),
        embedding,
        clusters,
        shortage,
    })
}

/// Decides cluster polarity from a few reference labels, mimicking a manual check of
/// some users per cluster. Inspects up to `per_cluster` sampled users of each cluster
/// that have a reference label, and flips the outcome when most of them disagree.
/// Returns whether a flip happened.
pub fn orient_by_inspection(
    outcome: &mut BootstrapOutcome,
    reference: &BTreeMap<String, Class>,
    per_cluster: usize,
) -> bool {
    let mut agree = 0usize;
    let mut disagree = 0usize;
    for class in Class::ALL {
        let inspected = outcome
            .users
            .iter()
            .filter(|(_, l)| *l == StanceLabel::Class(class))
            .filter_map(|(u, _)| reference.get(&u.user_id))
            .take(per_cluster);
        for &r in inspected {
            if r == class {
                agree += 1;
            } else {
                disagree += 1;
            }
        }
    }
    let flip = disagree > agree;
    if flip {
        outcome.flip();
    }
    flip
}
