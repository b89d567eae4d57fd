//! Per-user unsupervised stance classification: the test user is embedded jointly
//! with the labeled training users, the embedding is clustered, and the test user
//! takes the majority label of its cluster.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cluster::{estimate_bandwidth, majority_label, mean_shift, MeanShiftParams};
use crate::corpus::UserRecord;
use crate::embed::{
    knn_graph, knn_graph_append, umap, umap_from_graph, Embedding, NeighborGraph, UmapParams,
};
use crate::error::{Result, StanceError};
use crate::features::{build_vocab_from_users, user_term_counts, FeatureMode, SparseVector, Vocabulary};
use crate::labels::{Class, StanceLabel};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UnsupervisedParams {
    pub umap: UmapParams,
    pub mean_shift: MeanShiftParams,
    /// Embed all test users together with the training users in one run instead of
    /// one run per test user.
    pub batch: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnassignedReason {
    /// The test user retweeted nobody.
    NoRetweets,
    /// The embedding collapsed to a point and no bandwidth exists.
    Degenerate,
    /// The test point fell outside every surviving cluster.
    OutsideClusters,
    NoLabeledMembers,
    Tie,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub cluster: Option<usize>,
    pub cluster_size: usize,
    /// Share of the cluster's labeled members carrying the majority label.
    pub purity: f64,
    pub labeled_in_cluster: usize,
    pub n_clusters: usize,
    pub bandwidth: Option<f64>,
    pub unassigned_reason: Option<UnassignedReason>,
}

impl Diagnostics {
    fn unassigned(reason: UnassignedReason) -> Diagnostics {
        Diagnostics {
            cluster: None,
            cluster_size: 0,
            purity: 0.0,
            labeled_in_cluster: 0,
            n_clusters: 0,
            bandwidth: None,
            unassigned_reason: Some(reason),
        }
    }
}

/// Training users prepared once: RT vectors and their neighbour graph.
#[derive(Clone, Debug)]
pub struct TrainingSet {
    vocab: Vocabulary,
    vectors: Vec<SparseVector>,
    known: Vec<Option<Class>>,
    graph: Option<NeighborGraph>,
    params: UnsupervisedParams,
}

impl TrainingSet {
    pub fn new(
        train: &[(UserRecord, StanceLabel)],
        params: &UnsupervisedParams,
        use_timeline: bool,
    ) -> Result<TrainingSet> {
        if train.is_empty() {
            return Err(StanceError::EmptyInput("training set"));
        }
        let vocab = build_vocab_from_users(train.iter().map(|(u, _)| u), FeatureMode::Rt, 1, use_timeline);
        let vectors: Vec<SparseVector> = train
            .iter()
            .map(|(u, _)| vocab.vectorize(&user_term_counts(u, FeatureMode::Rt, use_timeline)))
            .collect();
        let n = vectors.len();
        // Neighbour lists for the training users alone, long enough to extend by one point.
        let graph = if n >= 2 {
            Some(knn_graph(&vectors, params.umap.effective_k(n + 1).min(n - 1))?)
        } else {
            None
        };
        Ok(TrainingSet {
            vocab,
            vectors,
            known: train.iter().map(|(_, l)| l.class()).collect(),
            graph,
            params: *params,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// RT vector of a test user over the training vocabulary, with accounts unseen in
    /// training appended as extra dimensions.
    pub fn test_vector(&self, user: &UserRecord, use_timeline: bool) -> SparseVector {
        let counts = user_term_counts(user, FeatureMode::Rt, use_timeline);
        let mut next = self.vocab.len() as u32;
        SparseVector::from_pairs(counts.iter().map(|(term, &c)| {
            let index = self.vocab.index_of(term).map(|i| i as u32).unwrap_or_else(|| {
                next += 1;
                next - 1
            });
            (index, c)
        }))
    }

    pub fn classify(
        &self,
        user: &UserRecord,
        use_timeline: bool,
        seed: u64,
    ) -> Result<(StanceLabel, Diagnostics)> {
        let test = self.test_vector(user, use_timeline);
        if test.is_empty() {
            return Ok((
                StanceLabel::Unassigned,
                Diagnostics::unassigned(UnassignedReason::NoRetweets),
            ));
        }
        let mut vectors = self.vectors.clone();
        vectors.push(test);
        let n = vectors.len();
        let k = self.params.umap.effective_k(n);
        let graph = match &self.graph {
            Some(base) => knn_graph_append(base, &vectors, k)?,
            None => knn_graph(&vectors, k)?,
        };
        let embedding = umap_from_graph(&graph, &self.params.umap, seed)?;
        let mut known = self.known.clone();
        known.push(None);
        label_points(&embedding, &known, &self.params.mean_shift, &[n - 1])
            .map(|mut v| v.pop().expect("one test point"))
    }
}

/// Clusters an embedding and reads off the label of each point in `targets`.
fn label_points(
    embedding: &Embedding,
    known: &[Option<Class>],
    params: &MeanShiftParams,
    targets: &[usize],
) -> Result<Vec<(StanceLabel, Diagnostics)>> {
    let bandwidth = match estimate_bandwidth(&embedding.coords, params.quantile) {
        Ok(bw) => bw,
        Err(StanceError::ZeroBandwidth) => {
            let d = Diagnostics::unassigned(UnassignedReason::Degenerate);
            return Ok(vec![(StanceLabel::Unassigned, d); targets.len()]);
        }
        Err(e) => return Err(e),
    };
    let clusters = mean_shift(&embedding.coords, bandwidth, params.min_members)?;
    let votes = majority_label(&clusters, known);
    Ok(targets
        .iter()
        .map(|&t| {
            let mut d = Diagnostics {
                cluster: clusters.assignment[t],
                cluster_size: 0,
                purity: 0.0,
                labeled_in_cluster: 0,
                n_clusters: clusters.n_clusters(),
                bandwidth: Some(bandwidth),
                unassigned_reason: None,
            };
            let Some(c) = clusters.assignment[t] else {
                d.unassigned_reason = Some(UnassignedReason::OutsideClusters);
                return (StanceLabel::Unassigned, d);
            };
            let vote = votes[c];
            d.cluster_size = clusters.sizes[c];
            d.purity = vote.purity;
            d.labeled_in_cluster = vote.labeled;
            if vote.label == StanceLabel::Unassigned {
                d.unassigned_reason = Some(if vote.labeled == 0 {
                    UnassignedReason::NoLabeledMembers
                } else {
                    UnassignedReason::Tie
                });
            }
            (vote.label, d)
        })
        .collect())
}

/// Embeds the training users together with one test user and labels the test user
/// by its cluster's majority. Building a [`TrainingSet`] once is cheaper when many
/// test users share the same training data.
pub fn classify_user_unsupervised(
    test_user: &UserRecord,
    train: &[(UserRecord, StanceLabel)],
    params: &UnsupervisedParams,
    seed: u64,
    expansion: (bool, bool),
) -> Result<(StanceLabel, Diagnostics)> {
    let (train_timeline, test_timeline) = expansion;
    TrainingSet::new(train, params, train_timeline)?.classify(test_user, test_timeline, seed)
}

/// Embeds all test users in a single run with the training users. Test users without
/// retweets are Unassigned and left out of the embedding.
pub fn classify_batch_unsupervised(
    test_users: &[&UserRecord],
    train: &[(UserRecord, StanceLabel)],
    params: &UnsupervisedParams,
    seed: u64,
    expansion: (bool, bool),
) -> Result<Vec<(StanceLabel, Diagnostics)>> {
    let (train_timeline, test_timeline) = expansion;
    let set = TrainingSet::new(train, params, train_timeline)?;
    let mut vectors = set.vectors.clone();
    let mut known = set.known.clone();
    let mut slots: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, user) in test_users.iter().enumerate() {
        let v = set.test_vector(user, test_timeline);
        if !v.is_empty() {
            slots.insert(i, vectors.len());
            vectors.push(v);
            known.push(None);
        }
    }
    let mut out = vec![
        (
            StanceLabel::Unassigned,
            Diagnostics::unassigned(UnassignedReason::NoRetweets)
        );
        test_users.len()
    ];
    if slots.is_empty() {
        return Ok(out);
    }
    let embedding = umap(&vectors, &params.umap, seed)?;
    let targets: Vec<usize> = slots.values().copied().collect();
    let labels = label_points(&embedding, &known, &params.mean_shift, &targets)?;
    for ((&i, _), result) in slots.iter().zip(labels) {
        out[i] = result;
    }
    Ok(out)
}
