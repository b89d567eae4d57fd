//! Browser bindings: embed a synthetic polarized community, cluster the layout,
//! and score the clusters against the generating sides.

use stance_core::cluster::{estimate_bandwidth, majority_label, mean_shift};
use stance_core::embed::{umap, UmapParams};
use stance_core::evalkit::{metrics, ConfusionMatrix};
use stance_core::features::{build_vocab, user_vector, FeatureMode};
use stance_core::synth::{generate, SynthParams};
use stance_core::{Class, Points, StanceLabel};
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub struct Embedded {
    coords: Vec<f64>,
    sides: Vec<u8>,
    cross_side_retweets: usize,
    total_retweets: usize,
}

#[wasm_bindgen]
impl Embedded {
    /// Interleaved `x, y` pairs.
    #[wasm_bindgen(getter)]
    pub fn coords(&self) -> Vec<f64> {
        self.coords.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn sides(&self) -> Vec<u8> {
        self.sides.clone()
    }

    #[wasm_bindgen(getter, js_name = crossSideRetweets)]
    pub fn cross_side_retweets(&self) -> usize {
        self.cross_side_retweets
    }

    #[wasm_bindgen(getter, js_name = totalRetweets)]
    pub fn total_retweets(&self) -> usize {
        self.total_retweets
    }
}

fn to_js(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

pub fn embed(
    users_per_side: usize,
    polarization: f64,
    n_neighbors: usize,
    seed: u64,
) -> Result<Embedded, String> {
    let data = generate(&SynthParams {
        n_users_per_side: users_per_side,
        n_accounts_per_side: 60,
        polarization,
        seed,
        ..SynthParams::default()
    })
    .map_err(|e| e.to_string())?;
    let vocab = build_vocab(&data.corpus, FeatureMode::Rt, 1, false);
    let users: Vec<_> = data.corpus.users.values().collect();
    let vectors: Vec<_> = users.iter().map(|u| user_vector(u, &vocab, false)).collect();
    let params = UmapParams {
        n_neighbors,
        ..UmapParams::default()
    };
    let embedding = umap(&vectors, &params, seed).map_err(|e| e.to_string())?;
    Ok(Embedded {
        coords: embedding.coords.as_slice().to_vec(),
        sides: users
            .iter()
            .map(|u| u.gold_label.map_or(0, |c| c.index() as u8))
            .collect(),
        cross_side_retweets: data.cross_side_retweets,
        total_retweets: data.total_retweets,
    })
}

/// Cluster id per point, `-1` for unassigned. The last entry is the bandwidth used.
pub fn cluster(coords: &[f64], quantile: f64, min_members: usize) -> Result<Vec<f64>, String> {
    let points = Points::new(2, coords.to_vec()).map_err(|e| e.to_string())?;
    let bandwidth = estimate_bandwidth(&points, quantile).map_err(|e| e.to_string())?;
    let out = mean_shift(&points, bandwidth, min_members).map_err(|e| e.to_string())?;
    let mut ids: Vec<f64> = out
        .assignment
        .iter()
        .map(|a| a.map_or(-1.0, |c| c as f64))
        .collect();
    ids.push(bandwidth);
    Ok(ids)
}

/// Labels each cluster by the majority side among every `labeled_every`-th point, then
/// scores all points. Returns `[A, P, R, F, coverage]`, or nothing if no point is assigned.
pub fn score(assignment: &[i32], sides: &[u8], labeled_every: usize) -> Vec<f64> {
    let n_clusters = assignment
        .iter()
        .copied()
        .max()
        .map_or(0, |m| (m + 1).max(0) as usize);
    let clusters = stance_core::cluster::ClusterAssignment {
        assignment: assignment.iter().map(|&a| usize::try_from(a).ok()).collect(),
        modes: vec![Vec::new(); n_clusters],
        sizes: (0..n_clusters)
            .map(|c| assignment.iter().filter(|&&a| a == c as i32).count())
            .collect(),
        bandwidth: 0.0,
    };
    let step = labeled_every.max(1);
    let known: Vec<Option<Class>> = sides
        .iter()
        .enumerate()
        .map(|(i, &s)| (i % step == 0).then(|| Class::from_index(s as usize)))
        .collect();
    let votes = majority_label(&clusters, &known);
    let mut cm = ConfusionMatrix::default();
    for (a, &side) in clusters.assignment.iter().zip(sides) {
        let pred = a.map_or(StanceLabel::Unassigned, |c| votes[c].label);
        cm.record(Class::from_index(side as usize), pred);
    }
    match metrics(&cm) {
        Ok(m) => m.measures().to_vec(),
        Err(_) => Vec::new(),
    }
}

#[wasm_bindgen(js_name = embedSynthetic)]
pub fn embed_synthetic(
    users_per_side: usize,
    polarization: f64,
    n_neighbors: usize,
    seed: u32,
) -> Result<Embedded, JsValue> {
    embed(users_per_side, polarization, n_neighbors, u64::from(seed)).map_err(to_js)
}

#[wasm_bindgen(js_name = clusterPoints)]
pub fn cluster_points(coords: &[f64], quantile: f64, min_members: usize) -> Result<Vec<f64>, JsValue> {
    cluster(coords, quantile, min_members).map_err(to_js)
}

#[wasm_bindgen(js_name = scoreClusters)]
pub fn score_clusters(assignment: &[i32], sides: &[u8], labeled_every: usize) -> Vec<f64> {
    score(assignment, sides, labeled_every)
}
