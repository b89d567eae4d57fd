//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stance_core::corpus::UserCorpus;
use stance_core::features::SparseVector;
use stance_core::pipeline::{bootstrap_training_set, orient_by_inspection, BootstrapParams};
use stance_core::synth::{generate, CountSpec, SynthParams};
use stance_core::{Class, Points};

/// Minimizes `½ αᵀQα − Σα` over the box `[0, c]^n` with accelerated projected
/// gradient (FISTA) run far past convergence. Returns `(alpha, objective)`.
pub fn box_qp(q: &[Vec<f64>], c: f64) -> (Vec<f64>, f64) {
    let n = q.len();
    // Gershgorin bound on the largest eigenvalue.
    let lipschitz = q
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-12);
    let objective = |a: &[f64]| -> f64 {
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += a[i] * q[i][j] * a[j];
            }
        }
        0.5 * quad - a.iter().sum::<f64>()
    };
    let mut x = vec![0.0; n];
    let mut y = x.clone();
    let mut t = 1.0_f64;
    for _ in 0..50_000 {
        let grad: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| q[i][j] * y[j]).sum::<f64>() - 1.0)
            .collect();
        let next: Vec<f64> = (0..n)
            .map(|i| (y[i] - grad[i] / lipschitz).clamp(0.0, c))
            .collect();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = (0..n)
            .map(|i| next[i] + (t - 1.0) / t_next * (next[i] - x[i]))
            .collect();
        x = next;
        t = t_next;
    }
    let obj = objective(&x);
    (x, obj)
}

/// Dual Hessian of the bias-augmented hinge SVM.
pub fn svm_dual_matrix(xs: &[Vec<f64>], ys: &[i8]) -> Vec<Vec<f64>> {
    let n = xs.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let dot: f64 = xs[i].iter().zip(&xs[j]).map(|(a, b)| a * b).sum::<f64>() + 1.0;
                    f64::from(ys[i]) * f64::from(ys[j]) * dot
                })
                .collect()
        })
        .collect()
}

/// Random SVM instance with both labels present: `(points, labels)`.
pub fn random_svm_instance(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<i8>) {
    let n = rng.gen_range(4..=20);
    let dim = rng.gen_range(1..=5);
    let shift = rng.gen_range(0.0..2.0);
    let mut ys: Vec<i8> = (0..n).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
    ys[0] = 1;
    ys[1] = -1;
    let xs = ys
        .iter()
        .map(|&y| {
            (0..dim)
                .map(|_| rng.gen_range(-1.0..1.0) + shift * f64::from(y) * 0.5)
                .collect()
        })
        .collect();
    (xs, ys)
}

/// Trustworthiness of an embedding, given the pairwise distances of the input space.
pub fn trustworthiness(input_dist: &[Vec<f64>], embedded: &Points, k: usize) -> f64 {
    let n = input_dist.len();
    let ranked = |dist: &dyn Fn(usize) -> f64, i: usize| -> Vec<usize> {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| dist(a).total_cmp(&dist(b)).then(a.cmp(&b)));
        others
    };
    let mut penalty = 0.0;
    for (i, row) in input_dist.iter().enumerate() {
        let input_order = ranked(&|j| row[j], i);
        let mut rank = vec![0usize; n];
        for (r, &j) in input_order.iter().enumerate() {
            rank[j] = r + 1;
        }
        let low_order = ranked(
            &|j| {
                let (a, b) = (embedded.row(i), embedded.row(j));
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
            },
            i,
        );
        for &j in &low_order[..k] {
            if rank[j] > k {
                penalty += (rank[j] - k) as f64;
            }
        }
    }
    let (n, k) = (n as f64, k as f64);
    1.0 - 2.0 / (n * k * (2.0 * n - 3.0 * k - 1.0)) * penalty
}

pub fn cosine_matrix(vectors: &[SparseVector]) -> Vec<Vec<f64>> {
    let dense: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| {
            let mut d = vec![0.0; v.max_index().map_or(0, |m| m as usize + 1).max(64)];
            for &(i, c) in v.entries() {
                d[i as usize] = f64::from(c);
            }
            d
        })
        .collect();
    let norm = |a: &[f64]| a.iter().map(|x| x * x).sum::<f64>().sqrt();
    dense
        .iter()
        .map(|a| {
            dense
                .iter()
                .map(|b| {
                    let dot: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
                    let denom = norm(a) * norm(b);
                    if denom == 0.0 {
                        1.0
                    } else {
                        (1.0 - dot / denom).max(0.0)
                    }
                })
                .collect()
        })
        .collect()
}

/// Count vectors from `blobs` topic profiles: each blob favours its own block of
/// `block` dimensions, with occasional counts elsewhere.
pub fn count_blobs(
    blobs: usize,
    per_blob: usize,
    block: usize,
    seed: u64,
) -> (Vec<SparseVector>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = blobs * block;
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    for b in 0..blobs {
        for _ in 0..per_blob {
            let pairs = (0..dims).filter_map(|d| {
                let own = d / block == b;
                let count = if own {
                    rng.gen_range(0..6)
                } else if rng.gen_bool(0.05) {
                    1
                } else {
                    0
                };
                (count > 0).then_some((d as u32, count))
            });
            vectors.push(SparseVector::from_pairs(pairs.collect::<Vec<_>>()));
            labels.push(b);
        }
    }
    (vectors, labels)
}

/// Two isotropic Gaussian blobs in the plane with unit sigma, centres `separation` apart.
pub fn gaussian_pair(per_blob: usize, separation: f64, seed: u64) -> (Points, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || {
        // Box-Muller.
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for b in 0..2 {
        for _ in 0..per_blob {
            rows.push(vec![normal() + separation * b as f64, normal()]);
            labels.push(b);
        }
    }
    (Points::from_rows(&rows).unwrap(), labels)
}

/// Synthetic stance scenario: bootstrapped training users and sparse test users.
pub struct Scenario {
    pub generated: usize,
    pub train: UserCorpus,
    pub train_gold: std::collections::BTreeMap<String, Class>,
    pub test: UserCorpus,
    pub test_gold: std::collections::BTreeMap<String, Class>,
    pub bootstrap_agreement: f64,
}

pub fn test_users(n_per_side: usize, polarization: f64, seed: u64) -> UserCorpus {
    generate(&SynthParams {
        n_users_per_side: n_per_side,
        polarization,
        seed,
        id_prefix: "test_".into(),
        tweets_per_user: CountSpec {
            min: 1,
            max: 2,
            shape: 0.0,
        },
        max_retweets_per_user: Some(1),
        timeline_tweets_per_user: 50,
        ..SynthParams::default()
    })
    .unwrap()
    .corpus
}

pub fn scenario(users_per_side: usize, n_active: usize, polarization: f64, seed: u64) -> Scenario {
    let pool = generate(&SynthParams {
        n_users_per_side: users_per_side,
        polarization,
        seed,
        timeline_tweets_per_user: 50,
        ..SynthParams::default()
    })
    .unwrap();
    let params = BootstrapParams {
        n_active,
        per_cluster: n_active / 2,
        seed,
        ..BootstrapParams::default()
    };
    let mut outcome = bootstrap_training_set(&pool.corpus, &params).unwrap();
    let reference = pool.corpus.gold_labels();
    orient_by_inspection(&mut outcome, &reference, 5);
    let labels = outcome.labels();
    let agree = labels.iter().filter(|(u, c)| reference[*u] == **c).count();
    let test = test_users(50, polarization, seed + 1000);
    Scenario {
        generated: pool.corpus.len(),
        train: outcome.to_corpus("synthetic"),
        train_gold: reference,
        test_gold: test.gold_labels(),
        test,
        bootstrap_agreement: agree as f64 / labels.len() as f64,
    }
}
