//! Stochastic gradient layout of a fuzzy graph in low dimension, with edge sampling
//! proportional to membership weight and uniform negative sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fuzzy::FuzzyGraph;
use crate::error::{Result, StanceError};
use crate::points::Points;

const GRADIENT_CLIP: f64 = 4.0;
const INIT_RANGE: f64 = 10.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayoutMode {
    /// Single-threaded and bit-reproducible for a given seed.
    #[default]
    Deterministic,
    /// Lock-free parallel edge updates; results vary between runs.
    Parallel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutParams {
    pub dim: usize,
    pub epochs: usize,
    pub min_dist: f64,
    pub spread: f64,
    pub negative_sample_rate: usize,
    pub learning_rate: f64,
    pub repulsion_strength: f64,
    pub mode: LayoutMode,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            dim: 2,
            epochs: 200,
            min_dist: 0.1,
            spread: 1.0,
            negative_sample_rate: 5,
            learning_rate: 1.0,
            repulsion_strength: 1.0,
            mode: LayoutMode::Deterministic,
        }
    }
}

/// Least-squares fit of `1 / (1 + a x^(2b))` to the offset exponential
/// `1` for `x < min_dist`, `exp(-(x - min_dist) / spread)` beyond, on 300 points in `[0, 3 spread]`.
pub fn fit_ab(min_dist: f64, spread: f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..300).map(|i| 3.0 * spread * i as f64 / 299.0).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            if x < min_dist {
                1.0
            } else {
                (-(x - min_dist) / spread).exp()
            }
        })
        .collect();
    let sse = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| {
                let r = 1.0 / (1.0 + a * x.powf(2.0 * b)) - y;
                r * r
            })
            .sum()
    };

    // Levenberg-Marquardt from (1, 1).
    let (mut a, mut b) = (1.0_f64, 1.0_f64);
    let mut lambda = 1e-3;
    let mut cost = sse(a, b);
    for _ in 0..500 {
        let (mut jtj, mut jtr) = ([[0.0; 2]; 2], [0.0; 2]);
        for (&x, &y) in xs.iter().zip(&ys) {
            let (xp, ln) = if x > 0.0 {
                (x.powf(2.0 * b), x.ln())
            } else {
                (0.0, 0.0)
            };
            let denom = 1.0 + a * xp;
            let r = 1.0 / denom - y;
            let ja = -xp / (denom * denom);
            let jb = -a * xp * 2.0 * ln / (denom * denom);
            jtj[0][0] += ja * ja;
            jtj[0][1] += ja * jb;
            jtj[1][1] += jb * jb;
            jtr[0] += ja * r;
            jtr[1] += jb * r;
        }
        jtj[1][0] = jtj[0][1];
        let mut improved = false;
        for _ in 0..50 {
            let m00 = jtj[0][0] * (1.0 + lambda);
            let m11 = jtj[1][1] * (1.0 + lambda);
            let det = m00 * m11 - jtj[0][1] * jtj[1][0];
            if det.abs() < f64::MIN_POSITIVE {
                lambda *= 10.0;
                continue;
            }
            let da = -(m11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
            let db = -(m00 * jtr[1] - jtj[1][0] * jtr[0]) / det;
            let trial = sse(a + da, b + db);
            if trial.is_finite() && trial <= cost {
                let converged = (cost - trial) <= 1e-15 * cost.max(1e-300);
                a += da;
                b += db;
                cost = trial;
                lambda = (lambda / 10.0).max(1e-12);
                improved = !converged;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (a, b)
}

struct Schedule {
    heads: Vec<usize>,
    tails: Vec<usize>,
    epochs_per_sample: Vec<f64>,
    next_sample: Vec<f64>,
    epochs_per_negative: Vec<f64>,
    next_negative: Vec<f64>,
}

impl Schedule {
    /// Both directions of every edge, dropping edges too weak to be sampled even once.
    fn new(graph: &FuzzyGraph, epochs: usize, negative_rate: usize) -> Schedule {
        let max_w = graph.edges().iter().map(|e| e.weight).fold(0.0, f64::max);
        let floor = max_w / epochs as f64;
        let mut s = Schedule {
            heads: Vec::new(),
            tails: Vec::new(),
            epochs_per_sample: Vec::new(),
            next_sample: Vec::new(),
            epochs_per_negative: Vec::new(),
            next_negative: Vec::new(),
        };
        for e in graph.edges().iter().filter(|e| e.weight >= floor) {
            let eps = max_w / e.weight;
            for (h, t) in [(e.a, e.b), (e.b, e.a)] {
                s.heads.push(h);
                s.tails.push(t);
                s.epochs_per_sample.push(eps);
                s.next_sample.push(eps);
                let neg = eps / negative_rate as f64;
                s.epochs_per_negative.push(neg);
                s.next_negative.push(neg);
            }
        }
        s
    }
}

#[derive(Clone, Copy)]
struct Kernel {
    a: f64,
    b: f64,
    gamma: f64,
}

impl Kernel {
    /// Requires `dist_sq > 0`.
    fn attractive(&self, dist_sq: f64) -> f64 {
        let (a, b) = (self.a, self.b);
        let pow_b = dist_sq.powf(b);
        -2.0 * a * b * pow_b / (dist_sq * (a * pow_b + 1.0))
    }

    fn repulsive(&self, dist_sq: f64) -> f64 {
        let (a, b) = (self.a, self.b);
        2.0 * self.gamma * b / ((0.001 + dist_sq) * (a * dist_sq.powf(b) + 1.0))
    }
}

fn clip(x: f64) -> f64 {
    x.clamp(-GRADIENT_CLIP, GRADIENT_CLIP)
}

pub fn initial_coordinates(n: usize, dim: usize, seed: u64) -> Points {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * dim)
        .map(|_| rng.gen_range(-INIT_RANGE..=INIT_RANGE))
        .collect();
    Points::new(dim, data).expect("dim is positive")
}

pub fn optimize_layout(graph: &FuzzyGraph, params: &LayoutParams, seed: u64) -> Result<Points> {
    if graph.is_empty() {
        return Err(StanceError::EmptyInput("fuzzy graph"));
    }
    if params.dim == 0 || params.epochs == 0 || params.negative_sample_rate == 0 {
        return Err(StanceError::InvalidParameter(
            "dimension, epochs and negative sample rate must be positive".into(),
        ));
    }
    let (a, b) = fit_ab(params.min_dist, params.spread);
    let kernel = Kernel {
        a,
        b,
        gamma: params.repulsion_strength,
    };
    let mut coords = initial_coordinates(graph.len(), params.dim, seed);
    let mut schedule = Schedule::new(graph, params.epochs, params.negative_sample_rate);
    match params.mode {
        LayoutMode::Deterministic => {
            // The init stream is consumed first so both modes share initial coordinates.
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            run_sequential(&mut coords, &mut schedule, kernel, params, &mut rng)?;
        }
        LayoutMode::Parallel => run_parallel(&mut coords, &mut schedule, kernel, params, seed)?,
    }
    if !coords.all_finite() {
        return Err(StanceError::NonFiniteGradient { epoch: params.epochs });
    }
    Ok(coords)
}

fn run_sequential(
    coords: &mut Points,
    s: &mut Schedule,
    kernel: Kernel,
    params: &LayoutParams,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let n = coords.len();
    let dim = params.dim;
    let data = coords.as_mut_slice();
    let mut delta = vec![0.0; dim];
    for epoch in 0..params.epochs {
        let alpha = params.learning_rate * (1.0 - epoch as f64 / params.epochs as f64);
        let now = epoch as f64;
        for e in 0..s.heads.len() {
            if s.next_sample[e] > now {
                continue;
            }
            let (j, k) = (s.heads[e], s.tails[e]);
            let dist_sq = pair_dist_sq(data, j, k, dim);
            if dist_sq > 0.0 {
                let coef = kernel.attractive(dist_sq);
                if !coef.is_finite() {
                    return Err(StanceError::NonFiniteGradient { epoch });
                }
                for d in 0..dim {
                    delta[d] = clip(coef * (data[j * dim + d] - data[k * dim + d])) * alpha;
                }
                for d in 0..dim {
                    data[j * dim + d] += delta[d];
                    data[k * dim + d] -= delta[d];
                }
            }
            s.next_sample[e] += s.epochs_per_sample[e];

            let negatives = ((now - s.next_negative[e]) / s.epochs_per_negative[e]).floor();
            let negatives = if negatives > 0.0 { negatives as usize } else { 0 };
            for _ in 0..negatives {
                let other = rng.gen_range(0..n);
                let dist_sq = pair_dist_sq(data, j, other, dim);
                let coef = if dist_sq > 0.0 {
                    kernel.repulsive(dist_sq)
                } else if other == j {
                    continue;
                } else {
                    0.0
                };
                if !coef.is_finite() {
                    return Err(StanceError::NonFiniteGradient { epoch });
                }
                for d in 0..dim {
                    let g = if coef > 0.0 {
                        clip(coef * (data[j * dim + d] - data[other * dim + d]))
                    } else {
                        GRADIENT_CLIP
                    };
                    data[j * dim + d] += g * alpha;
                }
            }
            s.next_negative[e] += negatives as f64 * s.epochs_per_negative[e];
        }
    }
    Ok(())
}

fn pair_dist_sq(data: &[f64], j: usize, k: usize, dim: usize) -> f64 {
    (0..dim)
        .map(|d| {
            let diff = data[j * dim + d] - data[k * dim + d];
            diff * diff
        })
        .sum()
}

#[cfg(feature = "parallel")]
fn run_parallel(
    coords: &mut Points,
    s: &mut Schedule,
    kernel: Kernel,
    params: &LayoutParams,
    seed: u64,
) -> Result<()> {
    use rayon::prelude::*;
    use std::sync::atomic::{AtomicBool, AtomicU64, Ordering::Relaxed};

    const CHUNK: usize = 1024;
    let n = coords.len();
    let dim = params.dim;
    let shared: Vec<AtomicU64> = coords
        .as_slice()
        .iter()
        .map(|x| AtomicU64::new(x.to_bits()))
        .collect();
    let load = |i: usize| f64::from_bits(shared[i].load(Relaxed));
    let add = |i: usize, v: f64| shared[i].store((load(i) + v).to_bits(), Relaxed);
    let failed = AtomicBool::new(false);

    for epoch in 0..params.epochs {
        let alpha = params.learning_rate * (1.0 - epoch as f64 / params.epochs as f64);
        let now = epoch as f64;
        s.next_sample
            .par_chunks_mut(CHUNK)
            .zip(s.next_negative.par_chunks_mut(CHUNK))
            .enumerate()
            .for_each(|(chunk, (next_sample, next_negative))| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((epoch as u64) << 32) ^ chunk as u64);
                for local in 0..next_sample.len() {
                    let e = chunk * CHUNK + local;
                    if next_sample[local] > now {
                        continue;
                    }
                    let (j, k) = (s.heads[e], s.tails[e]);
                    let dist_sq: f64 = (0..dim)
                        .map(|d| (load(j * dim + d) - load(k * dim + d)).powi(2))
                        .sum();
                    if dist_sq > 0.0 {
                        let coef = kernel.attractive(dist_sq);
                        if !coef.is_finite() {
                            failed.store(true, Relaxed);
                            return;
                        }
                        for d in 0..dim {
                            let g = clip(coef * (load(j * dim + d) - load(k * dim + d))) * alpha;
                            add(j * dim + d, g);
                            add(k * dim + d, -g);
                        }
                    }
                    next_sample[local] += s.epochs_per_sample[e];
                    let negatives = ((now - next_negative[local]) / s.epochs_per_negative[e])
                        .floor()
                        .max(0.0) as usize;
                    for _ in 0..negatives {
                        let other = rng.gen_range(0..n);
                        let dist_sq: f64 = (0..dim)
                            .map(|d| (load(j * dim + d) - load(other * dim + d)).powi(2))
                            .sum();
                        let coef = if dist_sq > 0.0 {
                            kernel.repulsive(dist_sq)
                        } else if other == j {
                            continue;
                        } else {
                            0.0
                        };
                        for d in 0..dim {
                            let g = if coef > 0.0 {
                                clip(coef * (load(j * dim + d) - load(other * dim + d)))
                            } else {
                                GRADIENT_CLIP
                            };
                            add(j * dim + d, g * alpha);
                        }
                    }
                    next_negative[local] += negatives as f64 * s.epochs_per_negative[e];
                }
            });
        if failed.load(Relaxed) {
            return Err(StanceError::NonFiniteGradient { epoch });
        }
    }
    for (slot, cell) in coords.as_mut_slice().iter_mut().zip(&shared) {
        *slot = f64::from_bits(cell.load(Relaxed));
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn run_parallel(
    coords: &mut Points,
    s: &mut Schedule,
    kernel: Kernel,
    params: &LayoutParams,
    seed: u64,
) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    run_sequential(coords, s, kernel, params, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::fuzzy::Edge;

    #[test]
    fn curve_fit_matches_reference_least_squares() {
        // Reference values from scipy.optimize.curve_fit on the same 300-point grid.
        for (min_dist, a_ref, b_ref) in [
            (0.1, 1.5769434602697652, 0.8950608778515733),
            (0.0, 1.93280839734315, 0.7904949732233831),
            (0.5, 0.5830300203414425, 1.3341669924314914),
        ] {
            let (a, b) = fit_ab(min_dist, 1.0);
            assert!((a - a_ref).abs() < 1e-4, "a={a} for min_dist {min_dist}");
            assert!((b - b_ref).abs() < 1e-4, "b={b} for min_dist {min_dist}");
        }
    }

    fn ring(n: usize) -> FuzzyGraph {
        FuzzyGraph::from_edges(
            n,
            (0..n).map(|i| Edge {
                a: i,
                b: (i + 1) % n,
                weight: 1.0,
            }),
        )
    }

    #[test]
    fn shape_and_determinism() {
        let g = ring(12);
        let params = LayoutParams {
            dim: 3,
            epochs: 50,
            ..LayoutParams::default()
        };
        let a = optimize_layout(&g, &params, 7).unwrap();
        let b = optimize_layout(&g, &params, 7).unwrap();
        assert_eq!((a.len(), a.dim()), (12, 3));
        assert_eq!(a, b);
        assert_ne!(a, optimize_layout(&g, &params, 8).unwrap());
    }

    #[test]
    fn parallel_mode_is_finite() {
        let params = LayoutParams {
            mode: LayoutMode::Parallel,
            epochs: 30,
            ..LayoutParams::default()
        };
        let out = optimize_layout(&ring(40), &params, 1).unwrap();
        assert!(out.all_finite());
    }

    #[test]
    fn rejects_empty_graph() {
        let g = FuzzyGraph::from_edges(0, []);
        assert!(optimize_layout(&g, &LayoutParams::default(), 0).is_err());
    }
}
