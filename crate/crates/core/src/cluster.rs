//! Flat-kernel mean shift, quantile bandwidth estimation and cluster-to-stance voting.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Result, StanceError};
use crate::labels::{Class, StanceLabel};
use crate::points::{euclidean, squared_distance, Points};

pub const MAX_SHIFT_ITERATIONS: usize = 300;
pub const SHIFT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanShiftParams {
    /// Quantile of pairwise distances used as bandwidth.
    pub quantile: f64,
    /// Clusters smaller than this are dissolved.
    pub min_members: usize,
}

impl Default for MeanShiftParams {
    fn default() -> Self {
        MeanShiftParams {
            quantile: 0.3,
            min_members: 3,
        }
    }
}

/// Nearest-rank quantile of all pairwise Euclidean distances.
pub fn estimate_bandwidth(points: &Points, quantile: f64) -> Result<f64> {
    let n = points.len();
    if n < 2 {
        return Err(StanceError::TooFewPoints { needed: 2, got: n });
    }
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(StanceError::InvalidParameter(format!(
            "quantile must lie in (0, 1], got {quantile}"
        )));
    }
    let mut distances = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            distances.push(euclidean(points.row(i), points.row(j)));
        }
    }
    let value = nearest_rank_quantile(&mut distances, quantile);
    if value <= 0.0 {
        return Err(StanceError::ZeroBandwidth);
    }
    Ok(value)
}

/// Nearest-rank quantile: the `ceil(q * m)`-th smallest of `m` values. Reorders `values`.
pub fn nearest_rank_quantile(values: &mut [f64], quantile: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty set");
    let rank = ((quantile * values.len() as f64).ceil() as usize).clamp(1, values.len());
    let (_, value, _) = values.select_nth_unstable_by(rank - 1, f64::total_cmp);
    *value
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// Cluster id per point; `None` is Unassigned.
    pub assignment: Vec<Option<usize>>,
    /// Mode coordinates per cluster id.
    pub modes: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
    pub bandwidth: f64,
}

impl ClusterAssignment {
    pub fn n_clusters(&self) -> usize {
        self.modes.len()
    }

    pub fn n_unassigned(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_none()).count()
    }

    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, a)| **a == Some(cluster))
            .map(|(i, _)| i)
    }

    /// `point_id,cluster_id_or_UNASSIGNED` with a header row.
    pub fn to_csv(&self, ids: Option<&[String]>) -> String {
        let mut out = String::from("point_id,cluster\n");
        for (i, a) in self.assignment.iter().enumerate() {
            let id = ids.map_or_else(|| i.to_string(), |ids| ids[i].clone());
            match a {
                Some(c) => writeln!(out, "{id},{c}"),
                None => writeln!(out, "{id},UNASSIGNED"),
            }
            .expect("writing to a String");
        }
        out
    }
}

fn shift_to_mode(points: &Points, start: &[f64], bandwidth: f64) -> Vec<f64> {
    let bw_sq = bandwidth * bandwidth;
    let dim = points.dim();
    let mut x = start.to_vec();
    let mut mean = vec![0.0; dim];
    for _ in 0..MAX_SHIFT_ITERATIONS {
        mean.iter_mut().for_each(|m| *m = 0.0);
        let mut count = 0usize;
        for p in points.rows() {
            if squared_distance(p, &x) <= bw_sq {
                for (m, v) in mean.iter_mut().zip(p) {
                    *m += v;
                }
                count += 1;
            }
        }
        if count == 0 {
            break;
        }
        mean.iter_mut().for_each(|m| *m /= count as f64);
        let shift = euclidean(&mean, &x);
        x.copy_from_slice(&mean);
        if shift < SHIFT_TOLERANCE * bandwidth {
            break;
        }
    }
    x
}

pub fn mean_shift(points: &Points, bandwidth: f64, min_members: usize) -> Result<ClusterAssignment> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(StanceError::InvalidParameter(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    let n = points.len();

    #[cfg(feature = "parallel")]
    let converged: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..n)
            .into_par_iter()
            .map(|i| shift_to_mode(points, points.row(i), bandwidth))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let converged: Vec<Vec<f64>> = (0..n)
        .map(|i| shift_to_mode(points, points.row(i), bandwidth))
        .collect();

    // Seeds landing on the same spot share a basin.
    let same_spot = 1e-3 * bandwidth;
    let mut candidates: Vec<(Vec<f64>, usize)> = Vec::new();
    for x in converged {
        match candidates.iter_mut().find(|(m, _)| euclidean(m, &x) <= same_spot) {
            Some((_, basin)) => *basin += 1,
            None => candidates.push((x, 1)),
        }
    }
    // Stable sort keeps first-seen order among equal basins.
    candidates.sort_by_key(|c| std::cmp::Reverse(c.1));
    let mut modes: Vec<Vec<f64>> = Vec::new();
    for (x, _) in candidates {
        if modes.iter().all(|m| euclidean(m, &x) > bandwidth / 2.0) {
            modes.push(x);
        }
    }

    let mut provisional: Vec<Option<usize>> = points
        .rows()
        .map(|p| {
            modes
                .iter()
                .enumerate()
                .map(|(c, m)| (c, euclidean(p, m)))
                .filter(|&(_, d)| d <= bandwidth)
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .map(|(c, _)| c)
        })
        .collect();

    let mut counts = vec![0usize; modes.len()];
    for c in provisional.iter().flatten() {
        counts[*c] += 1;
    }
    let mut survivors: Vec<usize> = (0..modes.len()).filter(|&c| counts[c] >= min_members).collect();
    survivors.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let mut relabel = vec![None; modes.len()];
    for (new, &old) in survivors.iter().enumerate() {
        relabel[old] = Some(new);
    }
    for a in provisional.iter_mut() {
        *a = a.and_then(|c| relabel[c]);
    }

    Ok(ClusterAssignment {
        assignment: provisional,
        modes: survivors.iter().map(|&c| modes[c].clone()).collect(),
        sizes: survivors.iter().map(|&c| counts[c]).collect(),
        bandwidth,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterVote {
    pub label: StanceLabel,
    /// Modal count over labeled count; 0 when nothing is labeled.
    pub purity: f64,
    pub labeled: usize,
}

/// Majority gold label per cluster. Ties and clusters without labeled members are Unassigned.
pub fn majority_label(assignment: &ClusterAssignment, known: &[Option<Class>]) -> Vec<ClusterVote> {
    let mut tallies = vec![[0usize; 2]; assignment.n_clusters()];
    for (point, cluster) in assignment.assignment.iter().enumerate() {
        if let (Some(c), Some(Some(label))) = (cluster, known.get(point)) {
            tallies[*c][label.index()] += 1;
        }
    }
    tallies
        .into_iter()
        .map(|[zero, one]| {
            let labeled = zero + one;
            if labeled == 0 {
                return ClusterVote {
                    label: StanceLabel::Unassigned,
                    purity: 0.0,
                    labeled,
                };
            }
            let label = match zero.cmp(&one) {
                std::cmp::Ordering::Greater => StanceLabel::Class(Class::ZERO),
                std::cmp::Ordering::Less => StanceLabel::Class(Class::ONE),
                std::cmp::Ordering::Equal => StanceLabel::Unassigned,
            };
            ClusterVote {
                label,
                purity: zero.max(one) as f64 / labeled as f64,
                labeled,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn pts(rows: &[&[f64]]) -> Points {
        Points::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn bandwidth_examples() {
        assert_eq!(
            estimate_bandwidth(&pts(&[&[0.0, 0.0], &[2.0, 0.0]]), 1.0).unwrap(),
            2.0
        );
        // distances {1, 2, 3}: rank ceil(1.5) = 2
        let p = pts(&[&[0.0], &[1.0], &[3.0]]);
        assert_eq!(estimate_bandwidth(&p, 0.5).unwrap(), 2.0);
        assert!(matches!(
            estimate_bandwidth(&pts(&[&[1.0, 1.0], &[1.0, 1.0]]), 0.3),
            Err(StanceError::ZeroBandwidth)
        ));
        assert!(estimate_bandwidth(&pts(&[&[1.0]]), 0.3).is_err());
    }

    #[test]
    fn nearest_rank_on_four_distances() {
        assert_eq!(nearest_rank_quantile(&mut [4.0, 1.0, 3.0, 2.0], 0.5), 2.0);
        assert_eq!(nearest_rank_quantile(&mut [4.0, 1.0, 3.0, 2.0], 0.51), 3.0);
        assert_eq!(nearest_rank_quantile(&mut [4.0, 1.0, 3.0, 2.0], 1.0), 4.0);
    }

    #[test]
    fn identical_points_form_one_cluster() {
        let p = pts(&[&[1.0, 2.0][..]; 6]);
        let out = mean_shift(&p, 0.5, 3).unwrap();
        assert_eq!(out.n_clusters(), 1);
        assert_eq!(out.sizes, vec![6]);
        assert_eq!(out.n_unassigned(), 0);
    }

    #[test]
    fn isolated_point_is_dissolved() {
        let mut rows: Vec<Vec<f64>> = (0..10).map(|i| vec![0.1 * i as f64, 0.0]).collect();
        rows.push(vec![50.0, 50.0]);
        let p = Points::from_rows(&rows).unwrap();
        let out = mean_shift(&p, 2.0, 2).unwrap();
        assert_eq!(out.n_clusters(), 1);
        assert_eq!(out.assignment[10], None);
        assert!(out.assignment[..10].iter().all(|a| *a == Some(0)));
    }

    #[test]
    fn votes() {
        let assignment = ClusterAssignment {
            assignment: vec![Some(0), Some(0), Some(0), Some(1), Some(1), Some(2), None],
            modes: vec![vec![0.0]; 3],
            sizes: vec![3, 2, 1],
            bandwidth: 1.0,
        };
        let (a, b) = (Some(Class::ZERO), Some(Class::ONE));
        let votes = majority_label(&assignment, &[a, a, b, a, b, None, a]);
        assert_eq!(votes[0].label, StanceLabel::Class(Class::ZERO));
        assert!((votes[0].purity - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(votes[1].label, StanceLabel::Unassigned);
        assert_eq!(votes[1].purity, 0.5);
        assert_eq!(votes[2].label, StanceLabel::Unassigned);
        assert_eq!(votes[2].purity, 0.0);
    }

    #[test]
    fn csv_marks_unassigned() {
        let assignment = ClusterAssignment {
            assignment: vec![Some(0), None],
            modes: vec![vec![0.0]],
            sizes: vec![1],
            bandwidth: 1.0,
        };
        assert_eq!(assignment.to_csv(None), "point_id,cluster\n0,0\n1,UNASSIGNED\n");
    }

    fn cloud() -> impl Strategy<Value = (Points, u64)> {
        (0u64..500, 5usize..40).prop_map(|(seed, n)| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)])
                .collect();
            (Points::from_rows(&rows).unwrap(), seed)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn structural_invariants((p, _) in cloud(), bw in 0.5f64..4.0, min in 1usize..5) {
            let out = mean_shift(&p, bw, min).unwrap();
            for (i, a) in out.assignment.iter().enumerate() {
                if let Some(c) = a {
                    prop_assert!(euclidean(p.row(i), &out.modes[*c]) <= bw + 1e-12);
                }
            }
            for i in 0..out.modes.len() {
                for j in i + 1..out.modes.len() {
                    prop_assert!(euclidean(&out.modes[i], &out.modes[j]) > bw / 2.0);
                }
            }
            prop_assert!(out.sizes.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(out.sizes.iter().all(|&s| s >= min));
            prop_assert_eq!(out.clone(), mean_shift(&p, bw, min).unwrap());

            let stricter = mean_shift(&p, bw, min + 2).unwrap();
            for (loose, strict) in out.assignment.iter().zip(&stricter.assignment) {
                if loose.is_none() {
                    prop_assert!(strict.is_none());
                }
            }
        }
    }
}
