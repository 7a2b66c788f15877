//! Restarted k-means over the rows of a matrix.
//!
//! Every restart draws from its own ChaCha stream (`stream = restart index`)
//! keyed by the caller's seed, so restarts can run in any order or in
//! parallel and still produce the same result.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{sq_dist, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KMeansParams {
    pub k: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub seed: u64,
    /// Relative inertia improvement below which a restart stops.
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_restarts() -> usize {
    500
}

fn default_max_iters() -> usize {
    100
}

fn default_tol() -> f64 {
    1e-9
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            restarts: default_restarts(),
            max_iters: default_max_iters(),
            seed,
            tol: default_tol(),
        }
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }
}

/// Cluster assignment of each point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Labeling {
    pub labels: Vec<usize>,
    /// Sum of squared distances from each point to its cluster mean.
    pub inertia: f64,
}

/// Result of a single restart, with its per-iteration inertia trace.
#[derive(Clone, Debug)]
pub struct RestartOutcome {
    pub labels: Vec<usize>,
    pub inertia: f64,
    /// Inertia after each assignment step, starting with the seeding.
    pub history: Vec<f64>,
    /// Empty clusters reseeded during the run.
    pub repairs: usize,
}

pub fn kmeans<T: Scalar>(points: &Matrix<T>, params: &KMeansParams) -> Result<Labeling> {
    validate(points, params)?;
    let outcomes: Vec<RestartOutcome> = (0..params.restarts)
        .into_par_iter()
        .map(|r| run_restart(points, params, r))
        .collect();
    // argmin by inertia, lowest restart index on ties
    let best = outcomes
        .into_iter()
        .reduce(|best, o| if o.inertia < best.inertia { o } else { best })
        .expect("at least one restart");
    Ok(Labeling {
        labels: best.labels,
        inertia: best.inertia,
    })
}

/// Runs restart number `restart` alone.
pub fn kmeans_restart<T: Scalar>(
    points: &Matrix<T>,
    params: &KMeansParams,
    restart: usize,
) -> Result<RestartOutcome> {
    validate(points, params)?;
    Ok(run_restart(points, params, restart))
}

fn validate<T: Scalar>(points: &Matrix<T>, params: &KMeansParams) -> Result<()> {
    let n = points.rows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if params.k == 0 || params.k > n {
        return Err(Error::InvalidParameter(format!(
            "k must lie in [1, {n}], got {}",
            params.k
        )));
    }
    if params.restarts == 0 || params.max_iters == 0 {
        return Err(Error::InvalidParameter(
            "restarts and max_iters must be positive".into(),
        ));
    }
    if !(params.tol >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tol must be nonnegative, got {}",
            params.tol
        )));
    }
    Ok(())
}

fn run_restart<T: Scalar>(points: &Matrix<T>, params: &KMeansParams, restart: usize) -> RestartOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(restart as u64);
    let k = params.k;
    let n = points.rows();

    let mut centroids = seed_plus_plus(points, k, &mut rng);
    let (mut labels, inertia) = assign(points, &centroids);
    let mut history = vec![inertia.as_f64()];
    let mut repairs = 0;

    for _ in 0..params.max_iters {
        update_centroids(points, &labels, &mut centroids);
        repairs += repair_empty(points, &mut labels, &mut centroids);
        let (next, inertia) = assign(points, &centroids);
        let prev = *history.last().unwrap();
        let cur = inertia.as_f64();
        debug_assert!(
            cur <= prev + 1e-9 * prev.abs().max(1e-300),
            "inertia increased from {prev} to {cur}"
        );
        history.push(cur);
        let unchanged = next == labels;
        labels = next;
        if unchanged || cur == 0.0 || (prev - cur) / prev < params.tol {
            break;
        }
    }

    // report inertia against the means of the final clusters
    update_centroids(points, &labels, &mut centroids);
    let inertia: T = (0..n)
        .map(|i| sq_dist(points.row(i), centroids.row(labels[i])))
        .sum();
    RestartOutcome {
        labels,
        inertia: inertia.as_f64(),
        history,
        repairs,
    }
}

fn seed_plus_plus<T: Scalar>(points: &Matrix<T>, k: usize, rng: &mut ChaCha8Rng) -> Matrix<T> {
    let n = points.rows();
    let mut centroids = Matrix::zeros(k, points.cols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from_slice(points.row(first));
    let mut d2: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), points.row(first)).as_f64())
        .collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    chosen = Some(i);
                    break;
                }
            }
            // rounding can leave target just above the accumulated sum
            chosen.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).copy_from_slice(points.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            let nd = sq_dist(points.row(i), points.row(pick)).as_f64();
            if nd < *d {
                *d = nd;
            }
        }
    }
    centroids
}

fn assign<T: Scalar>(points: &Matrix<T>, centroids: &Matrix<T>) -> (Vec<usize>, T) {
    let mut total = T::zero();
    let labels = (0..points.rows())
        .map(|i| {
            let p = points.row(i);
            let mut best = 0;
            let mut best_d = sq_dist(p, centroids.row(0));
            for c in 1..centroids.rows() {
                let d = sq_dist(p, centroids.row(c));
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            total += best_d;
            best
        })
        .collect();
    (labels, total)
}

/// Moves each non-empty cluster's centroid to its mean; empty clusters keep
/// their previous centroid.
fn update_centroids<T: Scalar>(points: &Matrix<T>, labels: &[usize], centroids: &mut Matrix<T>) {
    let k = centroids.rows();
    let mut sums = Matrix::<T>::zeros(k, points.cols());
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, &v) in sums.row_mut(l).iter_mut().zip(points.row(i)) {
            *s += v;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let inv = T::one() / T::of_usize(counts[c]);
            for (dst, &s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                *dst = s * inv;
            }
        }
    }
}

/// Reseeds every empty cluster with the point farthest from its current
/// centroid, taken from a cluster that keeps at least one other member.
fn repair_empty<T: Scalar>(points: &Matrix<T>, labels: &mut [usize], centroids: &mut Matrix<T>) -> usize {
    let k = centroids.rows();
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    let mut repaired = 0;
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = T::neg_infinity();
        for (i, &l) in labels.iter().enumerate() {
            if counts[l] > 1 {
                let d = sq_dist(points.row(i), centroids.row(l));
                if d > far_d {
                    far_d = d;
                    far = Some(i);
                }
            }
        }
        let Some(p) = far else { break };
        counts[labels[p]] -= 1;
        counts[c] = 1;
        labels[p] = c;
        let row = points.row(p).to_vec();
        centroids.row_mut(c).copy_from_slice(&row);
        repaired += 1;
    }
    repaired
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_points() -> Matrix<f64> {
        Matrix::from_fn(9, 2, |i, j| if j == 0 { (i % 3) as f64 } else { (i / 3) as f64 * 1.7 })
    }

    #[test]
    fn k_equals_n_is_zero_inertia() {
        let pts = grid_points();
        let out = kmeans(&pts, &KMeansParams::new(9, 3).with_restarts(5)).unwrap();
        assert_eq!(out.inertia, 0.0);
        let mut seen = out.labels.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn k_one_is_total_scatter() {
        let pts = grid_points();
        let out = kmeans(&pts, &KMeansParams::new(1, 3).with_restarts(2)).unwrap();
        assert!(out.labels.iter().all(|&l| l == 0));
        let mean: Vec<f64> = (0..2)
            .map(|j| (0..9).map(|i| pts[(i, j)]).sum::<f64>() / 9.0)
            .collect();
        let scatter: f64 = (0..9).map(|i| sq_dist(pts.row(i), &mean)).sum();
        assert!((out.inertia - scatter).abs() < 1e-12);
    }

    #[test]
    fn duplicate_points_trigger_repair() {
        // only two distinct locations but k = 3
        let pts = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![5.0, 5.0],
            vec![5.0, 5.0],
        ]);
        let params = KMeansParams::new(3, 11).with_restarts(8);
        let out = kmeans(&pts, &params).unwrap();
        assert_eq!(out.inertia, 0.0);
        assert!(out.labels.iter().all(|&l| l < 3));
    }

    #[test]
    fn errors() {
        let pts = grid_points();
        assert!(matches!(
            kmeans(&Matrix::<f64>::zeros(0, 2), &KMeansParams::new(1, 0)),
            Err(Error::EmptyInput)
        ));
        assert!(kmeans(&pts, &KMeansParams::new(10, 0)).is_err());
        assert!(kmeans(&pts, &KMeansParams::new(2, 0).with_restarts(0)).is_err());
    }

    #[test]
    fn restart_streams_are_independent_of_order() {
        let pts = grid_points();
        let params = KMeansParams::new(3, 99).with_restarts(6);
        let forward: Vec<f64> = (0..6)
            .map(|r| kmeans_restart(&pts, &params, r).unwrap().inertia)
            .collect();
        let backward: Vec<f64> = (0..6)
            .rev()
            .map(|r| kmeans_restart(&pts, &params, r).unwrap().inertia)
            .collect();
        assert_eq!(forward, backward.into_iter().rev().collect::<Vec<_>>());
        let best = kmeans(&pts, &params).unwrap();
        assert!(forward.iter().all(|&i| best.inertia <= i));
    }
}
