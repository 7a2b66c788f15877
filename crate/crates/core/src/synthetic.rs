//! Synthetic datasets with known cluster structure.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::dataio::{Dataset, DatasetMeta};
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::scalar::Scalar;

fn observed_meta(source: &str, samples: &[Vec<f64>]) -> DatasetMeta {
    let (lo, hi) = samples
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    DatasetMeta {
        source: source.to_string(),
        original_range: (lo, hi),
        rescaled: false,
        value_range: (lo, hi),
        shortfall_classes: Vec::new(),
    }
}

fn build<T: Scalar>(source: &str, samples: Vec<Vec<f64>>, truth: Vec<usize>) -> Result<Dataset<T>> {
    let meta = observed_meta(source, &samples);
    let cast: Vec<Vec<T>> = samples
        .iter()
        .map(|s| s.iter().map(|&v| T::of(v)).collect())
        .collect();
    Dataset::new(DataMatrix::from_samples(&cast), truth, meta)
}

/// Points on concentric circles in the plane, evenly spaced in angle with
/// isotropic Gaussian jitter of standard deviation `noise`. Ring `r` gets
/// label `r`.
pub fn concentric_circles<T: Scalar>(radii: &[f64], per_ring: usize, noise: f64, seed: u64) -> Result<Dataset<T>> {
    if radii.is_empty() || per_ring == 0 {
        return Err(Error::EmptyInput);
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise must be >= 0, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, noise).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut samples = Vec::with_capacity(radii.len() * per_ring);
    let mut truth = Vec::with_capacity(samples.capacity());
    for (ring, &r) in radii.iter().enumerate() {
        for i in 0..per_ring {
            let t = std::f64::consts::TAU * i as f64 / per_ring as f64;
            samples.push(vec![
                r * t.cos() + jitter.sample(&mut rng),
                r * t.sin() + jitter.sample(&mut rng),
            ]);
            truth.push(ring);
        }
    }
    build("synthetic:circles", samples, truth)
}

/// Points drawn from `count` random `sub_dim`-dimensional linear subspaces of
/// `R^ambient`, `per_subspace` points each with Gaussian coefficients.
pub fn linear_subspaces<T: Scalar>(
    count: usize,
    ambient: usize,
    sub_dim: usize,
    per_subspace: usize,
    seed: u64,
) -> Result<Dataset<T>> {
    if count == 0 || per_subspace == 0 || sub_dim == 0 {
        return Err(Error::EmptyInput);
    }
    if sub_dim > ambient {
        return Err(Error::InvalidParameter(format!(
            "subspace dimension {sub_dim} exceeds ambient dimension {ambient}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(count * per_subspace);
    let mut truth = Vec::with_capacity(samples.capacity());
    for s in 0..count {
        let basis = orthonormal_basis(ambient, sub_dim, &mut rng);
        for _ in 0..per_subspace {
            let mut x = vec![0.0; ambient];
            for b in &basis {
                let w: f64 = StandardNormal.sample(&mut rng);
                x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += w * bi);
            }
            samples.push(x);
            truth.push(s);
        }
    }
    build("synthetic:subspaces", samples, truth)
}

/// Gram-Schmidt on Gaussian vectors.
fn orthonormal_basis(ambient: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v: Vec<f64> = (0..ambient).map(|_| StandardNormal.sample(rng)).collect();
        for b in &basis {
            let p: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            v.iter_mut().zip(b).for_each(|(a, c)| *a -= p * c);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            basis.push(v);
        }
    }
    basis
}
