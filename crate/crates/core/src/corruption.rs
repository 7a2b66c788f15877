//! Seeded corruption of data matrices.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    #[default]
    None,
    GaussianSnr,
    SaltPepper,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    /// Target signal-to-noise ratio in dB (`gaussian_snr`).
    pub snr_db: f64,
    /// Fraction of entries hit (`salt_pepper`).
    pub ratio: f64,
    /// Valid value bounds `(low, high)`.
    pub value_range: (f64, f64),
    pub seed: u64,
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        Self::none()
    }
}

impl CorruptionSpec {
    pub fn none() -> Self {
        Self {
            kind: CorruptionKind::None,
            snr_db: f64::INFINITY,
            ratio: 0.0,
            value_range: (0.0, 1.0),
            seed: 0,
        }
    }

    pub fn gaussian_snr(snr_db: f64, seed: u64) -> Self {
        Self {
            kind: CorruptionKind::GaussianSnr,
            snr_db,
            seed,
            ..Self::none()
        }
    }

    pub fn salt_pepper(ratio: f64, seed: u64) -> Self {
        Self {
            kind: CorruptionKind::SaltPepper,
            ratio,
            seed,
            ..Self::none()
        }
    }

    pub fn with_range(mut self, low: f64, high: f64) -> Self {
        self.value_range = (low, high);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (low, high) = self.value_range;
        if !(low < high) || !low.is_finite() || !high.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "value range must satisfy low < high, got ({low}, {high})"
            )));
        }
        if !(0.0..=1.0).contains(&self.ratio) {
            return Err(Error::InvalidParameter(format!(
                "salt-and-pepper ratio must lie in [0, 1], got {}",
                self.ratio
            )));
        }
        if self.snr_db.is_nan() {
            return Err(Error::InvalidParameter("snr_db is NaN".into()));
        }
        Ok(())
    }
}

/// Corrupted matrix plus what happened to it.
#[derive(Clone, Debug, PartialEq)]
pub struct Corrupted<T> {
    pub data: DataMatrix<T>,
    /// Entries pulled back into the value range after adding noise.
    pub clipped: usize,
    /// Positions overwritten by salt-and-pepper.
    pub selected: usize,
    /// Standard deviation of the added noise.
    pub noise_std: f64,
}

/// Dispatches on `spec.kind`.
pub fn corrupt<T: Scalar>(x: &DataMatrix<T>, spec: &CorruptionSpec) -> Result<Corrupted<T>> {
    spec.validate()?;
    match spec.kind {
        CorruptionKind::None => Ok(Corrupted {
            data: x.clone(),
            clipped: 0,
            selected: 0,
            noise_std: 0.0,
        }),
        CorruptionKind::GaussianSnr => add_gaussian_snr(x, spec),
        CorruptionKind::SaltPepper => Ok(add_salt_pepper(x, spec)),
    }
}

/// Adds i.i.d. zero-mean Gaussian noise with variance
/// `mean(x²) / 10^(snr_db/10)`, then clips to the value range.
pub fn add_gaussian_snr<T: Scalar>(x: &DataMatrix<T>, spec: &CorruptionSpec) -> Result<Corrupted<T>> {
    spec.validate()?;
    if spec.kind == CorruptionKind::None || spec.snr_db == f64::INFINITY {
        return Ok(Corrupted {
            data: x.clone(),
            clipped: 0,
            selected: 0,
            noise_std: 0.0,
        });
    }
    let values = x.values();
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let power = values.iter().map(|v| v.as_f64().powi(2)).sum::<f64>() / values.len() as f64;
    if power == 0.0 {
        return Err(Error::ZeroSignalPower);
    }
    let std = (power / 10f64.powf(spec.snr_db / 10.0)).sqrt();
    let normal = Normal::new(0.0, std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (low, high) = spec.value_range;
    let mut out = x.clone();
    let mut clipped = 0;
    for v in out.values_mut() {
        let noisy = v.as_f64() + normal.sample(&mut rng);
        let bounded = noisy.clamp(low, high);
        if bounded != noisy {
            clipped += 1;
        }
        *v = T::of(bounded);
    }
    Ok(Corrupted {
        data: out,
        clipped,
        selected: 0,
        noise_std: std,
    })
}

/// Sets `⌊ratio·m·n⌋` distinct positions, chosen uniformly, to `low` or
/// `high` with equal probability.
pub fn add_salt_pepper<T: Scalar>(x: &DataMatrix<T>, spec: &CorruptionSpec) -> Corrupted<T> {
    let total = x.values().len();
    let count = ((spec.ratio * total as f64).floor() as usize).min(total);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (low, high) = (T::of(spec.value_range.0), T::of(spec.value_range.1));
    let mut out = x.clone();
    let values = out.values_mut();
    for pos in index::sample(&mut rng, total, count) {
        values[pos] = if rng.random::<bool>() { high } else { low };
    }
    Corrupted {
        data: out,
        clipped: 0,
        selected: count,
        noise_std: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(m: usize, n: usize) -> DataMatrix<f64> {
        let data = (0..m * n).map(|i| 0.05 + 0.9 * ((i * 37) % 101) as f64 / 101.0).collect();
        DataMatrix::from_column_major(m, n, data)
    }

    #[test]
    fn none_is_identity() {
        let x = grid(4, 5);
        assert_eq!(corrupt(&x, &CorruptionSpec::none()).unwrap().data, x);
        let inf = CorruptionSpec::gaussian_snr(f64::INFINITY, 3);
        assert_eq!(corrupt(&x, &inf).unwrap().data, x);
    }

    #[test]
    fn salt_pepper_extremes() {
        let x = grid(6, 7);
        assert_eq!(add_salt_pepper(&x, &CorruptionSpec::salt_pepper(0.0, 1)).data, x);
        let all = add_salt_pepper(&x, &CorruptionSpec::salt_pepper(1.0, 1));
        assert!(all.data.values().iter().all(|&v| v == 0.0 || v == 1.0));
        assert_eq!(all.selected, 42);
    }

    #[test]
    fn salt_pepper_counts_positions() {
        let x = grid(10, 10);
        let out = add_salt_pepper(&x, &CorruptionSpec::salt_pepper(0.25, 9));
        let changed = x
            .values()
            .iter()
            .zip(out.data.values())
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(changed, 25);
    }

    #[test]
    fn deterministic_for_seed() {
        let x = grid(8, 8);
        let spec = CorruptionSpec::gaussian_snr(20.0, 5);
        assert_eq!(corrupt(&x, &spec).unwrap(), corrupt(&x, &spec).unwrap());
        let other = CorruptionSpec::gaussian_snr(20.0, 6);
        assert_ne!(corrupt(&x, &spec).unwrap().data, corrupt(&x, &other).unwrap().data);
    }

    #[test]
    fn gaussian_stays_in_range() {
        let x = grid(20, 20);
        let out = add_gaussian_snr(&x, &CorruptionSpec::gaussian_snr(0.0, 2)).unwrap();
        assert!(out.data.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(out.clipped > 0);
    }

    #[test]
    fn errors() {
        let zeros = DataMatrix::from_column_major(2, 2, vec![0.0; 4]);
        assert!(matches!(
            add_gaussian_snr(&zeros, &CorruptionSpec::gaussian_snr(10.0, 0)),
            Err(Error::ZeroSignalPower)
        ));
        let x = grid(2, 2);
        assert!(corrupt(&x, &CorruptionSpec::salt_pepper(1.5, 0)).is_err());
        assert!(corrupt(&x, &CorruptionSpec::none().with_range(1.0, 0.0)).is_err());
    }
}
