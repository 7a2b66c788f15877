//! Kernel functions and kernel matrix construction.

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::{DataMatrix, Matrix};
use crate::scalar::{dot, sq_dist, Scalar};

pub const DEFAULT_DIAG_GUARD: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `exp(-‖x-y‖² / σ²)`
    #[default]
    Gaussian,
    /// `exp(-‖x-y‖² / (2σ²))`
    Heat,
    /// `(xᵀy)²`
    Poly2,
    /// `(xᵀy)³`
    Poly3,
    /// `exp(-‖x-y‖ / σ)`
    Exponential,
    /// `1 / ‖x-y‖`
    InvDist,
    /// `1 / ‖x-y‖²`
    InvDistSq,
    /// `xᵀy`
    Linear,
}

impl KernelKind {
    pub const ALL: [KernelKind; 8] = [
        KernelKind::Gaussian,
        KernelKind::Heat,
        KernelKind::Poly2,
        KernelKind::Poly3,
        KernelKind::Exponential,
        KernelKind::InvDist,
        KernelKind::InvDistSq,
        KernelKind::Linear,
    ];

    pub fn uses_bandwidth(self) -> bool {
        matches!(
            self,
            KernelKind::Gaussian | KernelKind::Heat | KernelKind::Exponential
        )
    }

    /// Inverse-distance kernels blow up at zero distance and are not PSD.
    pub fn is_singular(self) -> bool {
        matches!(self, KernelKind::InvDist | KernelKind::InvDistSq)
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Gaussian => "gaussian",
            KernelKind::Heat => "heat",
            KernelKind::Poly2 => "poly2",
            KernelKind::Poly3 => "poly3",
            KernelKind::Exponential => "exponential",
            KernelKind::InvDist => "inv_dist",
            KernelKind::InvDistSq => "inv_dist_sq",
            KernelKind::Linear => "linear",
        }
    }
}

/// Kernel width σ: a fixed positive value or the mean pairwise distance.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Bandwidth {
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for Bandwidth {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bandwidth::Auto => s.serialize_str("auto"),
            Bandwidth::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Bandwidth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) if v > 0.0 && v.is_finite() => Ok(Bandwidth::Fixed(v)),
            Raw::Number(v) => Err(serde::de::Error::custom(format!(
                "kernel bandwidth must be positive, got {v}"
            ))),
            Raw::Text(t) if t == "auto" => Ok(Bandwidth::Auto),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "kernel bandwidth must be a number or \"auto\", got {t:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    #[serde(default)]
    pub kind: KernelKind,
    #[serde(default, rename = "sigma")]
    pub bandwidth: Bandwidth,
    /// Distances below this are clamped before inversion.
    #[serde(default = "default_diag_guard")]
    pub diag_guard: f64,
}

fn default_diag_guard() -> f64 {
    DEFAULT_DIAG_GUARD
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::new(KernelKind::Gaussian)
    }
}

impl KernelSpec {
    pub fn new(kind: KernelKind) -> Self {
        Self {
            kind,
            bandwidth: Bandwidth::Auto,
            diag_guard: DEFAULT_DIAG_GUARD,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.bandwidth = Bandwidth::Fixed(sigma);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Bandwidth::Fixed(s) = self.bandwidth {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "kernel bandwidth must be positive, got {s}"
                )));
            }
        }
        if !(self.diag_guard > 0.0 && self.diag_guard.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "diag_guard must be positive, got {}",
                self.diag_guard
            )));
        }
        Ok(())
    }

    /// Replaces an `auto` bandwidth with the mean pairwise distance of `x`.
    /// Kernels without a bandwidth are returned unchanged.
    pub fn resolve<T: Scalar>(&self, x: &DataMatrix<T>) -> Result<KernelSpec> {
        self.validate()?;
        let mut out = *self;
        if self.kind.uses_bandwidth() && self.bandwidth == Bandwidth::Auto {
            out.bandwidth = Bandwidth::Fixed(default_bandwidth(x)?);
        }
        Ok(out)
    }

    pub fn sigma(&self) -> Option<f64> {
        match self.bandwidth {
            Bandwidth::Fixed(s) => Some(s),
            Bandwidth::Auto => None,
        }
    }
}

/// Evaluates `κ(x, y)`.
pub fn kernel_eval<T: Scalar>(spec: &KernelSpec, x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let sigma = if spec.kind.uses_bandwidth() {
        match spec.bandwidth {
            Bandwidth::Fixed(s) => T::of(s),
            Bandwidth::Auto => return Err(Error::UnresolvedBandwidth),
        }
    } else {
        T::one()
    };
    Ok(eval_unchecked(spec.kind, sigma, T::of(spec.diag_guard), x, y))
}

#[inline]
fn eval_unchecked<T: Scalar>(kind: KernelKind, sigma: T, guard: T, x: &[T], y: &[T]) -> T {
    match kind {
        KernelKind::Gaussian => (-sq_dist(x, y) / (sigma * sigma)).exp(),
        KernelKind::Heat => (-sq_dist(x, y) / (T::of(2.0) * sigma * sigma)).exp(),
        KernelKind::Poly2 => dot(x, y).powi(2),
        KernelKind::Poly3 => dot(x, y).powi(3),
        KernelKind::Exponential => (-sq_dist(x, y).sqrt() / sigma).exp(),
        KernelKind::InvDist => T::one() / sq_dist(x, y).sqrt().max(guard),
        KernelKind::InvDistSq => T::one() / sq_dist(x, y).sqrt().max(guard).powi(2),
        KernelKind::Linear => dot(x, y),
    }
}

/// Mean Euclidean distance over all unordered pairs of distinct samples.
pub fn default_bandwidth<T: Scalar>(x: &DataMatrix<T>) -> Result<f64> {
    let n = x.n_samples();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, found: n });
    }
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.sample(i);
            (i + 1..n)
                .map(|j| sq_dist(xi, x.sample(j)).sqrt().as_f64())
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .sum();
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(total / pairs)
}

/// Symmetric `n × n` matrix of kernel evaluations.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix<T> {
    pub values: Matrix<T>,
    /// The spec the matrix was built with, bandwidth resolved.
    pub spec: KernelSpec,
    /// Off-diagonal pairs (and diagonal entries) clamped by `diag_guard`.
    pub guarded_entries: usize,
}

impl<T: Scalar> KernelMatrix<T> {
    /// Wraps a precomputed symmetric matrix (linear kernel bookkeeping).
    pub fn from_matrix(values: Matrix<T>) -> Result<Self> {
        if !values.is_square() {
            return Err(Error::DimensionMismatch {
                expected: values.rows(),
                found: values.cols(),
            });
        }
        Ok(Self {
            values,
            spec: KernelSpec::new(KernelKind::Linear),
            guarded_entries: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    /// Column `i` of `K` (equal to row `i` by symmetry).
    pub fn column(&self, i: usize) -> &[T] {
        self.values.row(i)
    }
}

/// Builds `K_ij = κ(x_i, x_j)` from the upper triangle and mirrors it.
pub fn compute_kernel_matrix<T: Scalar>(
    x: &DataMatrix<T>,
    spec: &KernelSpec,
) -> Result<KernelMatrix<T>> {
    let n = x.n_samples();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, found: n });
    }
    let spec = spec.resolve(x)?;
    let sigma = T::of(spec.sigma().unwrap_or(1.0));
    let guard = T::of(spec.diag_guard);
    let kind = spec.kind;

    let upper: Vec<(Vec<T>, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.sample(i);
            let mut guarded = 0;
            let row = (i..n)
                .map(|j| {
                    let xj = x.sample(j);
                    if kind.is_singular() && sq_dist(xi, xj).sqrt() < guard {
                        guarded += 1;
                    }
                    eval_unchecked(kind, sigma, guard, xi, xj)
                })
                .collect();
            (row, guarded)
        })
        .collect();

    let mut values = Matrix::zeros(n, n);
    let mut guarded_entries = 0;
    for (i, (row, guarded)) in upper.into_iter().enumerate() {
        guarded_entries += guarded;
        for (off, v) in row.into_iter().enumerate() {
            let j = i + off;
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    Ok(KernelMatrix {
        values,
        spec,
        guarded_entries,
    })
}
