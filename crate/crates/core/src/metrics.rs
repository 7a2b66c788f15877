//! Clustering quality: accuracy under optimal matching, NMI, ARI and the
//! pairwise F-measure. All four are computed from one contingency table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts of points per (predicted, true) cluster pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    /// `counts[p][t]`, rows follow the sorted predicted label values and
    /// columns the sorted true label values.
    pub counts: Vec<Vec<usize>>,
    pub pred_sizes: Vec<usize>,
    pub true_sizes: Vec<usize>,
    pub n: usize,
}

fn dense_ids(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    for &l in labels {
        ids.entry(l).or_insert(0);
    }
    for (next, v) in ids.values_mut().enumerate() {
        *v = next;
    }
    (labels.iter().map(|l| ids[l]).collect(), ids.len())
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::LabelLengthMismatch {
                predicted: pred.len(),
                truth: truth.len(),
            });
        }
        if pred.is_empty() {
            return Err(Error::EmptyInput);
        }
        let (p, kp) = dense_ids(pred);
        let (t, kt) = dense_ids(truth);
        let mut counts = vec![vec![0usize; kt]; kp];
        for (&a, &b) in p.iter().zip(&t) {
            counts[a][b] += 1;
        }
        let pred_sizes = counts.iter().map(|r| r.iter().sum()).collect();
        let true_sizes = (0..kt).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        Ok(Self {
            counts,
            pred_sizes,
            true_sizes,
            n: pred.len(),
        })
    }

    /// True when both labelings describe the same set partition.
    pub fn is_identity(&self) -> bool {
        self.pred_sizes.len() == self.true_sizes.len()
            && self
                .counts
                .iter()
                .all(|r| r.iter().filter(|&&c| c > 0).count() == 1)
            && (0..self.true_sizes.len())
                .all(|j| self.counts.iter().filter(|r| r[j] > 0).count() == 1)
    }

    fn pair_counts(&self) -> (u128, u128, u128, u128) {
        let c2 = |x: usize| (x as u128) * (x as u128).saturating_sub(1) / 2;
        let joint = self.counts.iter().flatten().map(|&c| c2(c)).sum();
        let pred = self.pred_sizes.iter().map(|&c| c2(c)).sum();
        let truth = self.true_sizes.iter().map(|&c| c2(c)).sum();
        (joint, pred, truth, c2(self.n))
    }
}

/// NMI normalizer applied to the mutual information.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NmiNorm {
    /// `sqrt(H(pred)·H(truth))`
    #[default]
    Sqrt,
    /// `max(H(pred), H(truth))`
    Max,
    /// `min(H(pred), H(truth))`
    Min,
}

/// Fraction of points matched under the best one-to-one label mapping.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let size = table.pred_sizes.len().max(table.true_sizes.len());
    let mut weights = vec![vec![0i64; size]; size];
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            weights[i][j] = c as i64;
        }
    }
    let matched = max_weight_matching(&weights);
    Ok(matched as f64 / table.n as f64)
}

/// Normalized mutual information with the `sqrt` normalizer.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    nmi_with(pred, truth, NmiNorm::Sqrt)
}

pub fn nmi_with(pred: &[usize], truth: &[usize], norm: NmiNorm) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let n = table.n as f64;
    let entropy = |sizes: &[usize]| -> f64 {
        sizes
            .iter()
            .filter(|&&s| s > 0)
            .map(|&s| {
                let p = s as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let hp = entropy(&table.pred_sizes);
    let ht = entropy(&table.true_sizes);
    let single_p = table.pred_sizes.len() == 1;
    let single_t = table.true_sizes.len() == 1;
    if single_p && single_t {
        return Ok(1.0);
    }
    if single_p || single_t {
        return Ok(0.0);
    }
    if table.is_identity() {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                let a = table.pred_sizes[i] as f64;
                let b = table.true_sizes[j] as f64;
                mi += (c / n) * (n * c / (a * b)).ln();
            }
        }
    }
    let denom = match norm {
        NmiNorm::Sqrt => (hp * ht).sqrt(),
        NmiNorm::Max => hp.max(ht),
        NmiNorm::Min => hp.min(ht),
    };
    Ok((mi / denom).clamp(0.0, 1.0))
}

/// Adjusted Rand index, evaluated in exact integer arithmetic up to the
/// final division.
pub fn ari(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let (joint, a, b, total) = table.pair_counts();
    // ARI = (joint·T − a·b) / ((a+b)·T/2 − a·b), scaled by 2 to stay integral
    let num = 2 * (joint as i128 * total as i128 - a as i128 * b as i128);
    let den = (a + b) as i128 * total as i128 - 2 * a as i128 * b as i128;
    if den == 0 {
        return Ok(if table.is_identity() { 1.0 } else { 0.0 });
    }
    Ok(num as f64 / den as f64)
}

/// Pairwise F-measure over same-cluster point pairs. Precision (recall) is
/// taken as 1 when the prediction (truth) has no same-cluster pairs.
pub fn fscore(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let (joint, pred_pairs, true_pairs, _) = table.pair_counts();
    let ratio = |num: u128, den: u128| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    let precision = ratio(joint, pred_pairs);
    let recall = ratio(joint, true_pairs);
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// The four reported scores.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub ac: f64,
    pub nmi: f64,
    pub ari: f64,
    pub fscore: f64,
}

pub fn evaluate(pred: &[usize], truth: &[usize], norm: NmiNorm) -> Result<Scores> {
    Ok(Scores {
        ac: accuracy(pred, truth)?,
        nmi: nmi_with(pred, truth, norm)?,
        ari: ari(pred, truth)?,
        fscore: fscore(pred, truth)?,
    })
}

/// Maximum total weight of a perfect matching on a square weight matrix
/// (Hungarian method with potentials, O(s³)).
fn max_weight_matching(weights: &[Vec<i64>]) -> i64 {
    let s = weights.len();
    if s == 0 {
        return 0;
    }
    let cost = |i: usize, j: usize| -weights[i][j];
    const INF: i64 = i64::MAX / 4;
    let mut u = vec![0i64; s + 1];
    let mut v = vec![0i64; s + 1];
    let mut p = vec![0usize; s + 1];
    let mut way = vec![0usize; s + 1];
    for i in 1..=s {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; s + 1];
        let mut used = vec![false; s + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=s {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=s {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=s).map(|j| weights[p[j] - 1][j - 1]).sum()
}
