//! Proper scoring rules and confusion-matrix evaluation of labeled
//! probabilistic predictions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pmf::{check_tolerance, NormPolicy, Pmf, DEFAULT_EPS_MODE};

/// Default floor applied to probabilities inside the cross-entropy logarithm.
pub const DEFAULT_EPS_CLIP: f64 = 1e-12;

/// `N x K` predicted probabilities paired with true class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledProbabilities {
    rows: Vec<Pmf>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabeledProbabilities {
    /// Builds from probability rows and zero-based class indices.
    pub fn new(probs: &[Vec<f64>], labels: &[usize], policy: NormPolicy) -> Result<Self> {
        let rows = probs
            .iter()
            .map(|r| Pmf::new(r, policy))
            .collect::<Result<Vec<_>>>()?;
        Self::from_pmfs(rows, labels.to_vec())
    }

    /// Builds from probability rows and a one-hot label matrix.
    pub fn from_one_hot(probs: &[Vec<f64>], one_hot: &[Vec<f64>], policy: NormPolicy) -> Result<Self> {
        let labels = one_hot
            .iter()
            .enumerate()
            .map(|(row, y)| {
                let ones: Vec<usize> = y
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v == 1.0)
                    .map(|(k, _)| k)
                    .collect();
                let zeros = y.iter().filter(|&&v| v == 0.0).count();
                if ones.len() == 1 && zeros + 1 == y.len() {
                    Ok(ones[0])
                } else {
                    Err(Error::InvalidLabel { row })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(probs, &labels, policy)
    }

    pub fn from_pmfs(rows: Vec<Pmf>, labels: Vec<usize>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput);
        }
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        let num_classes = rows[0].num_classes();
        if let Some(bad) = rows.iter().find(|r| r.num_classes() != num_classes) {
            return Err(Error::DimensionMismatch {
                expected: num_classes,
                got: bad.num_classes(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: num_classes,
            });
        }
        Ok(LabeledProbabilities {
            rows,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn rows(&self) -> &[Pmf] {
        &self.rows
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// One-hot row for observation `i`.
    pub fn one_hot(&self, i: usize) -> Vec<f64> {
        let mut y = vec![0.0; self.num_classes];
        y[self.labels[i]] = 1.0;
        y
    }
}

/// Cross-entropy `-Σ y_k log(max(p_k, eps_clip))` for a single observation.
pub fn xe_per_obs(label_row: &[f64], prob_row: &[f64], eps_clip: f64) -> f64 {
    -label_row
        .iter()
        .zip(prob_row)
        .filter(|(&y, _)| y != 0.0)
        .map(|(&y, &p)| y * p.max(eps_clip).ln())
        .sum::<f64>()
}

/// Brier score `(1/K) Σ (y_k - p_k)²` for a single observation.
pub fn brier_per_obs(label_row: &[f64], prob_row: &[f64]) -> f64 {
    let sq: f64 = label_row
        .iter()
        .zip(prob_row)
        .map(|(y, p)| (y - p).powi(2))
        .sum();
    sq / prob_row.len() as f64
}

/// Class frequencies of the test labels.
pub fn test_prior(data: &LabeledProbabilities) -> Pmf {
    let mut counts = vec![0.0; data.num_classes];
    for &l in &data.labels {
        counts[l] += 1.0;
    }
    Pmf::new(&counts, NormPolicy::Renormalize).expect("at least one label")
}

/// Expected cross-entropy normalized by the entropy (natural log) of the test
/// prior: 0 for perfect predictions, 1 for predicting the prior everywhere.
pub fn exe(data: &LabeledProbabilities, eps_clip: f64) -> Result<f64> {
    check_tolerance("eps_clip", eps_clip)?;
    let q = test_prior(data);
    let denom: f64 = -q
        .probs()
        .iter()
        .filter(|&&qk| qk > 0.0)
        .map(|&qk| qk * qk.ln())
        .sum::<f64>();
    if denom <= 0.0 {
        return Err(Error::DegeneratePrior);
    }
    let total: f64 = data
        .rows
        .iter()
        .zip(&data.labels)
        .map(|(row, &l)| -row.probs()[l].max(eps_clip).ln())
        .sum::<f64>()
        + 0.0;
    Ok(total / data.len() as f64 / denom)
}

/// Expected squared error `Σ_k (y_ik - p_ik)²` normalized by `Σ q_k (1 - q_k)`.
pub fn ebs(data: &LabeledProbabilities) -> Result<f64> {
    let q = test_prior(data);
    let denom: f64 = q.probs().iter().map(|qk| qk * (1.0 - qk)).sum();
    if denom <= 0.0 {
        return Err(Error::DegeneratePrior);
    }
    let total: f64 = data
        .rows
        .iter()
        .zip(&data.labels)
        .map(|(row, &l)| {
            row.probs()
                .iter()
                .enumerate()
                .map(|(k, p)| if k == l { (1.0 - p).powi(2) } else { p * p })
                .sum::<f64>()
        })
        .sum();
    Ok(total / data.len() as f64 / denom)
}

/// What to do when a prediction row has several maximal classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    #[default]
    LowestIndex,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassRates {
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub tnr: Option<f64>,
    pub fnr: Option<f64>,
}

/// Counts indexed `[true][predicted]` plus per-class rates and the
/// misclassification rate. A rate is `None` when its denominator is zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
    pub rates: Vec<ClassRates>,
    pub classification_loss: f64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Predicted class under the tie rule, with ties judged relative to `eps_mode`.
pub fn predicted_class(pmf: &Pmf, tie_rule: TieRule, eps_mode: f64) -> Option<usize> {
    let modes = pmf.mode_summary(eps_mode);
    match tie_rule {
        TieRule::LowestIndex => Some(modes.mode_indices[0]),
        TieRule::Error if modes.mode_count > 1 => None,
        TieRule::Error => Some(modes.mode_indices[0]),
    }
}

pub fn confusion(data: &LabeledProbabilities, tie_rule: TieRule) -> Result<ConfusionMatrix> {
    confusion_with_tolerance(data, tie_rule, DEFAULT_EPS_MODE)
}

pub fn confusion_with_tolerance(
    data: &LabeledProbabilities,
    tie_rule: TieRule,
    eps_mode: f64,
) -> Result<ConfusionMatrix> {
    check_tolerance("eps_mode", eps_mode)?;
    let k = data.num_classes;
    let mut counts = vec![vec![0u64; k]; k];
    for (row, (pmf, &label)) in data.rows.iter().zip(&data.labels).enumerate() {
        let pred = predicted_class(pmf, tie_rule, eps_mode).ok_or(Error::AmbiguousArgmax { row })?;
        counts[label][pred] += 1;
    }
    let n: u64 = data.len() as u64;
    let correct: u64 = (0..k).map(|c| counts[c][c]).sum();
    let rates = (0..k)
        .map(|c| {
            let tp = counts[c][c];
            let fn_ = counts[c].iter().sum::<u64>() - tp;
            let fp = (0..k).map(|r| counts[r][c]).sum::<u64>() - tp;
            let tn = n - tp - fn_ - fp;
            ClassRates {
                tpr: ratio(tp, tp + fn_),
                fpr: ratio(fp, fp + tn),
                tnr: ratio(tn, fp + tn),
                fnr: ratio(fn_, tp + fn_),
            }
        })
        .collect();
    Ok(ConfusionMatrix {
        counts,
        rates,
        classification_loss: (n - correct) as f64 / n as f64,
    })
}
