//! Measurements over completed acquisition runs: label entropy of queries
//! and final samples (class bias), set-intersection stability with its
//! chance baseline, and calibration metrics of predicted probabilities.
//! All functions here are pure; serialization lives in the companion crate.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::math;

/// Probability floor applied inside KL sums and log-losses so that empty
/// classes and zero predicted probabilities yield large finite values
/// instead of infinities.
pub const KL_EPSILON: f64 = 1e-12;

/// Per-class counts of a label multiset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelHistogram {
    counts: Vec<u64>,
}

impl LabelHistogram {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self, CoreError> {
        if counts.is_empty() {
            return Err(CoreError::EmptyHistogram);
        }
        Ok(LabelHistogram { counts })
    }

    /// Count labels from an iterator; each label must be `< num_classes`.
    pub fn from_labels<I>(labels: I, num_classes: usize) -> Result<Self, CoreError>
    where
        I: IntoIterator<Item = usize>,
    {
        if num_classes == 0 {
            return Err(CoreError::EmptyHistogram);
        }
        let mut counts = vec![0u64; num_classes];
        for (i, label) in labels.into_iter().enumerate() {
            if label >= num_classes {
                return Err(CoreError::LabelOutOfRange {
                    id: i,
                    label,
                    num_classes,
                });
            }
            counts[label] += 1;
        }
        Ok(LabelHistogram { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Label entropy in nats: `ln C − KL(uniform ‖ P̂)` where `P̂` is the
/// histogram's empirical distribution. The maximum `ln C` is reached exactly
/// at the uniform histogram. Empirical probabilities are floored at
/// [`KL_EPSILON`] inside the KL sum, so histograms with empty classes give a
/// large negative value rather than `-inf`.
pub fn label_entropy(hist: &LabelHistogram) -> Result<f64, CoreError> {
    let total = hist.total();
    if total == 0 {
        return Err(CoreError::EmptyHistogram);
    }
    let c = hist.num_classes() as f64;
    let uniform = 1.0 / c;
    let mut kl = 0.0f64;
    for &count in hist.counts() {
        let p_hat = (count as f64 / total as f64).max(KL_EPSILON);
        kl += uniform * math::ln(uniform / p_hat);
    }
    Ok(math::ln(c) - kl)
}

/// The per-query bias statistic: label entropy of each round's selected ids,
/// aggregated as (mean, population std) over rounds.
///
/// `queries` holds the selected ids per round; `labels[id]` is the label of
/// document `id`.
pub fn per_query_label_entropy(
    queries: &[Vec<usize>],
    labels: &[usize],
    num_classes: usize,
) -> Result<(f64, f64), CoreError> {
    if queries.is_empty() {
        return Err(CoreError::EmptySubset);
    }
    let mut entropies = Vec::with_capacity(queries.len());
    for query in queries {
        let hist = LabelHistogram::from_labels(
            query.iter().map(|&id| {
                debug_assert!(id < labels.len());
                labels[id]
            }),
            num_classes,
        )?;
        entropies.push(label_entropy(&hist)?);
    }
    let mean = entropies.iter().sum::<f64>() / entropies.len() as f64;
    Ok((mean, math::population_std(&entropies)))
}

/// The final-sample bias statistic: label entropy of one id set (typically
/// the acquired set of a completed run).
pub fn final_sample_label_entropy(
    ids: &BTreeSet<usize>,
    labels: &[usize],
    num_classes: usize,
) -> Result<f64, CoreError> {
    let hist = LabelHistogram::from_labels(ids.iter().map(|&id| labels[id]), num_classes)?;
    label_entropy(&hist)
}

/// Percentage of `a` that is shared with `b`: `100 · |a ∩ b| / |a|`.
pub fn overlap_pct(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> Result<f64, CoreError> {
    if a.is_empty() {
        return Err(CoreError::EmptySubset);
    }
    let common = a.intersection(b).count();
    Ok(100.0 * common as f64 / a.len() as f64)
}

/// Expected [`overlap_pct`] of two independent uniform subsets of a pool:
/// `100 · size_b / n_pool` (the hypergeometric expectation of `|a∩b|/|a|`).
pub fn chance_overlap(n_pool: usize, size_a: usize, size_b: usize) -> f64 {
    debug_assert!(size_a <= n_pool && size_b <= n_pool && n_pool > 0);
    let _ = size_a; // the expectation does not depend on |a|
    100.0 * size_b as f64 / n_pool as f64
}

/// One measured intersection with its chance baseline and a tag describing
/// what varied between the two runs (seed, query size, strategy, or model).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapStat {
    pub observed: f64,
    pub chance: f64,
    pub size_a: usize,
    pub size_b: usize,
    pub context: String,
}

/// Calibration metrics of a batch of predicted probability vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    /// Mean negative log-likelihood of the true class.
    pub nll: f64,
    /// Mean multiclass Brier score, in `[0, 2]`.
    pub brier: f64,
    /// Expected calibration error over 10 equal-width confidence bins.
    pub ece: f64,
    /// Mean variation ratio `1 − max_c p_c`.
    pub var_ratio: f64,
    /// Mean predictive entropy in nats.
    pub mean_entropy: f64,
    /// Mean (over samples) population std of the C probability entries.
    pub mean_std: f64,
}

/// Number of equal-width ECE bins.
pub const ECE_BINS: usize = 10;

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Right-closed equal-width bin of a confidence value: bin `k` covers
/// `(k/10, (k+1)/10]`, with values ≤ 0 landing in bin 0.
fn ece_bin(conf: f64) -> usize {
    let idx = libm::ceil(conf * ECE_BINS as f64) as isize - 1;
    idx.clamp(0, ECE_BINS as isize - 1) as usize
}

/// Compute all calibration metrics for predictions against true labels.
/// Every prediction row must lie on the probability simplex.
pub fn calibration(
    predictions: &[Vec<f64>],
    labels: &[usize],
) -> Result<CalibrationReport, CoreError> {
    if predictions.is_empty() {
        return Err(CoreError::EmptySubset);
    }
    if predictions.len() != labels.len() {
        return Err(CoreError::LengthMismatch {
            left: predictions.len(),
            right: labels.len(),
        });
    }
    let c = predictions[0].len();
    if c < 2 {
        return Err(CoreError::InvalidConfig(String::from(
            "probability vectors need at least 2 entries",
        )));
    }
    for (i, p) in predictions.iter().enumerate() {
        if p.len() != c {
            return Err(CoreError::DimensionMismatch {
                expected: c,
                got: p.len(),
            });
        }
        if p.iter().any(|&v| !v.is_finite() || v < -1e-9) {
            return Err(CoreError::NotOnSimplex);
        }
        if (p.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            return Err(CoreError::NotOnSimplex);
        }
        if labels[i] >= c {
            return Err(CoreError::LabelOutOfRange {
                id: i,
                label: labels[i],
                num_classes: c,
            });
        }
    }

    let n = predictions.len() as f64;
    let mut nll = 0.0f64;
    let mut brier = 0.0f64;
    let mut var_ratio = 0.0f64;
    let mut mean_entropy = 0.0f64;
    let mut mean_std = 0.0f64;
    let mut bin_conf = [0.0f64; ECE_BINS];
    let mut bin_correct = [0.0f64; ECE_BINS];
    let mut bin_count = [0usize; ECE_BINS];

    for (p, &label) in predictions.iter().zip(labels) {
        nll += -math::ln(p[label].max(KL_EPSILON));

        for (cidx, &pc) in p.iter().enumerate() {
            let target = if cidx == label { 1.0 } else { 0.0 };
            brier += (pc - target) * (pc - target);
        }

        let pred = argmax(p);
        let conf = p[pred];
        var_ratio += 1.0 - conf;

        let bin = ece_bin(conf);
        bin_conf[bin] += conf;
        bin_correct[bin] += if pred == label { 1.0 } else { 0.0 };
        bin_count[bin] += 1;

        mean_entropy += p
            .iter()
            .map(|&pc| if pc > 0.0 { -pc * math::ln(pc) } else { 0.0 })
            .sum::<f64>();

        mean_std += math::population_std(p);
    }

    let mut ece = 0.0f64;
    for k in 0..ECE_BINS {
        if bin_count[k] > 0 {
            let w = bin_count[k] as f64 / n;
            let acc = bin_correct[k] / bin_count[k] as f64;
            let conf = bin_conf[k] / bin_count[k] as f64;
            ece += w * (acc - conf).abs();
        }
    }

    let report = CalibrationReport {
        nll: nll / n,
        brier: brier / n,
        ece,
        var_ratio: var_ratio / n,
        mean_entropy: mean_entropy / n,
        mean_std: mean_std / n,
    };
    debug_assert!((0.0..=1.0).contains(&report.ece));
    debug_assert!((0.0..=2.0 + 1e-9).contains(&report.brier));
    Ok(report)
}
