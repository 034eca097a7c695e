//! Linear SVM trained by dual coordinate descent on the L1-loss objective,
//! with one-vs-one multiclass reduction. The point of this model is not its
//! accuracy but its support-vector index set, which downstream diagnostics
//! intersect with actively acquired training sets.
//!
//! The bias is handled as an augmented constant-1 feature, so it is
//! regularized together with the weights (the usual trick for this solver
//! family).

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Dual coefficients above this threshold mark a training point as a
/// support vector. Pinned so that overlap counts are reproducible.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;

/// Projected gradients smaller than this are treated as exact zeros.
const PG_ZERO: f64 = 1e-12;

/// Solver configuration. Multiclass reduction is always one-vs-one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    /// Regularization strength; larger values penalize slack more.
    pub c: f64,
    /// Convergence threshold on the largest projected-gradient magnitude
    /// seen during an epoch.
    pub tol: f64,
    /// Cap on full passes over a pair's data.
    pub max_iter: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            tol: 1e-3,
            max_iter: 1000,
        }
    }
}

impl SvmConfig {
    fn validate(&self) -> Result<(), CoreError> {
        if !(self.c > 0.0 && self.c.is_finite()) || !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CoreError::InvalidConfig(String::from(
                "C and tol must be positive and finite",
            )));
        }
        if self.max_iter == 0 {
            return Err(CoreError::InvalidConfig(String::from(
                "max_iter must be positive",
            )));
        }
        Ok(())
    }
}

/// One binary subproblem of the one-vs-one reduction. The lower class index
/// takes the positive side.
#[derive(Debug, Clone, PartialEq)]
pub struct PairClassifier {
    pub class_pos: usize,
    pub class_neg: usize,
    /// Length `d + 1`; the last entry is the bias.
    pub weights: Vec<f64>,
    /// Dual coefficient per participating row, aligned with `members`.
    pub alphas: Vec<f64>,
    /// Row indices (into the training input) participating in this pair.
    pub members: Vec<usize>,
    /// Whether the solver reached tolerance before the iteration cap.
    pub converged: bool,
    /// Largest projected-gradient magnitude in the last epoch.
    pub final_violation: f64,
    pub epochs_run: usize,
}

impl PairClassifier {
    /// Decision value for an un-augmented input.
    pub fn decision(&self, x: &[f64]) -> f64 {
        let d = self.weights.len() - 1;
        let mut f = self.weights[d];
        for (w, xi) in self.weights[..d].iter().zip(x) {
            f += w * xi;
        }
        f
    }
}

/// Per-epoch objective trace of one pair's solver, for convergence checks.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTrace {
    pub class_pos: usize,
    pub class_neg: usize,
    /// Raw primal objective after each epoch. Individual snapshots may rise
    /// and fall; only the dual ascends monotonically under exact coordinate
    /// updates.
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    /// Duality gap tracker: best primal value seen so far minus the current
    /// dual. Non-negative by weak duality and non-increasing by construction.
    pub gap: Vec<f64>,
}

/// Trained one-vs-one linear SVM.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    config: SvmConfig,
    dim: usize,
    /// Class labels present in the training data, ascending.
    classes: Vec<usize>,
    pairs: Vec<PairClassifier>,
}

impl SvmModel {
    pub fn config(&self) -> &SvmConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn pairs(&self) -> &[PairClassifier] {
        &self.pairs
    }

    /// Union over pairs of the rows whose dual coefficient exceeds
    /// [`SUPPORT_THRESHOLD`].
    pub fn support_set(&self) -> BTreeSet<usize> {
        let mut set = BTreeSet::new();
        for pair in &self.pairs {
            for (&alpha, &row) in pair.alphas.iter().zip(&pair.members) {
                if alpha > SUPPORT_THRESHOLD {
                    set.insert(row);
                }
            }
        }
        set
    }

    /// One-vs-one majority vote; ties go to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> Result<usize, CoreError> {
        if x.len() != self.dim {
            return Err(CoreError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let max_class = *self.classes.last().expect("at least two classes");
        let mut votes = vec![0usize; max_class + 1];
        for pair in &self.pairs {
            if pair.decision(x) > 0.0 {
                votes[pair.class_pos] += 1;
            } else {
                votes[pair.class_neg] += 1;
            }
        }
        let mut best = self.classes[0];
        for &c in &self.classes {
            if votes[c] > votes[best] {
                best = c;
            }
        }
        Ok(best)
    }
}

fn pair_seed(pos: usize, neg: usize) -> u64 {
    0x5356_4d00_0000_0000u64 ^ ((pos as u64) << 20) ^ neg as u64
}

/// Train on dense embedding rows; `labels[i]` is the class of row `i`, and
/// support indices refer to these row positions.
pub fn train_svm(
    embeddings: &[Vec<f64>],
    labels: &[usize],
    config: &SvmConfig,
) -> Result<SvmModel, CoreError> {
    let (model, _) = train_svm_traced(embeddings, labels, config)?;
    Ok(model)
}

/// Like [`train_svm`] but also returning per-pair objective traces.
pub fn train_svm_traced(
    embeddings: &[Vec<f64>],
    labels: &[usize],
    config: &SvmConfig,
) -> Result<(SvmModel, Vec<PairTrace>), CoreError> {
    config.validate()?;
    if embeddings.is_empty() {
        return Err(CoreError::EmptySubset);
    }
    if embeddings.len() != labels.len() {
        return Err(CoreError::LengthMismatch {
            left: embeddings.len(),
            right: labels.len(),
        });
    }
    let dim = embeddings[0].len();
    if dim == 0 {
        return Err(CoreError::InvalidConfig(String::from(
            "embeddings must have at least one dimension",
        )));
    }
    for row in embeddings {
        if row.len() != dim {
            return Err(CoreError::DimensionMismatch {
                expected: dim,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite);
        }
    }
    let classes: Vec<usize> = labels
        .iter()
        .copied()
        .collect::<BTreeSet<usize>>()
        .into_iter()
        .collect();
    if classes.len() < 2 {
        return Err(CoreError::SingleClass);
    }

    let mut pairs = Vec::new();
    let mut traces = Vec::new();
    for (ai, &a) in classes.iter().enumerate() {
        for &b in &classes[ai + 1..] {
            let members: Vec<usize> = (0..labels.len())
                .filter(|&i| labels[i] == a || labels[i] == b)
                .collect();
            let ys: Vec<f64> = members
                .iter()
                .map(|&i| if labels[i] == a { 1.0 } else { -1.0 })
                .collect();
            let (pair, trace) = solve_pair(embeddings, &members, &ys, a, b, config);
            pairs.push(pair);
            traces.push(trace);
        }
    }
    Ok((
        SvmModel {
            config: *config,
            dim,
            classes,
            pairs,
        },
        traces,
    ))
}

/// Dual coordinate descent on one binary subproblem.
fn solve_pair(
    embeddings: &[Vec<f64>],
    members: &[usize],
    ys: &[f64],
    class_pos: usize,
    class_neg: usize,
    config: &SvmConfig,
) -> (PairClassifier, PairTrace) {
    let n = members.len();
    let d = embeddings[0].len();
    // Diagonal of Q: squared norm of the augmented row.
    let qii: Vec<f64> = members
        .iter()
        .map(|&i| embeddings[i].iter().map(|v| v * v).sum::<f64>() + 1.0)
        .collect();

    let mut w = vec![0.0f64; d + 1];
    let mut alphas = vec![0.0f64; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(pair_seed(class_pos, class_neg));

    let mut trace = PairTrace {
        class_pos,
        class_neg,
        primal: Vec::new(),
        dual: Vec::new(),
        gap: Vec::new(),
    };
    let mut converged = false;
    let mut final_violation = f64::INFINITY;
    let mut epochs_run = 0usize;

    for _ in 0..config.max_iter {
        order.shuffle(&mut rng);
        let mut max_violation = 0.0f64;
        for &k in &order {
            let row = &embeddings[members[k]];
            let y = ys[k];
            // G = y·f(x) - 1 with the augmented bias feature.
            let f: f64 = w[..d].iter().zip(&row[..]).map(|(wj, xj)| wj * xj).sum::<f64>() + w[d];
            let g = y * f - 1.0;
            let alpha = alphas[k];
            let pg = if alpha <= 0.0 {
                g.min(0.0)
            } else if alpha >= config.c {
                g.max(0.0)
            } else {
                g
            };
            if pg.abs() > PG_ZERO {
                max_violation = max_violation.max(pg.abs());
                let next = (alpha - g / qii[k]).clamp(0.0, config.c);
                let delta = next - alpha;
                if delta != 0.0 {
                    for (wj, xj) in w[..d].iter_mut().zip(&row[..]) {
                        *wj += delta * y * xj;
                    }
                    w[d] += delta * y;
                    alphas[k] = next;
                }
            }
        }
        epochs_run += 1;

        let w_norm_sq: f64 = w.iter().map(|v| v * v).sum();
        let mut hinge_sum = 0.0f64;
        for (k, &i) in members.iter().enumerate() {
            let f: f64 = w[..d]
                .iter()
                .zip(&embeddings[i][..])
                .map(|(wj, xj)| wj * xj)
                .sum::<f64>()
                + w[d];
            hinge_sum += (1.0 - ys[k] * f).max(0.0);
        }
        let primal = 0.5 * w_norm_sq + config.c * hinge_sum;
        let dual = alphas.iter().sum::<f64>() - 0.5 * w_norm_sq;
        trace.primal.push(primal);
        trace.dual.push(dual);
        let best_primal = trace.primal.iter().copied().fold(f64::INFINITY, f64::min);
        trace.gap.push(best_primal - dual);

        final_violation = max_violation;
        if max_violation < config.tol {
            converged = true;
            break;
        }
    }

    debug_assert!(alphas.iter().all(|&a| (0.0..=config.c).contains(&a)));
    (
        PairClassifier {
            class_pos,
            class_neg,
            weights: w,
            alphas,
            members: members.to_vec(),
            converged,
            final_violation,
            epochs_run,
        },
        trace,
    )
}

/// Percentage of the support set that was actively acquired:
/// `100 · |supports ∩ acquired| / |supports|`.
pub fn support_overlap(
    supports: &BTreeSet<usize>,
    acquired: &BTreeSet<usize>,
) -> Result<f64, CoreError> {
    if supports.is_empty() {
        return Err(CoreError::EmptySupportSet);
    }
    let common = supports.intersection(acquired).count();
    Ok(100.0 * common as f64 / supports.len() as f64)
}
