//! The pool-based acquisition engine. A run starts from a uniformly drawn
//! seed set S_0 and grows it over b rounds: each round trains a fresh model
//! on the current train set, scores the remaining pool, moves the top-K ids
//! into the train set (optionally deleting the least uncertain train members
//! back into the pool), and records full provenance for diagnostics.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::LabeledCorpus;
use crate::error::CoreError;
use crate::ftext::{self, FtModel, FtTrainConfig, PreparedCorpus, TokenizedDoc};
use crate::math;
use crate::nbayes::NbClassifier;

/// Spacing between the model seeds of consecutive rounds.
pub const ROUND_SEED_STRIDE: u64 = 0x9E37_79B9;

/// Training seed of a round's model: the run seed advanced by a fixed stride
/// per round, plus the ensemble member index. Ensemble members therefore
/// differ only by seed.
pub fn model_seed(run_seed: u64, round_idx: u64, member: u64) -> u64 {
    run_seed
        .wrapping_add(round_idx.wrapping_mul(ROUND_SEED_STRIDE))
        .wrapping_add(member)
}

/// Acquisition strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcquisitionKind {
    /// Uniform sampling from the pool — the passive baseline.
    Random,
    /// Highest predictive entropy.
    Entropy,
    /// Least confidence: highest `1 − max_c p_c`.
    #[serde(rename = "lc")]
    LeastConfidence,
    /// Entropy acquisition plus per-round deletion of the least uncertain
    /// train members.
    DelEntropy,
    /// Least-confidence acquisition plus deletion.
    DelLc,
    /// Entropy over the mean posterior of an ensemble.
    EnsEntropy,
    /// Least confidence over the mean posterior of an ensemble.
    EnsLc,
    /// Greedy k-center coverage of the sentence-embedding space.
    Coreset,
}

impl AcquisitionKind {
    /// Stable kebab-case name, matching the serialized form.
    pub fn name(&self) -> &'static str {
        match self {
            AcquisitionKind::Random => "random",
            AcquisitionKind::Entropy => "entropy",
            AcquisitionKind::LeastConfidence => "lc",
            AcquisitionKind::DelEntropy => "del-entropy",
            AcquisitionKind::DelLc => "del-lc",
            AcquisitionKind::EnsEntropy => "ens-entropy",
            AcquisitionKind::EnsLc => "ens-lc",
            AcquisitionKind::Coreset => "coreset",
        }
    }

    pub fn is_ensemble(&self) -> bool {
        matches!(self, AcquisitionKind::EnsEntropy | AcquisitionKind::EnsLc)
    }

    pub fn deletes(&self) -> bool {
        matches!(self, AcquisitionKind::DelEntropy | AcquisitionKind::DelLc)
    }

    fn uses_entropy(&self) -> bool {
        matches!(
            self,
            AcquisitionKind::Entropy | AcquisitionKind::DelEntropy | AcquisitionKind::EnsEntropy
        )
    }
}

/// Strategy plus its knobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcquisitionSpec {
    pub kind: AcquisitionKind,
    /// Committee size for ensemble kinds.
    pub ensemble_size: usize,
    /// Train members deleted per round for deletion kinds; `None` means
    /// `⌊K/2⌋`.
    pub delete_count: Option<usize>,
}

impl AcquisitionSpec {
    pub fn new(kind: AcquisitionKind) -> Self {
        AcquisitionSpec {
            kind,
            ensemble_size: 5,
            delete_count: None,
        }
    }
}

/// Which classifier the loop trains each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    Ftext,
    Nbayes,
}

impl ModelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::Ftext => "ftext",
            ModelFamily::Nbayes => "nbayes",
        }
    }
}

/// Full configuration of one acquisition run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    /// Query size K: ids acquired per round.
    pub query_size: usize,
    /// Number of acquisition rounds b.
    pub rounds: usize,
    /// Size of the random seed set S_0; `None` means K.
    pub init_size: Option<usize>,
    pub seed: u64,
    pub model: ModelFamily,
    pub acquisition: AcquisitionSpec,
    /// Hyperparameters of the embedding classifier (used by the `ftext`
    /// family and by coreset embeddings). Its `seed` field is ignored: the
    /// loop derives per-round seeds via [`model_seed`].
    pub ft: FtTrainConfig,
}

impl LoopConfig {
    pub fn resolved_init_size(&self) -> usize {
        self.init_size.unwrap_or(self.query_size)
    }

    pub fn resolved_delete_count(&self) -> usize {
        self.acquisition
            .delete_count
            .unwrap_or(self.query_size / 2)
    }

    fn validate(&self, corpus_size: usize) -> Result<(), CoreError> {
        if self.query_size == 0 || self.rounds == 0 {
            return Err(CoreError::InvalidConfig(String::from(
                "query_size and rounds must be positive",
            )));
        }
        let s0 = self.resolved_init_size();
        if s0 == 0 {
            return Err(CoreError::InvalidConfig(String::from(
                "init_size must be positive",
            )));
        }
        let needed = s0 + self.rounds * self.query_size;
        if needed > corpus_size {
            return Err(CoreError::InvalidConfig(alloc::format!(
                "init_size + rounds × query_size = {needed} exceeds corpus size {corpus_size}"
            )));
        }
        if self.acquisition.kind.is_ensemble() && self.acquisition.ensemble_size < 2 {
            return Err(CoreError::InvalidConfig(String::from(
                "ensemble kinds need ensemble_size >= 2",
            )));
        }
        if self.acquisition.kind == AcquisitionKind::Coreset && self.model != ModelFamily::Ftext {
            return Err(CoreError::CoresetNeedsEmbeddings);
        }
        Ok(())
    }
}

/// Provenance of one acquisition round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    /// 1-based round index.
    pub round: usize,
    /// Acquired ids in selection order.
    pub selected: Vec<usize>,
    /// Acquisition score per selected id (zeros for the random strategy;
    /// coverage distances for coreset).
    pub scores: Vec<f64>,
    /// Ids returned to the pool this round (deletion kinds only).
    pub deleted: Vec<usize>,
    /// Train-set size after this round's acquisition and deletion.
    pub train_size: usize,
    /// Pool size after this round.
    pub pool_size: usize,
    /// Held-out accuracy of the model trained at the start of this round.
    pub accuracy: f64,
}

/// One point of the accuracy-versus-labeled-fraction curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub fraction_labeled: f64,
    pub accuracy: f64,
}

/// Completed run: configuration echo, the train-set sequence, per-round
/// records, and the master rng in its final state.
#[derive(Debug, Clone, PartialEq)]
pub struct AlState {
    config: LoopConfig,
    corpus_size: usize,
    initial: Vec<usize>,
    /// S_0 ..= S_b, each sorted ascending.
    train_sets: Vec<Vec<usize>>,
    /// Final pool, sorted ascending.
    pool: Vec<usize>,
    records: Vec<QueryRecord>,
    final_accuracy: f64,
    rng: ChaCha20Rng,
}

impl AlState {
    pub fn config(&self) -> &LoopConfig {
        &self.config
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    /// The randomly drawn S_0, sorted.
    pub fn initial(&self) -> &[usize] {
        &self.initial
    }

    pub fn train_sets(&self) -> &[Vec<usize>] {
        &self.train_sets
    }

    /// Final train set S_b, sorted.
    pub fn final_train(&self) -> &[usize] {
        self.train_sets.last().expect("S_0 always present")
    }

    pub fn pool(&self) -> &[usize] {
        &self.pool
    }

    pub fn records(&self) -> &[QueryRecord] {
        &self.records
    }

    /// Selected ids per round, in selection order.
    pub fn queries(&self) -> Vec<Vec<usize>> {
        self.records.iter().map(|r| r.selected.clone()).collect()
    }

    pub fn final_accuracy(&self) -> f64 {
        self.final_accuracy
    }
}

/// The actively acquired set Ŝ = S_b − S_0.
pub fn acquired_set(state: &AlState) -> BTreeSet<usize> {
    let initial: BTreeSet<usize> = state.initial().iter().copied().collect();
    state
        .final_train()
        .iter()
        .copied()
        .filter(|id| !initial.contains(id))
        .collect()
}

fn check_simplex(p: &[f64]) -> Result<(), CoreError> {
    if p.iter().any(|&v| !v.is_finite() || v < -1e-9) {
        return Err(CoreError::NotOnSimplex);
    }
    if (p.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
        return Err(CoreError::NotOnSimplex);
    }
    Ok(())
}

/// Predictive entropy `−Σ p ln p` in nats, with `0·ln 0 = 0`.
pub fn score_entropy(p: &[f64]) -> Result<f64, CoreError> {
    check_simplex(p)?;
    Ok(p.iter()
        .map(|&pc| if pc > 0.0 { -pc * math::ln(pc) } else { 0.0 })
        .sum())
}

/// Least-confidence score `1 − max_c p_c`.
pub fn score_lc(p: &[f64]) -> Result<f64, CoreError> {
    check_simplex(p)?;
    let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(1.0 - max)
}

/// Arithmetic mean of the members' probability vectors.
pub fn ensemble_proba(members: &[Vec<f64>]) -> Result<Vec<f64>, CoreError> {
    let first = members.first().ok_or(CoreError::EmptySubset)?;
    let c = first.len();
    let mut mean = vec![0.0f64; c];
    for p in members {
        if p.len() != c {
            return Err(CoreError::DimensionMismatch {
                expected: c,
                got: p.len(),
            });
        }
        check_simplex(p)?;
        for (m, &pc) in mean.iter_mut().zip(p) {
            *m += pc;
        }
    }
    let inv = 1.0 / members.len() as f64;
    for m in mean.iter_mut() {
        *m *= inv;
    }
    Ok(mean)
}

/// The `min(k, |scores|)` highest-scoring ids, descending by score with ties
/// broken by ascending id. Ids must be unique.
pub fn select_topk(scores: &[(usize, f64)], k: usize) -> Vec<usize> {
    debug_assert!(scores.iter().all(|(_, s)| s.is_finite()));
    let mut ranked: Vec<(usize, f64)> = scores.to_vec();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked.into_iter().map(|(id, _)| id).collect()
}

/// Greedy k-center selection: repeatedly pick the pool point farthest from
/// its nearest center (Euclidean), then treat it as a center. Ties break by
/// ascending position, so callers should pass ids in ascending order.
/// Returns `(id, distance-at-selection)` pairs, at most `min(k, |pool|)`.
pub fn kcenter_greedy(
    pool_ids: &[usize],
    pool_embs: &[Vec<f64>],
    center_embs: &[Vec<f64>],
    k: usize,
) -> Result<Vec<(usize, f64)>, CoreError> {
    if pool_ids.is_empty() {
        return Err(CoreError::EmptyPool);
    }
    if center_embs.is_empty() {
        return Err(CoreError::EmptyCenters);
    }
    if pool_ids.len() != pool_embs.len() {
        return Err(CoreError::LengthMismatch {
            left: pool_ids.len(),
            right: pool_embs.len(),
        });
    }
    let dim = center_embs[0].len();
    for e in pool_embs.iter().chain(center_embs.iter()) {
        if e.len() != dim {
            return Err(CoreError::DimensionMismatch {
                expected: dim,
                got: e.len(),
            });
        }
        if e.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite);
        }
    }

    let d2 = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
    };

    // Minimum squared distance of each pool point to the current centers.
    let mut min_d2: Vec<f64> = pool_embs
        .iter()
        .map(|p| {
            center_embs
                .iter()
                .map(|c| d2(p, c))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();

    let mut picked = Vec::with_capacity(k.min(pool_ids.len()));
    let mut taken = vec![false; pool_ids.len()];
    for _ in 0..k.min(pool_ids.len()) {
        let mut best = usize::MAX;
        for i in 0..pool_ids.len() {
            if !taken[i] && (best == usize::MAX || min_d2[i] > min_d2[best]) {
                best = i;
            }
        }
        taken[best] = true;
        picked.push((pool_ids[best], math::sqrt(min_d2[best])));
        for i in 0..pool_ids.len() {
            if !taken[i] {
                let d = d2(&pool_embs[i], &pool_embs[best]);
                if d < min_d2[i] {
                    min_d2[i] = d;
                }
            }
        }
    }
    Ok(picked)
}

/// Remove the `delete_count` lowest-scoring ids from `train` and return them
/// to `pool` (eligible for reacquisition later). `scores` must cover exactly
/// the current train set. Ties break by ascending id. Returns the deleted
/// ids in ascending order.
pub fn apply_deletion(
    train: &mut BTreeSet<usize>,
    pool: &mut BTreeSet<usize>,
    scores: &[(usize, f64)],
    delete_count: usize,
) -> Result<Vec<usize>, CoreError> {
    if delete_count >= train.len() {
        return Err(CoreError::DeleteTooLarge {
            count: delete_count,
            train: train.len(),
        });
    }
    if scores.len() != train.len() {
        return Err(CoreError::LengthMismatch {
            left: scores.len(),
            right: train.len(),
        });
    }
    for &(id, score) in scores {
        if !train.contains(&id) {
            return Err(CoreError::UnknownId(id));
        }
        if !score.is_finite() {
            return Err(CoreError::NonFinite);
        }
    }
    if delete_count == 0 {
        return Ok(Vec::new());
    }
    let mut ranked: Vec<(usize, f64)> = scores.to_vec();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let mut deleted: Vec<usize> = ranked[..delete_count].iter().map(|&(id, _)| id).collect();
    deleted.sort_unstable();
    for &id in &deleted {
        train.remove(&id);
        pool.insert(id);
    }
    Ok(deleted)
}

/// One trained model of either family, presenting a common posterior
/// interface to the loop.
enum FamilyModel {
    Ft(FtModel),
    Nb(NbClassifier),
}

impl FamilyModel {
    fn predict_proba_doc(&self, doc: &TokenizedDoc) -> Vec<f64> {
        match self {
            FamilyModel::Ft(m) => m.predict_proba_doc(doc),
            FamilyModel::Nb(m) => m.predict_proba_doc(doc),
        }
    }
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

fn train_family(
    prepared: &PreparedCorpus,
    ids: &[usize],
    config: &LoopConfig,
    seed: u64,
) -> Result<FamilyModel, CoreError> {
    match config.model {
        ModelFamily::Ftext => {
            let ft = FtTrainConfig { seed, ..config.ft };
            Ok(FamilyModel::Ft(ftext::train(prepared, ids, &ft)?))
        }
        ModelFamily::Nbayes => Ok(FamilyModel::Nb(NbClassifier::train(prepared, ids)?)),
    }
}

fn eval_accuracy(model: &FamilyModel, test: &PreparedCorpus) -> f64 {
    let correct = test
        .docs()
        .iter()
        .filter(|doc| argmax(&model.predict_proba_doc(doc)) == doc.label)
        .count();
    correct as f64 / test.len() as f64
}

fn mean_probs_accuracy(sums: &[Vec<f64>], test: &PreparedCorpus) -> f64 {
    let correct = sums
        .iter()
        .zip(test.docs())
        .filter(|(sum, doc)| argmax(sum) == doc.label)
        .count();
    correct as f64 / test.len() as f64
}

/// Run the full acquisition loop. See [`run_loop_prepared`] for the
/// contract; this wrapper tokenizes both corpora first.
pub fn run_loop(
    corpus: &LabeledCorpus,
    test: &LabeledCorpus,
    config: &LoopConfig,
) -> Result<(AlState, Vec<CurvePoint>), CoreError> {
    run_loop_prepared(
        &PreparedCorpus::from_corpus(corpus),
        &PreparedCorpus::from_corpus(test),
        config,
    )
}

/// Run the full acquisition loop on pre-tokenized corpora.
///
/// S_0 is drawn uniformly without replacement from the master rng (seeded by
/// `config.seed`), which is afterwards consumed only by the random strategy,
/// so runs are bit-deterministic under `(corpora, config)`. Each round
/// trains a fresh model on the current train set, records its held-out
/// accuracy, and acquires `min(K, pool)` ids. The returned curve has one
/// point per trained model: round models at the train fraction they saw,
/// plus the final model trained on S_b.
pub fn run_loop_prepared(
    prepared: &PreparedCorpus,
    test: &PreparedCorpus,
    config: &LoopConfig,
) -> Result<(AlState, Vec<CurvePoint>), CoreError> {
    let n = prepared.len();
    config.validate(n)?;
    if prepared.num_classes() != test.num_classes() {
        return Err(CoreError::InvalidConfig(String::from(
            "train and test corpora declare different class counts",
        )));
    }
    if test.is_empty() {
        return Err(CoreError::EmptyCorpus);
    }

    let k = config.query_size;
    let s0_size = config.resolved_init_size();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);

    let mut initial: Vec<usize> = rand::seq::index::sample(&mut rng, n, s0_size).into_vec();
    initial.sort_unstable();
    let mut train: BTreeSet<usize> = initial.iter().copied().collect();
    let mut pool: BTreeSet<usize> = (0..n).filter(|id| !train.contains(id)).collect();

    let mut train_sets = vec![initial.clone()];
    let mut records: Vec<QueryRecord> = Vec::with_capacity(config.rounds);
    let mut curve = Vec::with_capacity(config.rounds + 1);

    let kind = config.acquisition.kind;
    for round in 1..=config.rounds {
        let round_idx = (round - 1) as u64;
        let train_ids: Vec<usize> = train.iter().copied().collect();
        let pool_ids: Vec<usize> = pool.iter().copied().collect();
        let wrap = |e: CoreError| e.in_round(round);

        let scorer = |p: &[f64]| -> Result<f64, CoreError> {
            if kind.uses_entropy() {
                score_entropy(p)
            } else {
                score_lc(p)
            }
        };

        // Train this round's model(s), measure accuracy, and score the pool.
        let mut single_model: Option<FamilyModel> = None;
        let (accuracy, pool_scored): (f64, Option<Vec<(usize, f64)>>) = if kind.is_ensemble() {
            let m = config.acquisition.ensemble_size;
            let c = prepared.num_classes();
            let mut pool_sums = vec![vec![0.0f64; c]; pool_ids.len()];
            let mut test_sums = vec![vec![0.0f64; c]; test.len()];
            for member in 0..m {
                let seed = model_seed(config.seed, round_idx, member as u64);
                let model = train_family(prepared, &train_ids, config, seed).map_err(wrap)?;
                for (sum, &id) in pool_sums.iter_mut().zip(&pool_ids) {
                    let p = model.predict_proba_doc(prepared.doc(id).map_err(wrap)?);
                    for (s, pc) in sum.iter_mut().zip(&p) {
                        *s += pc;
                    }
                }
                for (sum, doc) in test_sums.iter_mut().zip(test.docs()) {
                    let p = model.predict_proba_doc(doc);
                    for (s, pc) in sum.iter_mut().zip(&p) {
                        *s += pc;
                    }
                }
            }
            let inv = 1.0 / m as f64;
            let mut scored = Vec::with_capacity(pool_ids.len());
            for (sum, &id) in pool_sums.iter().zip(&pool_ids) {
                let mean: Vec<f64> = sum.iter().map(|&s| s * inv).collect();
                scored.push((id, scorer(&mean).map_err(wrap)?));
            }
            (mean_probs_accuracy(&test_sums, test), Some(scored))
        } else {
            let seed = model_seed(config.seed, round_idx, 0);
            let model = train_family(prepared, &train_ids, config, seed).map_err(wrap)?;
            let accuracy = eval_accuracy(&model, test);
            let scored = match kind {
                AcquisitionKind::Random | AcquisitionKind::Coreset => None,
                _ => {
                    let mut scored = Vec::with_capacity(pool_ids.len());
                    for &id in &pool_ids {
                        let p = model.predict_proba_doc(prepared.doc(id).map_err(wrap)?);
                        scored.push((id, scorer(&p).map_err(wrap)?));
                    }
                    Some(scored)
                }
            };
            single_model = Some(model);
            (accuracy, scored)
        };

        // Build the query.
        let (selected, sel_scores): (Vec<usize>, Vec<f64>) = match kind {
            AcquisitionKind::Random => {
                let take = k.min(pool_ids.len());
                let idx = rand::seq::index::sample(&mut rng, pool_ids.len(), take);
                let selected: Vec<usize> = idx.iter().map(|i| pool_ids[i]).collect();
                let scores = vec![0.0; selected.len()];
                (selected, scores)
            }
            AcquisitionKind::Coreset => {
                let model = single_model.as_ref().expect("coreset trains one model");
                let ft = match model {
                    FamilyModel::Ft(m) => m,
                    FamilyModel::Nb(_) => unreachable!("validated at config time"),
                };
                let pool_embs: Vec<Vec<f64>> = pool_ids
                    .iter()
                    .map(|&id| Ok(ft.sentence_embedding_doc(prepared.doc(id)?)))
                    .collect::<Result<_, CoreError>>()
                    .map_err(wrap)?;
                let center_embs: Vec<Vec<f64>> = train_ids
                    .iter()
                    .map(|&id| Ok(ft.sentence_embedding_doc(prepared.doc(id)?)))
                    .collect::<Result<_, CoreError>>()
                    .map_err(wrap)?;
                let picked =
                    kcenter_greedy(&pool_ids, &pool_embs, &center_embs, k).map_err(wrap)?;
                let (ids, dists): (Vec<usize>, Vec<f64>) = picked.into_iter().unzip();
                (ids, dists)
            }
            _ => {
                let scored = pool_scored.expect("uncertainty kinds score the pool");
                let selected = select_topk(&scored, k);
                let lookup: BTreeMap<usize, f64> = scored.into_iter().collect();
                let scores = selected.iter().map(|id| lookup[id]).collect();
                (selected, scores)
            }
        };

        for &id in &selected {
            pool.remove(&id);
            train.insert(id);
        }

        // Deletion variants: score the grown train set with the same model
        // and push its least uncertain members back into the pool.
        let deleted = if kind.deletes() {
            let model = single_model.as_ref().expect("deletion kinds train one model");
            let mut scored = Vec::with_capacity(train.len());
            for &id in train.iter() {
                let p = model.predict_proba_doc(prepared.doc(id).map_err(wrap)?);
                scored.push((id, scorer(&p).map_err(wrap)?));
            }
            apply_deletion(&mut train, &mut pool, &scored, config.resolved_delete_count())
                .map_err(wrap)?
        } else {
            Vec::new()
        };

        curve.push(CurvePoint {
            fraction_labeled: train_ids.len() as f64 / n as f64,
            accuracy,
        });
        records.push(QueryRecord {
            round,
            selected,
            scores: sel_scores,
            deleted,
            train_size: train.len(),
            pool_size: pool.len(),
            accuracy,
        });
        train_sets.push(train.iter().copied().collect());
    }

    // Final model on S_b.
    let final_ids: Vec<usize> = train.iter().copied().collect();
    let final_seed = model_seed(config.seed, config.rounds as u64, 0);
    let final_model = train_family(prepared, &final_ids, config, final_seed)
        .map_err(|e| e.in_round(config.rounds))?;
    let final_accuracy = eval_accuracy(&final_model, test);
    curve.push(CurvePoint {
        fraction_labeled: final_ids.len() as f64 / n as f64,
        accuracy: final_accuracy,
    });

    Ok((
        AlState {
            config: config.clone(),
            corpus_size: n,
            initial,
            train_sets,
            pool: pool.into_iter().collect(),
            records,
            final_accuracy,
            rng,
        },
        curve,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn entropy_examples() {
        assert!((score_entropy(&[0.5, 0.5]).unwrap() - 2.0f64.ln()).abs() < 1e-12);
        assert_eq!(score_entropy(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        let h = score_entropy(&[0.7, 0.2, 0.1]).unwrap();
        let oracle = -(0.7f64 * 0.7f64.ln() + 0.2 * 0.2f64.ln() + 0.1 * 0.1f64.ln());
        assert!((h - oracle).abs() < 1e-12);
        assert!((h - 0.8018).abs() < 1e-4);
        assert_eq!(score_entropy(&[0.9, 0.3]), Err(CoreError::NotOnSimplex));
    }

    #[test]
    fn lc_examples() {
        assert_eq!(score_lc(&[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(score_lc(&[0.5, 0.5]).unwrap(), 0.5);
        assert!((score_lc(&[0.7, 0.2, 0.1]).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(score_lc(&[2.0, -1.0]), Err(CoreError::NotOnSimplex));
    }

    #[test]
    fn ensemble_mean_examples() {
        let single = vec![vec![0.2, 0.8]];
        assert_eq!(ensemble_proba(&single).unwrap(), vec![0.2, 0.8]);

        let two = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(ensemble_proba(&two).unwrap(), vec![0.5, 0.5]);

        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let members: Vec<Vec<f64>> = (0..3)
            .map(|_| {
                let raw: Vec<f64> = (0..4).map(|_| rng.random_range(0.1..1.0f64)).collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / s).collect()
            })
            .collect();
        let mean = ensemble_proba(&members).unwrap();
        for c in 0..4 {
            let oracle = (members[0][c] + members[1][c] + members[2][c]) / 3.0;
            assert!((mean[c] - oracle).abs() < 1e-12);
        }
        assert!((mean.iter().sum::<f64>() - 1.0).abs() < 1e-9);

        let bad = vec![vec![0.5, 0.5], vec![1.0, 0.0, 0.0]];
        assert!(matches!(
            ensemble_proba(&bad),
            Err(CoreError::DimensionMismatch { .. })
        ));
        assert_eq!(ensemble_proba(&[]), Err(CoreError::EmptySubset));
    }

    #[test]
    fn ensemble_of_identical_members_selects_like_the_single_model() {
        let probs = vec![
            (7usize, vec![0.6, 0.4]),
            (8, vec![0.9, 0.1]),
            (9, vec![0.5, 0.5]),
        ];
        let single: Vec<(usize, f64)> = probs
            .iter()
            .map(|(id, p)| (*id, score_entropy(p).unwrap()))
            .collect();
        let committee: Vec<(usize, f64)> = probs
            .iter()
            .map(|(id, p)| {
                let mean = ensemble_proba(&vec![p.clone(); 5]).unwrap();
                (*id, score_entropy(&mean).unwrap())
            })
            .collect();
        assert_eq!(select_topk(&single, 2), select_topk(&committee, 2));
    }

    #[test]
    fn topk_selection_rules() {
        let scores = vec![(1usize, 0.9), (2, 0.1), (3, 0.9)];
        assert_eq!(select_topk(&scores, 2), vec![1, 3]);
        assert_eq!(select_topk(&scores, 10), vec![1, 3, 2]);
        assert_eq!(select_topk(&scores, 0), Vec::<usize>::new());

        // Equals a full-sort oracle on random scores.
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        let scored: Vec<(usize, f64)> = (0..1000)
            .map(|id| (id, rng.random_range(0.0..1.0f64)))
            .collect();
        let got = select_topk(&scored, 10);
        let mut oracle = scored.clone();
        oracle.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let want: Vec<usize> = oracle[..10].iter().map(|&(id, _)| id).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn kcenter_examples() {
        let pool_ids = vec![0usize, 1, 2];
        let pool = vec![vec![1.0, 0.0], vec![3.0, 0.0], vec![2.0, 0.0]];
        let centers = vec![vec![0.0, 0.0]];

        let picked = kcenter_greedy(&pool_ids, &pool, &centers, 1).unwrap();
        assert_eq!(picked.len(), 1);
        assert_eq!(picked[0].0, 1, "farthest point (3,0) first");
        assert!((picked[0].1 - 3.0).abs() < 1e-12);

        // Second pick: (1,0) is 1 away from origin, (2,0) is 1 away from
        // (3,0) — tie resolved by the lower id.
        let picked = kcenter_greedy(&pool_ids, &pool, &centers, 2).unwrap();
        assert_eq!(
            picked.iter().map(|&(id, _)| id).collect::<Vec<_>>(),
            vec![1, 0]
        );

        assert_eq!(
            kcenter_greedy(&[], &[], &centers, 1),
            Err(CoreError::EmptyPool)
        );
        assert_eq!(
            kcenter_greedy(&pool_ids, &pool, &[], 1),
            Err(CoreError::EmptyCenters)
        );
    }

    #[test]
    fn kcenter_matches_brute_force() {
        let mut rng = ChaCha20Rng::seed_from_u64(41);
        let pool_ids: Vec<usize> = (0..200).collect();
        let pool: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0f64)).collect())
            .collect();
        let centers: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0f64)).collect())
            .collect();
        let got = kcenter_greedy(&pool_ids, &pool, &centers, 20).unwrap();

        // O(n²) oracle recomputing every distance at every step.
        let d2 = |a: &[f64], b: &[f64]| {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
        };
        let mut oracle_centers = centers.clone();
        let mut remaining: Vec<usize> = (0..200).collect();
        let mut oracle = Vec::new();
        for _ in 0..20 {
            let (mut best_i, mut best_d) = (usize::MAX, -1.0);
            for &i in &remaining {
                let min_d = oracle_centers
                    .iter()
                    .map(|c| d2(&pool[i], c))
                    .fold(f64::INFINITY, f64::min);
                if min_d > best_d {
                    best_d = min_d;
                    best_i = i;
                }
            }
            oracle.push(best_i);
            oracle_centers.push(pool[best_i].clone());
            remaining.retain(|&i| i != best_i);
        }
        assert_eq!(
            got.iter().map(|&(id, _)| id).collect::<Vec<_>>(),
            oracle
        );
    }

    #[test]
    fn deletion_rules() {
        let mut train: BTreeSet<usize> = [1, 2, 3, 4].into_iter().collect();
        let mut pool: BTreeSet<usize> = [10, 11].into_iter().collect();

        // delete_count = 0: nothing happens.
        let scores = vec![(1usize, 0.5), (2, 0.5), (3, 0.5), (4, 0.5)];
        let deleted = apply_deletion(&mut train, &mut pool, &scores, 0).unwrap();
        assert!(deleted.is_empty());
        assert_eq!(train.len(), 4);

        // Equal scores: the two lowest ids leave.
        let deleted = apply_deletion(&mut train, &mut pool, &scores, 2).unwrap();
        assert_eq!(deleted, vec![1, 2]);
        assert_eq!(train.iter().copied().collect::<Vec<_>>(), vec![3, 4]);
        assert!(pool.contains(&1) && pool.contains(&2));
        assert!(train.intersection(&pool).next().is_none());

        // delete_count must leave a non-empty train set.
        let scores = vec![(3usize, 0.1), (4, 0.2)];
        assert_eq!(
            apply_deletion(&mut train, &mut pool, &scores, 2),
            Err(CoreError::DeleteTooLarge { count: 2, train: 2 })
        );

        // Scores must cover the train set exactly.
        let bad = vec![(3usize, 0.1), (99, 0.2)];
        assert_eq!(
            apply_deletion(&mut train, &mut pool, &bad, 1),
            Err(CoreError::UnknownId(99))
        );
    }

    #[test]
    fn config_validation() {
        let mut config = LoopConfig {
            query_size: 10,
            rounds: 5,
            init_size: None,
            seed: 0,
            model: ModelFamily::Ftext,
            acquisition: AcquisitionSpec::new(AcquisitionKind::Entropy),
            ft: FtTrainConfig::default(),
        };
        assert!(config.validate(100).is_ok());
        assert!(config.validate(59).is_err());
        assert_eq!(config.resolved_init_size(), 10);
        assert_eq!(config.resolved_delete_count(), 5);

        config.acquisition = AcquisitionSpec {
            kind: AcquisitionKind::EnsEntropy,
            ensemble_size: 1,
            delete_count: None,
        };
        assert!(matches!(
            config.validate(100),
            Err(CoreError::InvalidConfig(_))
        ));

        config.acquisition = AcquisitionSpec::new(AcquisitionKind::Coreset);
        config.model = ModelFamily::Nbayes;
        assert_eq!(
            config.validate(100),
            Err(CoreError::CoresetNeedsEmbeddings)
        );
    }

    #[test]
    fn kind_names_are_stable() {
        let kinds = [
            (AcquisitionKind::Random, "random"),
            (AcquisitionKind::Entropy, "entropy"),
            (AcquisitionKind::LeastConfidence, "lc"),
            (AcquisitionKind::DelEntropy, "del-entropy"),
            (AcquisitionKind::DelLc, "del-lc"),
            (AcquisitionKind::EnsEntropy, "ens-entropy"),
            (AcquisitionKind::EnsLc, "ens-lc"),
            (AcquisitionKind::Coreset, "coreset"),
        ];
        for (kind, name) in kinds {
            assert_eq!(kind.name(), name);
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, alloc::format!("\"{name}\""));
        }
    }
}
