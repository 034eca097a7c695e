//! Fast linear text classifier: hashed bigram features, averaged embeddings,
//! a softmax head, and sample-wise SGD with a linearly decaying learning
//! rate. Besides class probabilities it exposes the averaged hidden layer as
//! a sentence embedding for downstream consumers.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::LabeledCorpus;
use crate::error::CoreError;
use crate::math;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Byte inserted between the two tokens of a bigram before hashing, so that
/// ("ab", "c") and ("a", "bc") hash differently.
pub const BIGRAM_SEPARATOR: u8 = 0x1f;

/// FNV-1a 64-bit hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
    }
    h
}

/// Lowercase a text and split it into alphanumeric runs; everything else
/// (whitespace, punctuation) separates tokens and is dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| s.to_lowercase())
        .collect()
}

/// Maps token bigrams onto a fixed number of hash buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureHasher {
    bucket_count: usize,
}

impl FeatureHasher {
    /// `bucket_count` must be a power of two.
    pub fn new(bucket_count: usize) -> Result<Self, CoreError> {
        if !bucket_count.is_power_of_two() {
            return Err(CoreError::InvalidConfig(alloc::format!(
                "bucket_count must be a power of two, got {bucket_count}"
            )));
        }
        Ok(FeatureHasher { bucket_count })
    }

    pub fn bucket_count(&self) -> usize {
        self.bucket_count
    }

    /// Raw 64-bit hash of a token pair: FNV-1a over
    /// `left ∥ BIGRAM_SEPARATOR ∥ right`.
    pub fn pair_hash(left: &str, right: &str) -> u64 {
        let mut h = FNV_OFFSET;
        for &b in left.as_bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
        }
        h = (h ^ u64::from(BIGRAM_SEPARATOR)).wrapping_mul(FNV_PRIME);
        for &b in right.as_bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
        }
        h
    }

    /// Bucket of a token pair, in `0..bucket_count`.
    pub fn bucket(&self, left: &str, right: &str) -> usize {
        self.reduce(Self::pair_hash(left, right))
    }

    fn reduce(&self, hash: u64) -> usize {
        (hash % self.bucket_count as u64) as usize
    }
}

/// Token-to-id map built from a training subset. Ids are dense, assigned by
/// first occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocab {
    map: BTreeMap<String, usize>,
}

impl Vocab {
    /// Build from token streams in the given order.
    pub fn build<'a, I, T>(docs: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: IntoIterator<Item = &'a String>,
    {
        let mut map = BTreeMap::new();
        for doc in docs {
            for tok in doc {
                let next = map.len();
                map.entry(tok.clone()).or_insert(next);
            }
        }
        Vocab { map }
    }

    /// Reconstruct from terms listed in id order; terms must be unique.
    pub fn from_terms(terms: Vec<String>) -> Result<Self, CoreError> {
        let mut map = BTreeMap::new();
        for (id, term) in terms.into_iter().enumerate() {
            if map.insert(term, id).is_some() {
                return Err(CoreError::InvalidConfig(String::from(
                    "duplicate term in vocabulary",
                )));
            }
        }
        Ok(Vocab { map })
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.map.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Terms sorted by id, for serialization.
    pub fn terms_in_id_order(&self) -> Vec<String> {
        let mut terms = vec![String::new(); self.map.len()];
        for (term, &id) in &self.map {
            terms[id] = term.clone();
        }
        terms
    }
}

/// A document reduced to its tokens plus precomputed bigram hashes, so that
/// repeated featurization against different vocabularies stays cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedDoc {
    pub tokens: Vec<String>,
    /// Raw (unreduced) pair hashes of adjacent tokens.
    pub pair_hashes: Vec<u64>,
    pub label: usize,
}

impl TokenizedDoc {
    pub fn from_text(text: &str, label: usize) -> Self {
        let tokens = tokenize(text);
        let pair_hashes = tokens
            .windows(2)
            .map(|p| FeatureHasher::pair_hash(&p[0], &p[1]))
            .collect();
        TokenizedDoc {
            tokens,
            pair_hashes,
            label,
        }
    }
}

/// A corpus tokenized once up front. Documents keep their corpus ids
/// (position in `docs`).
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedCorpus {
    docs: Vec<TokenizedDoc>,
    num_classes: usize,
}

impl PreparedCorpus {
    pub fn from_corpus(corpus: &LabeledCorpus) -> Self {
        let docs = corpus
            .documents()
            .iter()
            .map(|d| TokenizedDoc::from_text(&d.text, d.label))
            .collect();
        PreparedCorpus {
            docs,
            num_classes: corpus.num_classes(),
        }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn docs(&self) -> &[TokenizedDoc] {
        &self.docs
    }

    pub fn doc(&self, id: usize) -> Result<&TokenizedDoc, CoreError> {
        self.docs.get(id).ok_or(CoreError::UnknownId(id))
    }
}

/// Feature ids of a token sequence: vocabulary ids of in-vocabulary unigrams
/// (out-of-vocabulary unigrams are dropped), followed by bigram buckets
/// offset by the vocabulary size. Bigrams are formed over all adjacent token
/// pairs, whether or not the tokens are in the vocabulary.
pub fn featurize(tokens: &[String], hasher: &FeatureHasher, vocab: &Vocab) -> Vec<usize> {
    let v = vocab.len();
    let mut out = Vec::with_capacity(tokens.len().saturating_mul(2));
    for tok in tokens {
        if let Some(id) = vocab.id(tok) {
            out.push(id);
        }
    }
    for pair in tokens.windows(2) {
        out.push(v + hasher.bucket(&pair[0], &pair[1]));
    }
    out
}

/// Same as [`featurize`] but reusing the precomputed pair hashes of a
/// [`TokenizedDoc`].
pub fn featurize_doc(doc: &TokenizedDoc, hasher: &FeatureHasher, vocab: &Vocab) -> Vec<usize> {
    let v = vocab.len();
    let mut out = Vec::with_capacity(doc.tokens.len().saturating_mul(2));
    for tok in &doc.tokens {
        if let Some(id) = vocab.id(tok) {
            out.push(id);
        }
    }
    for &h in &doc.pair_hashes {
        out.push(v + (h % hasher.bucket_count() as u64) as usize);
    }
    out
}

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FtTrainConfig {
    pub embedding_dim: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    /// Bigram hash buckets; must be a power of two.
    pub bucket_count: usize,
    pub seed: u64,
}

impl Default for FtTrainConfig {
    fn default() -> Self {
        FtTrainConfig {
            embedding_dim: 25,
            epochs: 10,
            initial_lr: 0.25,
            bucket_count: 1 << 21,
            seed: 0,
        }
    }
}

impl FtTrainConfig {
    fn validate(&self) -> Result<(), CoreError> {
        if self.embedding_dim == 0 || self.epochs == 0 {
            return Err(CoreError::InvalidConfig(String::from(
                "embedding_dim and epochs must be positive",
            )));
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return Err(CoreError::InvalidConfig(String::from(
                "initial_lr must be positive and finite",
            )));
        }
        Ok(())
    }
}

/// Learning rate after `done` of `total` updates: a linear ramp from
/// `initial` down to zero.
pub fn lr_at(initial: f64, done: usize, total: usize) -> f64 {
    initial * (1.0 - done as f64 / total as f64)
}

/// Trained classifier. Immutable after training except through the exposed
/// single-step [`FtModel::sgd_update`].
#[derive(Debug, Clone, PartialEq)]
pub struct FtModel {
    config: FtTrainConfig,
    vocab: Vocab,
    hasher: FeatureHasher,
    num_classes: usize,
    /// `(V + B) × d`, row-major: vocabulary rows first, then bucket rows.
    embeddings: Vec<f64>,
    /// `C × d`, row-major.
    output: Vec<f64>,
}

/// Train on the subset `ids` of a prepared corpus. The vocabulary is built
/// from that subset only. Deterministic for a fixed (corpus, ids, config).
pub fn train(
    prepared: &PreparedCorpus,
    ids: &[usize],
    config: &FtTrainConfig,
) -> Result<FtModel, CoreError> {
    config.validate()?;
    if ids.is_empty() {
        return Err(CoreError::EmptySubset);
    }
    let num_classes = prepared.num_classes();
    let hasher = FeatureHasher::new(config.bucket_count)?;

    let mut subset = Vec::with_capacity(ids.len());
    for &id in ids {
        let doc = prepared.doc(id)?;
        if doc.label >= num_classes {
            return Err(CoreError::LabelOutOfRange {
                id,
                label: doc.label,
                num_classes,
            });
        }
        subset.push(doc);
    }

    let vocab = Vocab::build(subset.iter().map(|d| d.tokens.iter()));
    let features: Vec<Vec<usize>> = subset
        .iter()
        .map(|d| featurize_doc(d, &hasher, &vocab))
        .collect();
    let labels: Vec<usize> = subset.iter().map(|d| d.label).collect();

    let d = config.embedding_dim;
    let rows = vocab.len() + hasher.bucket_count();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let half = 0.5 / d as f64;
    let mut embeddings = vec![0.0f64; rows * d];
    for e in embeddings.iter_mut() {
        *e = rng.random_range(-half..=half);
    }
    let output = vec![0.0f64; num_classes * d];

    let mut model = FtModel {
        config: *config,
        vocab,
        hasher,
        num_classes,
        embeddings,
        output,
    };

    let n = subset.len();
    let total = config.epochs * n;
    let mut done = 0usize;
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let lr = lr_at(config.initial_lr, done, total);
            model.sgd_update(&features[i], labels[i], lr);
            done += 1;
        }
    }
    Ok(model)
}

/// Convenience wrapper that tokenizes the corpus on the fly.
pub fn train_corpus(
    corpus: &LabeledCorpus,
    ids: &[usize],
    config: &FtTrainConfig,
) -> Result<FtModel, CoreError> {
    train(&PreparedCorpus::from_corpus(corpus), ids, config)
}

impl FtModel {
    /// Rebuild a model from serialized parts. `vocab_terms` must list terms
    /// in id order; matrix lengths must match the declared shapes and all
    /// entries must be finite.
    pub fn from_parts(
        config: FtTrainConfig,
        vocab_terms: Vec<String>,
        num_classes: usize,
        embeddings: Vec<f64>,
        output: Vec<f64>,
    ) -> Result<Self, CoreError> {
        config.validate()?;
        if num_classes < 2 {
            return Err(CoreError::InvalidConfig(String::from(
                "a classifier needs at least 2 classes",
            )));
        }
        let hasher = FeatureHasher::new(config.bucket_count)?;
        let vocab = Vocab::from_terms(vocab_terms)?;
        let d = config.embedding_dim;
        let want_emb = (vocab.len() + hasher.bucket_count()) * d;
        if embeddings.len() != want_emb {
            return Err(CoreError::DimensionMismatch {
                expected: want_emb,
                got: embeddings.len(),
            });
        }
        let want_out = num_classes * d;
        if output.len() != want_out {
            return Err(CoreError::DimensionMismatch {
                expected: want_out,
                got: output.len(),
            });
        }
        if embeddings.iter().chain(output.iter()).any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite);
        }
        Ok(FtModel {
            config,
            vocab,
            hasher,
            num_classes,
            embeddings,
            output,
        })
    }

    pub fn config(&self) -> &FtTrainConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn hasher(&self) -> &FeatureHasher {
        &self.hasher
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.config.embedding_dim
    }

    /// Flat `(V + B) × d` embedding matrix.
    pub fn embeddings(&self) -> &[f64] {
        &self.embeddings
    }

    /// Flat `C × d` output matrix.
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    /// Feature ids of a raw text under this model's vocabulary and hasher.
    pub fn featurize_text(&self, text: &str) -> Vec<usize> {
        featurize(&tokenize(text), &self.hasher, &self.vocab)
    }

    /// Feature ids of a pre-tokenized document.
    pub fn features_of(&self, doc: &TokenizedDoc) -> Vec<usize> {
        featurize_doc(doc, &self.hasher, &self.vocab)
    }

    /// Mean of the embedding rows of `feats` (occurrences counted); the zero
    /// vector when `feats` is empty.
    pub fn mean_embedding(&self, feats: &[usize]) -> Vec<f64> {
        let d = self.dim();
        let mut h = vec![0.0f64; d];
        if feats.is_empty() {
            return h;
        }
        for &f in feats {
            let row = &self.embeddings[f * d..(f + 1) * d];
            for (hj, rj) in h.iter_mut().zip(row) {
                *hj += rj;
            }
        }
        let inv = 1.0 / feats.len() as f64;
        for hj in h.iter_mut() {
            *hj *= inv;
        }
        h
    }

    fn logits(&self, h: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..self.num_classes)
            .map(|c| {
                let row = &self.output[c * d..(c + 1) * d];
                row.iter().zip(h).map(|(w, x)| w * x).sum()
            })
            .collect()
    }

    /// Class probabilities for a feature-id sequence.
    pub fn predict_proba_feats(&self, feats: &[usize]) -> Vec<f64> {
        softmax(&self.logits(&self.mean_embedding(feats)))
    }

    /// Class probabilities for a raw text. Empty or fully out-of-vocabulary
    /// text yields the softmax of zero logits, i.e. the uniform distribution.
    pub fn predict_proba(&self, text: &str) -> Vec<f64> {
        self.predict_proba_feats(&self.featurize_text(text))
    }

    /// Class probabilities for a pre-tokenized document.
    pub fn predict_proba_doc(&self, doc: &TokenizedDoc) -> Vec<f64> {
        self.predict_proba_feats(&self.features_of(doc))
    }

    /// Averaged hidden representation of a raw text.
    pub fn sentence_embedding(&self, text: &str) -> Vec<f64> {
        self.mean_embedding(&self.featurize_text(text))
    }

    /// Averaged hidden representation of a pre-tokenized document.
    pub fn sentence_embedding_doc(&self, doc: &TokenizedDoc) -> Vec<f64> {
        self.mean_embedding(&self.features_of(doc))
    }

    /// Negative log-likelihood of `label` given the features.
    pub fn nll(&self, feats: &[usize], label: usize) -> f64 {
        -math::ln(self.predict_proba_feats(feats)[label])
    }

    /// One softmax cross-entropy SGD step on a single sample. Embedding rows
    /// receive the gradient once per occurrence in `feats`.
    pub fn sgd_update(&mut self, feats: &[usize], label: usize, lr: f64) {
        if feats.is_empty() {
            // Zero hidden vector: both gradients vanish.
            return;
        }
        let d = self.dim();
        let h = self.mean_embedding(feats);
        let mut g = softmax(&self.logits(&h));
        g[label] -= 1.0;

        // Backprop through the (pre-update) output matrix.
        let mut grad_h = vec![0.0f64; d];
        for (c, gc) in g.iter().enumerate() {
            let row = &self.output[c * d..(c + 1) * d];
            for (gh, w) in grad_h.iter_mut().zip(row) {
                *gh += gc * w;
            }
        }
        for (c, gc) in g.iter().enumerate() {
            let row = &mut self.output[c * d..(c + 1) * d];
            for (w, hj) in row.iter_mut().zip(&h) {
                *w -= lr * gc * hj;
            }
        }
        let coef = lr / feats.len() as f64;
        for &f in feats {
            let row = &mut self.embeddings[f * d..(f + 1) * d];
            for (e, gh) in row.iter_mut().zip(&grad_h) {
                *e -= coef * gh;
            }
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| math::exp(z - max)).collect();
    let sum: f64 = out.iter().sum();
    for p in out.iter_mut() {
        *p /= sum;
    }
    out
}
