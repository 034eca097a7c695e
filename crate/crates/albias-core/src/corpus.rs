//! Labeled document collections: construction, synthetic generation, and
//! the provenance manifest that accompanies an exported surrogate set.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// One labeled text document. Ids are dense indices into the owning corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: usize,
    /// Zero-based class label.
    pub label: usize,
    pub text: String,
}

/// An immutable pool of labeled documents with a fixed class count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledCorpus {
    documents: Vec<Document>,
    num_classes: usize,
    class_names: Vec<String>,
}

impl LabeledCorpus {
    /// Build a corpus from `(label, text)` records. Ids are assigned in input
    /// order starting at zero.
    ///
    /// Fails on an empty record list, a label outside `0..num_classes`,
    /// an empty text, or `num_classes < 2`.
    pub fn new(records: Vec<(usize, String)>, num_classes: usize) -> Result<Self, CoreError> {
        let names = (0..num_classes).map(|c| format!("class{c}")).collect();
        Self::with_class_names(records, num_classes, names)
    }

    /// Like [`LabeledCorpus::new`] but with caller-supplied class names
    /// (one per class).
    pub fn with_class_names(
        records: Vec<(usize, String)>,
        num_classes: usize,
        class_names: Vec<String>,
    ) -> Result<Self, CoreError> {
        if num_classes < 2 {
            return Err(CoreError::InvalidConfig(format!(
                "num_classes must be at least 2, got {num_classes}"
            )));
        }
        if records.is_empty() {
            return Err(CoreError::EmptyCorpus);
        }
        if class_names.len() != num_classes {
            return Err(CoreError::InvalidConfig(format!(
                "{} class names for {num_classes} classes",
                class_names.len()
            )));
        }
        let mut documents = Vec::with_capacity(records.len());
        for (id, (label, text)) in records.into_iter().enumerate() {
            if label >= num_classes {
                return Err(CoreError::LabelOutOfRange {
                    id,
                    label,
                    num_classes,
                });
            }
            if text.is_empty() {
                return Err(CoreError::EmptyText { id });
            }
            documents.push(Document { id, label, text });
        }
        Ok(LabeledCorpus {
            documents,
            num_classes,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    /// A corpus is never empty by construction, so this always returns false;
    /// provided for idiomatic call sites.
    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    /// Document by id; `None` when out of range.
    pub fn doc(&self, id: usize) -> Option<&Document> {
        self.documents.get(id)
    }

    /// Label of each document, indexed by id.
    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.documents.iter().map(|d| d.label)
    }

    /// Labels of a subset of ids, in the given order.
    pub fn labels_of(&self, ids: &[usize]) -> Result<Vec<usize>, CoreError> {
        ids.iter()
            .map(|&id| {
                self.documents
                    .get(id)
                    .map(|d| d.label)
                    .ok_or(CoreError::UnknownId(id))
            })
            .collect()
    }

    /// Per-class document counts over the whole corpus.
    pub fn label_counts(&self) -> Vec<u64> {
        let mut counts = alloc::vec![0u64; self.num_classes];
        for d in &self.documents {
            counts[d.label] += 1;
        }
        counts
    }
}

/// Parameters for the synthetic corpus generator.
///
/// Every class owns a disjoint vocabulary of `class_vocab_size` tokens; a
/// further `shared_vocab_size` tokens are common to all classes. Each token
/// of a document is drawn from the shared vocabulary with probability
/// `noise_rate` and from the class vocabulary otherwise, so `noise_rate`
/// directly controls how separable the classes are.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub docs_per_class: usize,
    pub class_vocab_size: usize,
    pub shared_vocab_size: usize,
    /// Probability in `[0, 1]` that a token comes from the shared vocabulary.
    pub noise_rate: f64,
    /// Inclusive bounds on document length in tokens.
    pub doc_len_range: (usize, usize),
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<(), CoreError> {
        if self.num_classes < 2 {
            return Err(CoreError::InvalidSpec(format!(
                "num_classes must be at least 2, got {}",
                self.num_classes
            )));
        }
        if self.docs_per_class == 0 || self.class_vocab_size == 0 || self.shared_vocab_size == 0 {
            return Err(CoreError::InvalidSpec(String::from(
                "docs_per_class, class_vocab_size and shared_vocab_size must be positive",
            )));
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return Err(CoreError::InvalidSpec(format!(
                "noise_rate must lie in [0, 1], got {}",
                self.noise_rate
            )));
        }
        let (lo, hi) = self.doc_len_range;
        if lo == 0 || lo > hi {
            return Err(CoreError::InvalidSpec(format!(
                "doc_len_range must satisfy 1 <= lo <= hi, got ({lo}, {hi})"
            )));
        }
        Ok(())
    }
}

/// Generate a synthetic corpus with exact class balance.
///
/// Documents are laid out round-robin over classes (`id % num_classes` is the
/// label), and the whole corpus is a pure function of its [`SyntheticSpec`]:
/// equal inputs yield a bit-identical corpus on every call.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<LabeledCorpus, CoreError> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let total = spec.num_classes * spec.docs_per_class;
    let (lo, hi) = spec.doc_len_range;
    let mut records = Vec::with_capacity(total);
    let mut text = String::new();
    for i in 0..total {
        let label = i % spec.num_classes;
        let len = rng.random_range(lo..=hi);
        text.clear();
        for t in 0..len {
            if t > 0 {
                text.push(' ');
            }
            if rng.random_bool(spec.noise_rate) {
                let w = rng.random_range(0..spec.shared_vocab_size);
                text.push_str(&format!("sw{w}"));
            } else {
                let w = rng.random_range(0..spec.class_vocab_size);
                text.push_str(&format!("c{label}w{w}"));
            }
        }
        records.push((label, text.clone()));
    }
    LabeledCorpus::new(records, spec.num_classes)
}

/// Provenance of one exported document: when it entered the train set and
/// with what acquisition score. Seed documents carry `round == 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub id: usize,
    pub round: usize,
    pub score: f64,
}

/// Manifest describing a surrogate dataset export: which run produced it,
/// which documents it contains, and how small it is relative to the source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateManifest {
    /// Reference to the source corpus (a path or a name; opaque here).
    pub source: String,
    /// Display name of the acquisition strategy that built the set.
    pub strategy: String,
    pub seed: u64,
    pub rounds: usize,
    /// Entries sorted by `(round, id)`; this is also the export row order.
    #[serde(rename = "per_id")]
    pub provenance: Vec<ProvenanceEntry>,
    /// Exported size divided by source corpus size, in `(0, 1]`.
    pub compression_ratio: f64,
}

impl SurrogateManifest {
    /// Build a manifest, sorting provenance into export order and computing
    /// the compression ratio against `corpus_size`.
    pub fn new(
        source: String,
        strategy: String,
        seed: u64,
        rounds: usize,
        mut provenance: Vec<ProvenanceEntry>,
        corpus_size: usize,
    ) -> Result<Self, CoreError> {
        if corpus_size == 0 {
            return Err(CoreError::EmptyCorpus);
        }
        if provenance.is_empty() {
            return Err(CoreError::EmptySubset);
        }
        provenance.sort_by(|a, b| (a.round, a.id).cmp(&(b.round, b.id)));
        for pair in provenance.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(CoreError::InvalidConfig(format!(
                    "duplicate id {} in provenance",
                    pair[0].id
                )));
            }
        }
        for e in &provenance {
            if e.id >= corpus_size {
                return Err(CoreError::UnknownId(e.id));
            }
        }
        let compression_ratio = provenance.len() as f64 / corpus_size as f64;
        Ok(SurrogateManifest {
            source,
            strategy,
            seed,
            rounds,
            provenance,
            compression_ratio,
        })
    }

    /// Ids in export order (sorted by round, then id).
    pub fn export_ids(&self) -> Vec<usize> {
        self.provenance.iter().map(|e| e.id).collect()
    }

    /// Check that the provenance covers exactly `ids`.
    pub fn check_covers(&self, ids: &[usize]) -> Result<(), CoreError> {
        if self.provenance.len() != ids.len() {
            return Err(CoreError::ManifestMismatch);
        }
        let mut sorted: Vec<usize> = ids.to_vec();
        sorted.sort_unstable();
        let mut own: Vec<usize> = self.provenance.iter().map(|e| e.id).collect();
        own.sort_unstable();
        if own != sorted {
            return Err(CoreError::ManifestMismatch);
        }
        Ok(())
    }
}
