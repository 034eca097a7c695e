//! Error type shared by every module in the crate.

use alloc::boxed::Box;
use alloc::string::String;

/// Everything that can go wrong inside the core algorithms.
///
/// IO never happens here, so every variant describes a contract violation:
/// empty inputs, out-of-range labels, malformed probability vectors, or a
/// configuration that cannot produce a valid run.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("training subset is empty")]
    EmptySubset,

    #[error("document {id} has label {label} but the corpus declares {num_classes} classes")]
    LabelOutOfRange {
        id: usize,
        label: usize,
        num_classes: usize,
    },

    #[error("document {id} has empty text")]
    EmptyText { id: usize },

    #[error("id {0} is not present in the corpus")]
    UnknownId(usize),

    #[error("invalid synthetic corpus spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("probability vector is not on the simplex")]
    NotOnSimplex,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: {left} predictions against {right} labels")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("label histogram has no mass")]
    EmptyHistogram,

    #[error("pool is empty")]
    EmptyPool,

    #[error("center set is empty")]
    EmptyCenters,

    #[error("support set is empty")]
    EmptySupportSet,

    #[error("training data contains a single class")]
    SingleClass,

    #[error("delete count {count} must leave a non-empty train set of size {train}")]
    DeleteTooLarge { count: usize, train: usize },

    #[error("coreset acquisition needs sentence embeddings, which only the ftext family provides")]
    CoresetNeedsEmbeddings,

    #[error("manifest provenance does not match the exported id set")]
    ManifestMismatch,

    #[error("round {round} failed: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<CoreError>,
    },
}

impl CoreError {
    /// Wrap an error with the acquisition round it occurred in.
    pub fn in_round(self, round: usize) -> CoreError {
        CoreError::Round {
            round,
            source: Box::new(self),
        }
    }
}
