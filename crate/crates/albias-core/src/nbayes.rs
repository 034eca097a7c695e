//! Multinomial Naive Bayes over sublinear TF-IDF features — the classical
//! comparator classifier. Fitting is fully deterministic: vocabulary ties at
//! the feature cap break by corpus frequency, then lexicographically.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::LabeledCorpus;
use crate::error::CoreError;
use crate::ftext::{tokenize, PreparedCorpus, TokenizedDoc};
use crate::math;

/// Default vocabulary cap: only the most frequent terms are kept.
pub const MAX_FEATURES: usize = 50_000;

/// Additive smoothing applied to per-class feature mass.
pub const SMOOTHING_ALPHA: f64 = 1.0;

/// Fixed English stop-word list (318 words, sorted). These terms never enter
/// the TF-IDF vocabulary.
pub const ENGLISH_STOP_WORDS: &[&str] = &[
    "a", "about", "above", "across", "after", "afterwards", "again", "against",
    "all", "almost", "alone", "along", "already", "also", "although", "always",
    "am", "among", "amongst", "amoungst", "amount", "an", "and", "another",
    "any", "anyhow", "anyone", "anything", "anyway", "anywhere", "are", "around",
    "as", "at", "back", "be", "became", "because", "become", "becomes",
    "becoming", "been", "before", "beforehand", "behind", "being", "below", "beside",
    "besides", "between", "beyond", "bill", "both", "bottom", "but", "by",
    "call", "can", "cannot", "cant", "co", "con", "could", "couldnt",
    "cry", "de", "describe", "detail", "do", "done", "down", "due",
    "during", "each", "eg", "eight", "either", "eleven", "else", "elsewhere",
    "empty", "enough", "etc", "even", "ever", "every", "everyone", "everything",
    "everywhere", "except", "few", "fifteen", "fifty", "fill", "find", "fire",
    "first", "five", "for", "former", "formerly", "forty", "found", "four",
    "from", "front", "full", "further", "get", "give", "go", "had",
    "has", "hasnt", "have", "he", "hence", "her", "here", "hereafter",
    "hereby", "herein", "hereupon", "hers", "herself", "him", "himself", "his",
    "how", "however", "hundred", "i", "ie", "if", "in", "inc",
    "indeed", "interest", "into", "is", "it", "its", "itself", "keep",
    "last", "latter", "latterly", "least", "less", "ltd", "made", "many",
    "may", "me", "meanwhile", "might", "mill", "mine", "more", "moreover",
    "most", "mostly", "move", "much", "must", "my", "myself", "name",
    "namely", "neither", "never", "nevertheless", "next", "nine", "no", "nobody",
    "none", "noone", "nor", "not", "nothing", "now", "nowhere", "of",
    "off", "often", "on", "once", "one", "only", "onto", "or",
    "other", "others", "otherwise", "our", "ours", "ourselves", "out", "over",
    "own", "part", "per", "perhaps", "please", "put", "rather", "re",
    "same", "see", "seem", "seemed", "seeming", "seems", "serious", "several",
    "she", "should", "show", "side", "since", "sincere", "six", "sixty",
    "so", "some", "somehow", "someone", "something", "sometime", "sometimes", "somewhere",
    "still", "such", "system", "take", "ten", "than", "that", "the",
    "their", "them", "themselves", "then", "thence", "there", "thereafter", "thereby",
    "therefore", "therein", "thereupon", "these", "they", "thick", "thin", "third",
    "this", "those", "though", "three", "through", "throughout", "thru", "thus",
    "to", "together", "too", "top", "toward", "towards", "twelve", "twenty",
    "two", "un", "under", "until", "up", "upon", "us", "very",
    "via", "was", "we", "well", "were", "what", "whatever", "when",
    "whence", "whenever", "where", "whereafter", "whereas", "whereby", "wherein", "whereupon",
    "wherever", "whether", "which", "while", "whither", "who", "whoever", "whole",
    "whom", "whose", "why", "will", "with", "within", "without", "would",
    "yet", "you", "your", "yours", "yourself", "yourselves",
];

pub fn is_stop_word(token: &str) -> bool {
    ENGLISH_STOP_WORDS.binary_search(&token).is_ok()
}

/// Fitted TF-IDF vectorizer: a capped vocabulary with per-term document
/// frequencies and idf weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfState {
    /// Term → column. Columns are assigned in lexicographic term order.
    vocab: BTreeMap<String, usize>,
    /// Number of fitted documents containing each term, by column.
    doc_freq: Vec<usize>,
    /// `ln((1 + N) / (1 + df)) + 1`, by column.
    idf: Vec<f64>,
    num_docs: usize,
}

/// Fit a TF-IDF vectorizer with the default vocabulary cap.
pub fn fit_tfidf<'a, I>(docs: I) -> Result<TfidfState, CoreError>
where
    I: IntoIterator<Item = &'a [String]>,
{
    fit_tfidf_capped(docs, MAX_FEATURES)
}

/// Fit a TF-IDF vectorizer keeping at most `max_features` terms. Stop words
/// are discarded first; if more terms remain than the cap, the most frequent
/// ones win, with ties broken by lexicographic order.
pub fn fit_tfidf_capped<'a, I>(docs: I, max_features: usize) -> Result<TfidfState, CoreError>
where
    I: IntoIterator<Item = &'a [String]>,
{
    if max_features == 0 {
        return Err(CoreError::InvalidConfig(String::from(
            "max_features must be positive",
        )));
    }
    // Per term: (total occurrences, containing documents).
    let mut stats: BTreeMap<&str, (u64, usize)> = BTreeMap::new();
    let mut num_docs = 0usize;
    for tokens in docs {
        num_docs += 1;
        let mut seen: BTreeMap<&str, u64> = BTreeMap::new();
        for tok in tokens {
            if !is_stop_word(tok) {
                *seen.entry(tok).or_insert(0) += 1;
            }
        }
        for (term, count) in seen {
            let e = stats.entry(term).or_insert((0, 0));
            e.0 += count;
            e.1 += 1;
        }
    }
    if num_docs == 0 {
        return Err(CoreError::EmptySubset);
    }

    let kept: Vec<(&str, usize)> = if stats.len() <= max_features {
        stats.iter().map(|(&t, &(_, df))| (t, df)).collect()
    } else {
        let mut ranked: Vec<(&str, u64, usize)> =
            stats.iter().map(|(&t, &(c, df))| (t, c, df)).collect();
        // Highest corpus frequency first; lexicographic within a tie.
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_features);
        ranked.sort_by(|a, b| a.0.cmp(b.0));
        ranked.into_iter().map(|(t, _, df)| (t, df)).collect()
    };

    let mut vocab = BTreeMap::new();
    let mut doc_freq = Vec::with_capacity(kept.len());
    let mut idf = Vec::with_capacity(kept.len());
    for (col, (term, df)) in kept.into_iter().enumerate() {
        vocab.insert(String::from(term), col);
        doc_freq.push(df);
        idf.push(math::ln((1.0 + num_docs as f64) / (1.0 + df as f64)) + 1.0);
    }
    Ok(TfidfState {
        vocab,
        doc_freq,
        idf,
        num_docs,
    })
}

impl TfidfState {
    /// Sparse TF-IDF row for a token sequence, sorted by column and
    /// L2-normalized. Terms outside the vocabulary contribute nothing; a
    /// document with no in-vocabulary term yields an empty row.
    pub fn transform(&self, tokens: &[String]) -> Vec<(usize, f64)> {
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        for tok in tokens {
            if let Some(&col) = self.vocab.get(tok) {
                *counts.entry(col).or_insert(0) += 1;
            }
        }
        let mut row: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(col, count)| {
                let tf = 1.0 + math::ln(count as f64);
                (col, tf * self.idf[col])
            })
            .collect();
        let norm = math::sqrt(row.iter().map(|(_, v)| v * v).sum());
        if norm > 0.0 {
            for (_, v) in row.iter_mut() {
                *v /= norm;
            }
        }
        row
    }

    pub fn num_features(&self) -> usize {
        self.vocab.len()
    }

    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.vocab.get(term).copied()
    }

    pub fn doc_freq(&self) -> &[usize] {
        &self.doc_freq
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    /// Terms in column order, for serialization.
    pub fn terms_in_column_order(&self) -> Vec<String> {
        let mut terms = vec![String::new(); self.vocab.len()];
        for (term, &col) in &self.vocab {
            terms[col] = term.clone();
        }
        terms
    }

    /// Reconstruct from serialized parts. `terms` lists terms by column.
    pub fn from_parts(
        terms: Vec<String>,
        doc_freq: Vec<usize>,
        idf: Vec<f64>,
        num_docs: usize,
    ) -> Result<Self, CoreError> {
        if doc_freq.len() != terms.len() {
            return Err(CoreError::LengthMismatch {
                left: terms.len(),
                right: doc_freq.len(),
            });
        }
        if idf.len() != terms.len() {
            return Err(CoreError::LengthMismatch {
                left: terms.len(),
                right: idf.len(),
            });
        }
        if idf.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite);
        }
        let mut vocab = BTreeMap::new();
        for (col, term) in terms.into_iter().enumerate() {
            if vocab.insert(term, col).is_some() {
                return Err(CoreError::InvalidConfig(String::from(
                    "duplicate term in vocabulary",
                )));
            }
        }
        Ok(TfidfState {
            vocab,
            doc_freq,
            idf,
            num_docs,
        })
    }
}

/// Fitted multinomial Naive Bayes tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnbModel {
    /// Log prior per class; `-inf` for classes absent from the training set.
    log_priors: Vec<f64>,
    /// `C × V` row-major log-likelihood table; each row exponentiates to a
    /// distribution over features.
    log_likelihoods: Vec<f64>,
    num_classes: usize,
    num_features: usize,
}

/// Fit the NB tables on sparse non-negative feature rows with α = 1
/// smoothing. Priors come from empirical label frequencies.
pub fn fit_mnb(
    rows: &[Vec<(usize, f64)>],
    labels: &[usize],
    num_classes: usize,
    num_features: usize,
) -> Result<MnbModel, CoreError> {
    if rows.is_empty() {
        return Err(CoreError::EmptySubset);
    }
    if rows.len() != labels.len() {
        return Err(CoreError::LengthMismatch {
            left: rows.len(),
            right: labels.len(),
        });
    }
    if num_classes < 2 || num_features == 0 {
        return Err(CoreError::InvalidConfig(String::from(
            "need at least 2 classes and 1 feature",
        )));
    }

    let mut class_counts = vec![0u64; num_classes];
    let mut mass = vec![0.0f64; num_classes * num_features];
    for (i, (row, &label)) in rows.iter().zip(labels).enumerate() {
        if label >= num_classes {
            return Err(CoreError::LabelOutOfRange {
                id: i,
                label,
                num_classes,
            });
        }
        class_counts[label] += 1;
        for &(col, value) in row {
            if col >= num_features {
                return Err(CoreError::DimensionMismatch {
                    expected: num_features,
                    got: col + 1,
                });
            }
            if !value.is_finite() {
                return Err(CoreError::NonFinite);
            }
            if value < 0.0 {
                return Err(CoreError::InvalidConfig(String::from(
                    "feature values must be non-negative",
                )));
            }
            mass[label * num_features + col] += value;
        }
    }

    let n = rows.len() as f64;
    let log_priors = class_counts
        .iter()
        .map(|&c| {
            if c == 0 {
                f64::NEG_INFINITY
            } else {
                math::ln(c as f64 / n)
            }
        })
        .collect();

    let mut log_likelihoods = vec![0.0f64; num_classes * num_features];
    for c in 0..num_classes {
        let row = &mass[c * num_features..(c + 1) * num_features];
        let total: f64 = row.iter().sum::<f64>() + SMOOTHING_ALPHA * num_features as f64;
        let out = &mut log_likelihoods[c * num_features..(c + 1) * num_features];
        for (o, &m) in out.iter_mut().zip(row) {
            *o = math::ln((m + SMOOTHING_ALPHA) / total);
        }
    }

    Ok(MnbModel {
        log_priors,
        log_likelihoods,
        num_classes,
        num_features,
    })
}

impl MnbModel {
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn log_priors(&self) -> &[f64] {
        &self.log_priors
    }

    /// Flat `C × V` log-likelihood table.
    pub fn log_likelihoods(&self) -> &[f64] {
        &self.log_likelihoods
    }

    /// Posterior over classes for a sparse feature row, normalized to sum
    /// to one. Classes with `-inf` prior receive exactly zero.
    pub fn predict_proba(&self, row: &[(usize, f64)]) -> Vec<f64> {
        let mut scores = self.log_priors.clone();
        for c in 0..self.num_classes {
            if scores[c] == f64::NEG_INFINITY {
                continue;
            }
            let table = &self.log_likelihoods[c * self.num_features..(c + 1) * self.num_features];
            for &(col, value) in row {
                scores[c] += value * table[col];
            }
        }
        log_normalize(&scores)
    }

    /// Reconstruct from serialized parts.
    pub fn from_parts(
        log_priors: Vec<f64>,
        log_likelihoods: Vec<f64>,
        num_features: usize,
    ) -> Result<Self, CoreError> {
        let num_classes = log_priors.len();
        if num_classes < 2 {
            return Err(CoreError::InvalidConfig(String::from(
                "a classifier needs at least 2 classes",
            )));
        }
        if log_likelihoods.len() != num_classes * num_features {
            return Err(CoreError::DimensionMismatch {
                expected: num_classes * num_features,
                got: log_likelihoods.len(),
            });
        }
        if log_likelihoods.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite);
        }
        // Priors may be -inf (absent class) but not NaN or +inf.
        if log_priors.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(CoreError::NonFinite);
        }
        Ok(MnbModel {
            log_priors,
            log_likelihoods,
            num_classes,
            num_features,
        })
    }
}

/// Normalize log scores into probabilities via a stable log-sum-exp.
fn log_normalize(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores.iter().map(|&s| math::exp(s - max)).collect();
    let sum: f64 = out.iter().sum();
    for p in out.iter_mut() {
        *p /= sum;
    }
    out
}

/// Text-level bundle of vectorizer plus NB tables, mirroring the interface
/// of the embedding classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct NbClassifier {
    tfidf: TfidfState,
    mnb: MnbModel,
}

impl NbClassifier {
    /// Fit on the subset `ids` of a prepared corpus.
    pub fn train(prepared: &PreparedCorpus, ids: &[usize]) -> Result<Self, CoreError> {
        Self::train_capped(prepared, ids, MAX_FEATURES)
    }

    /// Fit with an explicit vocabulary cap.
    pub fn train_capped(
        prepared: &PreparedCorpus,
        ids: &[usize],
        max_features: usize,
    ) -> Result<Self, CoreError> {
        if ids.is_empty() {
            return Err(CoreError::EmptySubset);
        }
        let mut subset = Vec::with_capacity(ids.len());
        for &id in ids {
            subset.push(prepared.doc(id)?);
        }
        let tfidf = fit_tfidf_capped(subset.iter().map(|d| d.tokens.as_slice()), max_features)?;
        let rows: Vec<Vec<(usize, f64)>> =
            subset.iter().map(|d| tfidf.transform(&d.tokens)).collect();
        let labels: Vec<usize> = subset.iter().map(|d| d.label).collect();
        // An all-stop-word subset has no features to model.
        let num_features = tfidf.num_features();
        if num_features == 0 {
            return Err(CoreError::InvalidConfig(String::from(
                "training subset contains no usable terms",
            )));
        }
        let mnb = fit_mnb(&rows, &labels, prepared.num_classes(), num_features)?;
        Ok(NbClassifier { tfidf, mnb })
    }

    /// Convenience wrapper that tokenizes the corpus on the fly.
    pub fn train_corpus(corpus: &LabeledCorpus, ids: &[usize]) -> Result<Self, CoreError> {
        Self::train(&PreparedCorpus::from_corpus(corpus), ids)
    }

    pub fn from_parts(tfidf: TfidfState, mnb: MnbModel) -> Result<Self, CoreError> {
        if tfidf.num_features() != mnb.num_features() {
            return Err(CoreError::DimensionMismatch {
                expected: tfidf.num_features(),
                got: mnb.num_features(),
            });
        }
        Ok(NbClassifier { tfidf, mnb })
    }

    pub fn tfidf(&self) -> &TfidfState {
        &self.tfidf
    }

    pub fn mnb(&self) -> &MnbModel {
        &self.mnb
    }

    pub fn num_classes(&self) -> usize {
        self.mnb.num_classes
    }

    pub fn predict_proba_doc(&self, doc: &TokenizedDoc) -> Vec<f64> {
        self.mnb.predict_proba(&self.tfidf.transform(&doc.tokens))
    }

    pub fn predict_proba(&self, text: &str) -> Vec<f64> {
        self.mnb.predict_proba(&self.tfidf.transform(&tokenize(text)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, SyntheticSpec};

    fn toks(text: &str) -> Vec<String> {
        tokenize(text)
    }

    #[test]
    fn stop_word_list_is_sorted_and_complete() {
        assert_eq!(ENGLISH_STOP_WORDS.len(), 318);
        for pair in ENGLISH_STOP_WORDS.windows(2) {
            assert!(pair[0] < pair[1], "{} before {}", pair[0], pair[1]);
        }
        assert!(is_stop_word("the"));
        assert!(is_stop_word("whither"));
        assert!(!is_stop_word("cat"));
    }

    #[test]
    fn idf_and_tf_base_cases() {
        let docs = [toks("cat dog"), toks("cat bird")];
        let state = fit_tfidf(docs.iter().map(|d| d.as_slice())).unwrap();
        // "cat" appears in every document: idf = ln(3/3) + 1 = 1.
        let cat = state.column("cat").unwrap();
        assert!((state.idf()[cat] - 1.0).abs() < 1e-12);
        assert_eq!(state.doc_freq()[cat], 2);
        // Columns in lexicographic order.
        assert_eq!(state.column("bird"), Some(0));
        assert_eq!(state.column("cat"), Some(1));
        assert_eq!(state.column("dog"), Some(2));
    }

    #[test]
    fn tfidf_matches_hand_computation() {
        // Corpus {"a b", "a"} — but "a" is a stop word, so use fresh terms.
        let docs = [toks("apple banana"), toks("apple")];
        let state = fit_tfidf(docs.iter().map(|d| d.as_slice())).unwrap();

        let n = 2.0f64;
        let idf_apple = ((1.0 + n) / (1.0 + 2.0)).ln() + 1.0;
        let idf_banana = ((1.0 + n) / (1.0 + 1.0)).ln() + 1.0;

        let row = state.transform(&toks("apple banana"));
        // tf = 1 for both; L2 normalization.
        let norm = (idf_apple * idf_apple + idf_banana * idf_banana).sqrt();
        assert_eq!(row.len(), 2);
        assert_eq!(row[0].0, state.column("apple").unwrap());
        assert!((row[0].1 - idf_apple / norm).abs() < 1e-9);
        assert!((row[1].1 - idf_banana / norm).abs() < 1e-9);

        let row = state.transform(&toks("apple"));
        assert_eq!(row.len(), 1);
        assert!((row[0].1 - 1.0).abs() < 1e-9, "single-term row normalizes to 1");

        // Sublinear tf: a repeated term scales by 1 + ln(count).
        let row = state.transform(&toks("apple apple apple"));
        assert!((row[0].1 - 1.0).abs() < 1e-9, "still unit norm");
        let two = state.transform(&toks("apple apple banana"));
        let tf_apple = 1.0 + 2.0f64.ln();
        let xa = tf_apple * idf_apple;
        let xb = idf_banana;
        let norm = (xa * xa + xb * xb).sqrt();
        assert!((two[0].1 - xa / norm).abs() < 1e-9);
        assert!((two[1].1 - xb / norm).abs() < 1e-9);
    }

    #[test]
    fn stop_words_never_enter_vocabulary() {
        let docs = [toks("the cat and the hat"), toks("a cat")];
        let state = fit_tfidf(docs.iter().map(|d| d.as_slice())).unwrap();
        assert_eq!(state.column("the"), None);
        assert_eq!(state.column("and"), None);
        assert!(state.column("cat").is_some());
        assert!(state.column("hat").is_some());
        assert_eq!(state.num_features(), 2);
    }

    #[test]
    fn vocabulary_cap_breaks_ties_deterministically() {
        // Counts: zebra ×3, mango ×3, kiwi ×2, fig ×1.
        let docs = [
            toks("zebra zebra mango kiwi"),
            toks("zebra mango mango kiwi fig"),
        ];
        let state = fit_tfidf_capped(docs.iter().map(|d| d.as_slice()), 3).unwrap();
        assert_eq!(state.num_features(), 3);
        // Tie between zebra and mango at count 3: both beat kiwi; fig dropped.
        assert!(state.column("zebra").is_some());
        assert!(state.column("mango").is_some());
        assert!(state.column("kiwi").is_some());
        assert_eq!(state.column("fig"), None);

        // Tie at the cut line resolves lexicographically.
        let docs = [toks("delta echo alpha")];
        let state = fit_tfidf_capped(docs.iter().map(|d| d.as_slice()), 2).unwrap();
        assert!(state.column("alpha").is_some());
        assert!(state.column("delta").is_some());
        assert_eq!(state.column("echo"), None);

        // Duplicating a document must not perturb the selection.
        let docs = [toks("delta echo alpha"), toks("delta echo alpha")];
        let state2 = fit_tfidf_capped(docs.iter().map(|d| d.as_slice()), 2).unwrap();
        assert_eq!(
            state.terms_in_column_order(),
            state2.terms_in_column_order()
        );
    }

    #[test]
    fn fit_tfidf_rejects_empty_input() {
        let docs: [Vec<String>; 0] = [];
        assert_eq!(
            fit_tfidf(docs.iter().map(|d| d.as_slice())),
            Err(CoreError::EmptySubset)
        );
    }

    #[test]
    fn likelihood_rows_exponentiate_to_one() {
        let rows = vec![
            vec![(0usize, 0.5), (1, 0.5)],
            vec![(2, 1.0)],
            vec![(0, 0.2), (3, 0.8)],
        ];
        let labels = vec![0, 1, 0];
        let model = fit_mnb(&rows, &labels, 3, 4).unwrap();
        for c in 0..3 {
            let row = &model.log_likelihoods()[c * 4..(c + 1) * 4];
            let sum: f64 = row.iter().map(|&l| l.exp()).sum();
            assert!((sum - 1.0).abs() < 1e-9, "class {c} sums to {sum}");
        }
        // Class 2 never appears: prior -inf, posterior exactly zero.
        assert_eq!(model.log_priors()[2], f64::NEG_INFINITY);
        let p = model.predict_proba(&[(0, 1.0)]);
        assert_eq!(p[2], 0.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_corpus_gives_even_posterior() {
        // Mirrored classes: swapping x↔z maps one class onto the other.
        let docs = [
            toks("xx xx yy"),
            toks("zz zz yy"),
            toks("xx yy"),
            toks("zz yy"),
        ];
        let labels = vec![0usize, 1, 0, 1];
        let state = fit_tfidf(docs.iter().map(|d| d.as_slice())).unwrap();
        let rows: Vec<_> = docs.iter().map(|d| state.transform(d)).collect();
        let model = fit_mnb(&rows, &labels, 2, state.num_features()).unwrap();
        let p = model.predict_proba(&state.transform(&toks("yy yy")));
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert!((p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn posterior_matches_direct_bayes_rule() {
        // Ten-document corpus; compare against a dense in-test computation
        // straight from the stored tables.
        let texts = [
            ("red apple sweet fruit", 0usize),
            ("green apple tart fruit", 0),
            ("yellow banana sweet fruit", 0),
            ("red tomato savory vegetable", 1),
            ("green cucumber fresh vegetable", 1),
            ("orange carrot crunchy vegetable", 1),
            ("red rose pretty flower", 2),
            ("white lily pretty flower", 2),
            ("yellow tulip bright flower", 2),
            ("red poppy bright flower", 2),
        ];
        let docs: Vec<Vec<String>> = texts.iter().map(|(t, _)| toks(t)).collect();
        let labels: Vec<usize> = texts.iter().map(|&(_, l)| l).collect();
        let state = fit_tfidf(docs.iter().map(|d| d.as_slice())).unwrap();
        let rows: Vec<_> = docs.iter().map(|d| state.transform(d)).collect();
        let model = fit_mnb(&rows, &labels, 3, state.num_features()).unwrap();

        for query in ["red sweet", "pretty bright flower", "green vegetable", "kumquat"] {
            let row = state.transform(&toks(query));
            let p = model.predict_proba(&row);

            // Dense Bayes rule, no log-sum-exp shift.
            let v = state.num_features();
            let mut dense = vec![0.0f64; v];
            for &(col, val) in &row {
                dense[col] = val;
            }
            let scores: Vec<f64> = (0..3)
                .map(|c| {
                    model.log_priors()[c]
                        + dense
                            .iter()
                            .enumerate()
                            .map(|(t, &x)| x * model.log_likelihoods()[c * v + t])
                            .sum::<f64>()
                })
                .collect();
            let unnorm: Vec<f64> = scores.iter().map(|&s| s.exp()).collect();
            let z: f64 = unnorm.iter().sum();
            for c in 0..3 {
                assert!((p[c] - unnorm[c] / z).abs() < 1e-9);
            }
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn classifier_learns_separable_corpus() {
        let corpus = generate_synthetic(&SyntheticSpec {
            num_classes: 4,
            docs_per_class: 100,
            class_vocab_size: 30,
            shared_vocab_size: 20,
            noise_rate: 0.05,
            doc_len_range: (5, 9),
            seed: 21,
        })
        .unwrap();
        let prepared = PreparedCorpus::from_corpus(&corpus);
        let ids: Vec<usize> = (0..corpus.len()).collect();
        let clf = NbClassifier::train(&prepared, &ids).unwrap();
        let mut correct = 0usize;
        for doc in prepared.docs() {
            let p = clf.predict_proba_doc(doc);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let argmax = p
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            if argmax == doc.label {
                correct += 1;
            }
        }
        let acc = correct as f64 / prepared.len() as f64;
        assert!(acc >= 0.99, "train accuracy {acc}");

        // Fit is deterministic.
        let again = NbClassifier::train(&prepared, &ids).unwrap();
        assert_eq!(clf, again);
    }

    #[test]
    fn fit_mnb_validates_input() {
        assert_eq!(
            fit_mnb(&[], &[], 2, 3),
            Err(CoreError::EmptySubset)
        );
        let rows = vec![vec![(0usize, -1.0)]];
        assert!(matches!(
            fit_mnb(&rows, &[0], 2, 3),
            Err(CoreError::InvalidConfig(_))
        ));
        let rows = vec![vec![(5usize, 1.0)]];
        assert!(matches!(
            fit_mnb(&rows, &[0], 2, 3),
            Err(CoreError::DimensionMismatch { .. })
        ));
        let rows = vec![vec![(0usize, 1.0)]];
        assert_eq!(
            fit_mnb(&rows, &[7], 2, 3),
            Err(CoreError::LabelOutOfRange {
                id: 0,
                label: 7,
                num_classes: 2
            })
        );
    }
}
