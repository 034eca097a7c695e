//! CSV corpus ingestion and surrogate-dataset export.
//!
//! The on-disk format is headerless RFC-4180 CSV, UTF-8, with a 1-based
//! integer class label in the first field and the document text in the
//! remaining fields (multiple fields are joined with single spaces).

use std::fs;
use std::path::Path;

use albias_core::corpus::{LabeledCorpus, SurrogateManifest};

use crate::error::AppError;

/// Load a corpus file. Labels are shifted to 0-based; ids are row indices.
pub fn load_csv(path: &Path, num_classes: usize) -> Result<LabeledCorpus, AppError> {
    let file = fs::File::open(path)
        .map_err(|e| AppError::data(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);

    let mut records: Vec<(usize, String)> = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| {
            AppError::data(format!("{}: row {row_no}: {e}", path.display()))
        })?;
        if row.len() < 2 {
            return Err(AppError::data(format!(
                "{}: row {row_no}: expected a label field and at least one text field",
                path.display()
            )));
        }
        let raw_label = row.get(0).unwrap_or("");
        let label: usize = raw_label.trim().parse().map_err(|_| {
            AppError::data(format!(
                "{}: row {row_no}: label {raw_label:?} is not a positive integer",
                path.display()
            ))
        })?;
        if label < 1 || label > num_classes {
            return Err(AppError::data(format!(
                "{}: row {row_no}: label {label} outside [1, {num_classes}]",
                path.display()
            )));
        }
        let text = row
            .iter()
            .skip(1)
            .collect::<Vec<&str>>()
            .join(" ");
        if text.trim().is_empty() {
            return Err(AppError::data(format!(
                "{}: row {row_no}: empty document text",
                path.display()
            )));
        }
        records.push((label - 1, text));
    }
    if records.is_empty() {
        return Err(AppError::data(format!(
            "{}: empty corpus file",
            path.display()
        )));
    }
    LabeledCorpus::new(records, num_classes).map_err(AppError::from)
}

/// Write `(label, text)` rows in the format [`load_csv`] consumes.
pub fn write_corpus_csv<'a, I>(path: &Path, rows: I) -> Result<(), AppError>
where
    I: IntoIterator<Item = (usize, &'a str)>,
{
    let file = fs::File::create(path)
        .map_err(|e| AppError::data(format!("{}: {e}", path.display())))?;
    let mut writer = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Always)
        .from_writer(file);
    for (label, text) in rows {
        writer
            .write_record([(label + 1).to_string().as_str(), text])
            .map_err(|e| AppError::data(format!("{}: {e}", path.display())))?;
    }
    writer
        .flush()
        .map_err(|e| AppError::data(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Export a surrogate dataset: `surrogate.csv` with the manifest's documents
/// in provenance order (acquisition round, then id), plus `manifest.json`.
/// The CSV round-trips through [`load_csv`].
pub fn export_surrogate(
    corpus: &LabeledCorpus,
    manifest: &SurrogateManifest,
    out_dir: &Path,
) -> Result<(), AppError> {
    for id in manifest.export_ids() {
        if id >= corpus.len() {
            return Err(AppError::data(format!(
                "manifest references id {id}, but the corpus has {} documents",
                corpus.len()
            )));
        }
    }
    fs::create_dir_all(out_dir)
        .map_err(|e| AppError::data(format!("{}: {e}", out_dir.display())))?;

    let rows: Vec<(usize, &str)> = manifest
        .export_ids()
        .into_iter()
        .map(|id| {
            let doc = corpus.doc(id).expect("ids validated above");
            (doc.label, doc.text.as_str())
        })
        .collect();
    write_corpus_csv(&out_dir.join("surrogate.csv"), rows)?;

    let json = serde_json::to_string_pretty(manifest)
        .map_err(|e| AppError::data(e.to_string()))?;
    fs::write(out_dir.join("manifest.json"), json + "\n")
        .map_err(|e| AppError::data(format!("{}: {e}", out_dir.display())))?;
    Ok(())
}
