//! JSONL run logs: one header line echoing the full configuration, one line
//! per acquisition round, and one footer with the final model's results.
//! Logs are the only artifact the diagnostic commands consume, so they carry
//! everything needed to replay or audit a run.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use albias_core::alcore::{AlState, CurvePoint, LoopConfig, QueryRecord};
use albias_core::corpus::ProvenanceEntry;
use serde::{Deserialize, Serialize};

use crate::error::AppError;

pub const SCHEMA_VERSION: u32 = 1;

/// First line of every log: where the data came from and the exact
/// configuration, sufficient to reproduce the run byte-for-byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub schema_version: u32,
    /// Corpus reference as given on the command line (a directory holding
    /// `train.csv` and `test.csv`).
    pub corpus: String,
    pub corpus_size: usize,
    pub num_classes: usize,
    pub config: LoopConfig,
    /// The randomly drawn seed set S_0, sorted.
    pub initial: Vec<usize>,
}

/// Last line of every log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogFooter {
    pub final_accuracy: f64,
    /// Final train set, sorted.
    pub final_train: Vec<usize>,
    pub pool_size: usize,
    /// Accuracy of each trained model against the fraction of the corpus it
    /// was trained on (rounds in order, then the final model).
    pub curve: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum LogLine {
    Header(LogHeader),
    Round(QueryRecord),
    Final(LogFooter),
}

/// A parsed run log.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub header: LogHeader,
    pub records: Vec<QueryRecord>,
    pub footer: LogFooter,
}

impl RunLog {
    pub fn from_state(corpus_ref: &str, num_classes: usize, state: &AlState, curve: &[CurvePoint]) -> Self {
        RunLog {
            header: LogHeader {
                schema_version: SCHEMA_VERSION,
                corpus: corpus_ref.to_string(),
                corpus_size: state.corpus_size(),
                num_classes,
                config: state.config().clone(),
                initial: state.initial().to_vec(),
            },
            records: state.records().to_vec(),
            footer: LogFooter {
                final_accuracy: state.final_accuracy(),
                final_train: state.final_train().to_vec(),
                pool_size: state.corpus_size() - state.final_train().len(),
                curve: curve.to_vec(),
            },
        }
    }

    pub fn initial_set(&self) -> BTreeSet<usize> {
        self.header.initial.iter().copied().collect()
    }

    pub fn final_train_set(&self) -> BTreeSet<usize> {
        self.footer.final_train.iter().copied().collect()
    }

    /// The acquired set Ŝ: final train membership minus the seed set.
    pub fn acquired_set(&self) -> BTreeSet<usize> {
        let initial = self.initial_set();
        self.footer
            .final_train
            .iter()
            .copied()
            .filter(|id| !initial.contains(id))
            .collect()
    }

    /// Selected ids per round, in selection order.
    pub fn queries(&self) -> Vec<Vec<usize>> {
        self.records.iter().map(|r| r.selected.clone()).collect()
    }

    /// Short tag of what this run was, used to group intersection
    /// statistics: model, strategy, query size, and round count (not the
    /// seed, which is what intersection tables vary).
    pub fn context_key(&self) -> String {
        let c = &self.header.config;
        format!(
            "{}|{}|k{}|b{}",
            c.model.name(),
            c.acquisition.kind.name(),
            c.query_size,
            c.rounds
        )
    }

    /// Provenance of every document in the final train set: seed documents
    /// carry round 0 and score 0; acquired documents carry the round and
    /// score of their latest acquisition (deletion can return a document to
    /// the pool, after which it may be reacquired).
    pub fn provenance(&self) -> Vec<ProvenanceEntry> {
        let mut latest: std::collections::BTreeMap<usize, (usize, f64)> = self
            .header
            .initial
            .iter()
            .map(|&id| (id, (0usize, 0.0f64)))
            .collect();
        for record in &self.records {
            for (&id, &score) in record.selected.iter().zip(&record.scores) {
                latest.insert(id, (record.round, score));
            }
        }
        self.footer
            .final_train
            .iter()
            .map(|&id| {
                let (round, score) = latest
                    .get(&id)
                    .copied()
                    .expect("every final train member was seeded or selected");
                ProvenanceEntry { id, round, score }
            })
            .collect()
    }
}

/// Serialize a run log to `path`, one JSON object per line.
pub fn write_run_log(path: &Path, log: &RunLog) -> Result<(), AppError> {
    let mut out = Vec::new();
    let mut push = |line: &LogLine| -> Result<(), AppError> {
        let json = serde_json::to_string(line).map_err(|e| AppError::data(e.to_string()))?;
        out.extend_from_slice(json.as_bytes());
        out.push(b'\n');
        Ok(())
    };
    push(&LogLine::Header(log.header.clone()))?;
    for record in &log.records {
        push(&LogLine::Round(record.clone()))?;
    }
    push(&LogLine::Final(log.footer.clone()))?;

    let mut file = fs::File::create(path)
        .map_err(|e| AppError::data(format!("{}: {e}", path.display())))?;
    file.write_all(&out)
        .map_err(|e| AppError::data(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Parse and validate a run log written by [`write_run_log`].
pub fn read_run_log(path: &Path) -> Result<RunLog, AppError> {
    let file = fs::File::open(path)
        .map_err(|e| AppError::data(format!("{}: {e}", path.display())))?;
    let reader = BufReader::new(file);

    let mut header: Option<LogHeader> = None;
    let mut records: Vec<QueryRecord> = Vec::new();
    let mut footer: Option<LogFooter> = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| {
            AppError::data(format!("{}: line {line_no}: {e}", path.display()))
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LogLine = serde_json::from_str(&line).map_err(|e| {
            AppError::data(format!("{}: line {line_no}: {e}", path.display()))
        })?;
        match parsed {
            LogLine::Header(h) => {
                if header.is_some() {
                    return Err(AppError::data(format!(
                        "{}: line {line_no}: duplicate header",
                        path.display()
                    )));
                }
                if h.schema_version != SCHEMA_VERSION {
                    return Err(AppError::data(format!(
                        "{}: unsupported schema version {} (expected {SCHEMA_VERSION})",
                        path.display(),
                        h.schema_version
                    )));
                }
                header = Some(h);
            }
            LogLine::Round(r) => {
                if header.is_none() {
                    return Err(AppError::data(format!(
                        "{}: line {line_no}: round record before header",
                        path.display()
                    )));
                }
                records.push(r);
            }
            LogLine::Final(f) => {
                if footer.is_some() {
                    return Err(AppError::data(format!(
                        "{}: line {line_no}: duplicate footer",
                        path.display()
                    )));
                }
                footer = Some(f);
            }
        }
    }

    let header = header
        .ok_or_else(|| AppError::data(format!("{}: missing header line", path.display())))?;
    let footer = footer
        .ok_or_else(|| AppError::data(format!("{}: missing footer line", path.display())))?;
    if records.len() != header.config.rounds {
        return Err(AppError::data(format!(
            "{}: {} round records, but the header declares {} rounds",
            path.display(),
            records.len(),
            header.config.rounds
        )));
    }
    for (i, record) in records.iter().enumerate() {
        if record.round != i + 1 {
            return Err(AppError::data(format!(
                "{}: round records out of order at position {}",
                path.display(),
                i + 1
            )));
        }
    }
    Ok(RunLog { header, records, footer })
}
