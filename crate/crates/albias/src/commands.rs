//! Implementations behind the `al` subcommands: thin, deterministic
//! orchestration of corpus IO, the acquisition loop, and report builders.
//! Nothing here mutates its inputs; every output embeds the configuration
//! that produced it.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use albias_core::alcore::{self, model_seed, LoopConfig, ModelFamily};
use albias_core::corpus::{generate_synthetic, LabeledCorpus, SurrogateManifest, SyntheticSpec};
use albias_core::diagnostics::{self, OverlapStat};
use albias_core::ftext::{self, PreparedCorpus};
use albias_core::nbayes::NbClassifier;
use albias_core::svmlin::{self, SvmConfig};
use serde::Serialize;

use crate::csvio;
use crate::error::AppError;
use crate::plan::parse_plan;
use crate::report::{
    self, CalibrationCmdReport, CurvesReport, SvmOverlapReport, REPORT_SCHEMA_VERSION,
};
use crate::runlog::{read_run_log, write_run_log, RunLog};

/// Echo of the synthetic-corpus parameters, written next to the CSVs.
#[derive(Debug, Serialize)]
struct SynthMeta {
    schema_version: u32,
    train: SyntheticSpec,
    test: SyntheticSpec,
}

/// Generate a synthetic corpus directory: `train.csv`, `test.csv` (one
/// fifth the documents per class, rounded up, from the next seed), and a
/// `synth.json` echo of both generator specs.
pub fn cmd_gen_synth(spec: &SyntheticSpec, out_dir: &Path) -> Result<String, AppError> {
    let train = generate_synthetic(spec)?;
    let test_spec = SyntheticSpec {
        docs_per_class: spec.docs_per_class.div_ceil(5),
        seed: spec.seed.wrapping_add(1),
        ..spec.clone()
    };
    let test = generate_synthetic(&test_spec)?;

    fs::create_dir_all(out_dir)
        .map_err(|e| AppError::data(format!("{}: {e}", out_dir.display())))?;
    let rows = |c: &LabeledCorpus| -> Vec<(usize, String)> {
        c.documents()
            .iter()
            .map(|d| (d.label, d.text.clone()))
            .collect()
    };
    let train_rows = rows(&train);
    let test_rows = rows(&test);
    csvio::write_corpus_csv(
        &out_dir.join("train.csv"),
        train_rows.iter().map(|(l, t)| (*l, t.as_str())),
    )?;
    csvio::write_corpus_csv(
        &out_dir.join("test.csv"),
        test_rows.iter().map(|(l, t)| (*l, t.as_str())),
    )?;
    let meta = SynthMeta {
        schema_version: REPORT_SCHEMA_VERSION,
        train: spec.clone(),
        test: test_spec,
    };
    fs::write(out_dir.join("synth.json"), report::to_json_bytes(&meta)?)
        .map_err(|e| AppError::data(format!("{}: {e}", out_dir.display())))?;

    Ok(format!(
        "wrote {} train and {} test documents to {}",
        train.len(),
        test.len(),
        out_dir.display()
    ))
}

/// Load `train.csv` and `test.csv` from a corpus directory.
pub fn load_corpus_dir(
    dir: &Path,
    num_classes: usize,
) -> Result<(LabeledCorpus, LabeledCorpus), AppError> {
    let train = csvio::load_csv(&dir.join("train.csv"), num_classes)?;
    let test = csvio::load_csv(&dir.join("test.csv"), num_classes)?;
    Ok((train, test))
}

/// Run one acquisition loop and write its JSONL log.
pub fn cmd_run(
    corpus_dir: &Path,
    num_classes: usize,
    config: &LoopConfig,
    out: &Path,
) -> Result<String, AppError> {
    let (train, test) = load_corpus_dir(corpus_dir, num_classes)?;
    let (state, curve) = alcore::run_loop(&train, &test, config)?;
    let log = RunLog::from_state(&corpus_dir.display().to_string(), num_classes, &state, &curve);
    write_run_log(out, &log)?;
    Ok(format!(
        "wrote {}: {} rounds, train size {}, final accuracy {:.4}",
        out.display(),
        config.rounds,
        state.final_train().len(),
        state.final_accuracy()
    ))
}

/// Worker cap for sweeps: `ALBIAS_THREADS` if set, otherwise the machine's
/// available parallelism.
fn sweep_threads(runs: usize) -> usize {
    let cap = std::env::var("ALBIAS_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|p| p.get())
                .unwrap_or(1)
        });
    cap.max(1).min(runs.max(1))
}

/// Execute every run of a plan (in parallel worker threads, capped by
/// `ALBIAS_THREADS`), write one log per run into the plan's output
/// directory, and summarize their pairwise intersections in
/// `intersections.json`. Outputs are identical regardless of thread count.
pub fn cmd_sweep(plan_path: &Path) -> Result<String, AppError> {
    let plan = parse_plan(plan_path)?;
    let (train, test) = load_corpus_dir(&plan.corpus, plan.num_classes)?;
    if plan.max_budget() > train.len() {
        return Err(AppError::usage(format!(
            "plan needs {} labeled documents but the corpus has {}",
            plan.max_budget(),
            train.len()
        )));
    }

    let prepared = PreparedCorpus::from_corpus(&train);
    let test_prep = PreparedCorpus::from_corpus(&test);
    fs::create_dir_all(&plan.out_dir)
        .map_err(|e| AppError::data(format!("{}: {e}", plan.out_dir.display())))?;

    // Claim run indices from a shared counter; each worker owns its slot of
    // the results vector, so output never depends on scheduling.
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<Result<RunLog, AppError>>>> =
        plan.runs.iter().map(|_| Mutex::new(None)).collect();
    let corpus_ref = plan.corpus.display().to_string();
    let workers = sweep_threads(plan.runs.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= plan.runs.len() {
                    break;
                }
                let run = &plan.runs[idx];
                let outcome = alcore::run_loop_prepared(&prepared, &test_prep, &run.config)
                    .map(|(state, curve)| {
                        RunLog::from_state(&corpus_ref, plan.num_classes, &state, &curve)
                    })
                    .map_err(AppError::from);
                *results[idx].lock().unwrap() = Some(outcome);
            });
        }
    });

    let mut logs: Vec<(String, RunLog)> = Vec::with_capacity(plan.runs.len());
    for (run, slot) in plan.runs.iter().zip(results) {
        let outcome = slot
            .into_inner()
            .unwrap()
            .expect("every claimed index stores a result");
        let log = outcome
            .map_err(|e| AppError::data(format!("{}: {e}", run.file_name)))?;
        let path = plan.out_dir.join(&run.file_name);
        write_run_log(&path, &log)?;
        logs.push((run.file_name.clone(), log));
    }

    let intersections = report::stability_report(&logs)?;
    fs::write(
        plan.out_dir.join("intersections.json"),
        report::to_json_bytes(&intersections)?,
    )
    .map_err(|e| AppError::data(format!("{}: {e}", plan.out_dir.display())))?;

    Ok(format!(
        "wrote {} run logs and intersections.json to {}",
        logs.len(),
        plan.out_dir.display()
    ))
}

fn read_logs(paths: &[PathBuf]) -> Result<Vec<(String, RunLog)>, AppError> {
    paths
        .iter()
        .map(|p| Ok((p.display().to_string(), read_run_log(p)?)))
        .collect()
}

/// The training corpus a log refers to, honoring an explicit override.
fn corpus_for_log(log: &RunLog, over: Option<&Path>) -> Result<LabeledCorpus, AppError> {
    let dir = over
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(&log.header.corpus));
    csvio::load_csv(&dir.join("train.csv"), log.header.num_classes)
}

pub fn cmd_diagnose_class_bias(
    log_paths: &[PathBuf],
    corpus_override: Option<&Path>,
    out: &Path,
) -> Result<String, AppError> {
    let logs = read_logs(log_paths)?;
    let (first_name, first) = &logs[0];
    for (name, log) in &logs[1..] {
        if log.header.num_classes != first.header.num_classes
            || log.header.corpus_size != first.header.corpus_size
        {
            return Err(AppError::data(format!(
                "{name} and {first_name} were produced on different corpora"
            )));
        }
    }
    let corpus = corpus_for_log(first, corpus_override)?;
    let labels: Vec<usize> = corpus.labels().collect();
    let report = report::class_bias_report(&logs, &labels, first.header.num_classes)?;
    fs::write(out, report::to_json_bytes(&report)?)
        .map_err(|e| AppError::data(format!("{}: {e}", out.display())))?;
    Ok(format!(
        "wrote class-bias report for {} runs to {}",
        report.runs.len(),
        out.display()
    ))
}

pub fn cmd_diagnose_stability(log_paths: &[PathBuf], out: &Path) -> Result<String, AppError> {
    let logs = read_logs(log_paths)?;
    let report = report::stability_report(&logs)?;
    fs::write(out, report::to_json_bytes(&report)?)
        .map_err(|e| AppError::data(format!("{}: {e}", out.display())))?;
    Ok(format!(
        "wrote stability report with {} context groups to {}",
        report.groups.len(),
        out.display()
    ))
}

pub fn cmd_diagnose_curves(
    log_paths: &[PathBuf],
    out_json: &Path,
    out_csv: &Path,
) -> Result<String, AppError> {
    let logs = read_logs(log_paths)?;
    let report: CurvesReport = report::curves_report(&logs)?;
    fs::write(out_json, report::to_json_bytes(&report)?)
        .map_err(|e| AppError::data(format!("{}: {e}", out_json.display())))?;
    report::write_curves_csv(out_csv, &report)?;
    Ok(format!(
        "wrote {} accuracy curves to {} and {}",
        report.runs.len(),
        out_json.display(),
        out_csv.display()
    ))
}

/// Retrain the final model recorded in a log (bit-reproducible from the
/// echoed config) and measure its calibration on the held-out test set.
pub fn cmd_diagnose_calibration(
    log_path: &Path,
    corpus_override: Option<&Path>,
    out: &Path,
) -> Result<String, AppError> {
    let log = read_run_log(log_path)?;
    let dir = corpus_override
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(&log.header.corpus));
    let (train, test) = load_corpus_dir(&dir, log.header.num_classes)?;
    if train.len() != log.header.corpus_size {
        return Err(AppError::data(format!(
            "{}: corpus has {} documents but the log was produced on {}",
            dir.display(),
            train.len(),
            log.header.corpus_size
        )));
    }

    let prepared = PreparedCorpus::from_corpus(&train);
    let test_prep = PreparedCorpus::from_corpus(&test);
    let config = &log.header.config;
    let seed = model_seed(config.seed, config.rounds as u64, 0);
    let ids = &log.footer.final_train;
    let predictions: Vec<Vec<f64>> = match config.model {
        ModelFamily::Ftext => {
            let ft = albias_core::ftext::FtTrainConfig { seed, ..config.ft };
            let model = ftext::train(&prepared, ids, &ft)?;
            test_prep
                .docs()
                .iter()
                .map(|d| model.predict_proba_doc(d))
                .collect()
        }
        ModelFamily::Nbayes => {
            let model = NbClassifier::train(&prepared, ids)?;
            test_prep
                .docs()
                .iter()
                .map(|d| model.predict_proba_doc(d))
                .collect()
        }
    };
    let labels: Vec<usize> = test.labels().collect();
    let metrics = diagnostics::calibration(&predictions, &labels)?;
    let report = CalibrationCmdReport {
        schema_version: REPORT_SCHEMA_VERSION,
        log: log_path.display().to_string(),
        context: log.context_key(),
        seed: config.seed,
        test_size: labels.len(),
        metrics,
    };
    fs::write(out, report::to_json_bytes(&report)?)
        .map_err(|e| AppError::data(format!("{}: {e}", out.display())))?;
    Ok(format!(
        "wrote calibration report ({} test documents) to {}",
        labels.len(),
        out.display()
    ))
}

/// Train a linear SVM on sentence embeddings of the full corpus, extract its
/// support vectors, and measure how much of that support set the log's
/// acquired set captured.
pub fn cmd_svm_overlap(
    log_path: &Path,
    corpus_override: Option<&Path>,
    svm: &SvmConfig,
    out: &Path,
) -> Result<String, AppError> {
    let log = read_run_log(log_path)?;
    let corpus = corpus_for_log(&log, corpus_override)?;
    if corpus.len() != log.header.corpus_size {
        return Err(AppError::data(format!(
            "corpus has {} documents but the log was produced on {}",
            corpus.len(),
            log.header.corpus_size
        )));
    }

    let prepared = PreparedCorpus::from_corpus(&corpus);
    let all_ids: Vec<usize> = (0..corpus.len()).collect();
    let config = &log.header.config;
    let ft = albias_core::ftext::FtTrainConfig { seed: config.seed, ..config.ft };
    let embedder = ftext::train(&prepared, &all_ids, &ft)?;
    let features: Vec<Vec<f64>> = prepared
        .docs()
        .iter()
        .map(|d| embedder.sentence_embedding_doc(d))
        .collect();
    let labels: Vec<usize> = corpus.labels().collect();
    let model = svmlin::train_svm(&features, &labels, svm)?;
    let supports: BTreeSet<usize> = model.support_set();
    let acquired = log.acquired_set();
    let observed = svmlin::support_overlap(&supports, &acquired)?;
    let report = SvmOverlapReport {
        schema_version: REPORT_SCHEMA_VERSION,
        log: log_path.display().to_string(),
        context: log.context_key(),
        support_size: supports.len(),
        acquired_size: acquired.len(),
        stat: OverlapStat {
            observed,
            chance: diagnostics::chance_overlap(corpus.len(), supports.len(), acquired.len()),
            size_a: supports.len(),
            size_b: acquired.len(),
            context: format!("support vectors vs {} acquired set", config.acquisition.kind.name()),
        },
    };
    fs::write(out, report::to_json_bytes(&report)?)
        .map_err(|e| AppError::data(format!("{}: {e}", out.display())))?;
    Ok(format!(
        "wrote support-overlap report ({} supports, {:.1}% captured) to {}",
        supports.len(),
        observed,
        out.display()
    ))
}

/// Export the surrogate dataset of a completed run: the final train set as
/// a load-compatible CSV plus a provenance manifest.
pub fn cmd_export_surrogate(
    log_path: &Path,
    corpus_override: Option<&Path>,
    out_dir: &Path,
) -> Result<String, AppError> {
    let log = read_run_log(log_path)?;
    let corpus = corpus_for_log(&log, corpus_override)?;
    if corpus.len() != log.header.corpus_size {
        return Err(AppError::data(format!(
            "corpus has {} documents but the log was produced on {}",
            corpus.len(),
            log.header.corpus_size
        )));
    }
    let config = &log.header.config;
    let manifest = SurrogateManifest::new(
        log.header.corpus.clone(),
        config.acquisition.kind.name().to_string(),
        config.seed,
        config.rounds,
        log.provenance(),
        log.header.corpus_size,
    )?;
    csvio::export_surrogate(&corpus, &manifest, out_dir)?;
    Ok(format!(
        "wrote {} documents (compression ratio {:.4}) to {}",
        manifest.provenance.len(),
        manifest.compression_ratio,
        out_dir.display()
    ))
}
