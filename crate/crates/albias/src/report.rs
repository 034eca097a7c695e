//! Serializable diagnostic reports over completed run logs: class-bias
//! entropies, cross-run intersection (stability) tables, accuracy curves,
//! calibration metrics, and support-vector overlap. All reports serialize
//! deterministically so identical inputs give identical bytes.

use std::collections::BTreeMap;
use std::path::Path;

use albias_core::diagnostics::{
    self, chance_overlap, final_sample_label_entropy, overlap_pct, per_query_label_entropy,
    CalibrationReport, OverlapStat,
};
use serde::{Deserialize, Serialize};

use crate::error::AppError;
use crate::runlog::RunLog;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Label-entropy statistics of one run: the per-round query aggregate and
/// the final acquired-sample value, both in nats with maximum `ln C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBiasRun {
    pub log: String,
    pub context: String,
    pub seed: u64,
    pub query_entropy_mean: f64,
    pub query_entropy_std: f64,
    pub sample_entropy: f64,
    pub acquired_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBiasReport {
    pub schema_version: u32,
    pub num_classes: usize,
    /// `ln C`, the entropy of a perfectly balanced sample.
    pub max_entropy: f64,
    pub runs: Vec<ClassBiasRun>,
}

/// Build the class-bias report. `labels[id]` must come from the corpus the
/// logs were produced on.
pub fn class_bias_report(
    logs: &[(String, RunLog)],
    labels: &[usize],
    num_classes: usize,
) -> Result<ClassBiasReport, AppError> {
    if logs.is_empty() {
        return Err(AppError::usage("class-bias needs at least one run log"));
    }
    let mut runs = Vec::with_capacity(logs.len());
    for (name, log) in logs {
        check_log_matches(name, log, labels.len(), num_classes)?;
        let (mean, std) = per_query_label_entropy(&log.queries(), labels, num_classes)?;
        let acquired = log.acquired_set();
        let sample = final_sample_label_entropy(&acquired, labels, num_classes)?;
        runs.push(ClassBiasRun {
            log: name.clone(),
            context: log.context_key(),
            seed: log.header.config.seed,
            query_entropy_mean: mean,
            query_entropy_std: std,
            sample_entropy: sample,
            acquired_size: acquired.len(),
        });
    }
    Ok(ClassBiasReport {
        schema_version: REPORT_SCHEMA_VERSION,
        num_classes,
        max_entropy: (num_classes as f64).ln(),
        runs,
    })
}

/// Mean ± population std of acquired-set overlap over every run pair in one
/// context pairing, with the matching chance baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityGroup {
    /// `"<context_a> vs <context_b>"`; equal contexts mean the pairs vary
    /// only by seed.
    pub context: String,
    pub pairs: usize,
    pub observed_mean: f64,
    pub observed_std: f64,
    pub chance_mean: f64,
    pub stats: Vec<OverlapStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub schema_version: u32,
    pub corpus_size: usize,
    pub groups: Vec<StabilityGroup>,
}

/// Pairwise acquired-set intersections over all unordered pairs of runs,
/// grouped by unordered context pair. Pairs with identical context and seed
/// (replicas of one run) are skipped: their overlap is 100 by determinism.
pub fn stability_report(logs: &[(String, RunLog)]) -> Result<StabilityReport, AppError> {
    if logs.len() < 2 {
        return Err(AppError::usage("stability needs at least two run logs"));
    }
    let corpus_size = logs[0].1.header.corpus_size;
    for (name, log) in logs {
        if log.header.corpus_size != corpus_size {
            return Err(AppError::data(format!(
                "{name}: corpus size {} differs from {corpus_size}; \
                 intersection statistics need a shared pool",
                log.header.corpus_size
            )));
        }
    }

    let mut groups: BTreeMap<String, Vec<OverlapStat>> = BTreeMap::new();
    for i in 0..logs.len() {
        for j in (i + 1)..logs.len() {
            let (name_a, a) = &logs[i];
            let (name_b, b) = &logs[j];
            let key_a = a.context_key();
            let key_b = b.context_key();
            if key_a == key_b && a.header.config.seed == b.header.config.seed {
                continue;
            }
            let (lo, hi) = if key_a <= key_b { (&key_a, &key_b) } else { (&key_b, &key_a) };
            let group = format!("{lo} vs {hi}");
            let sa = a.acquired_set();
            let sb = b.acquired_set();
            let observed = overlap_pct(&sa, &sb)?;
            groups.entry(group).or_default().push(OverlapStat {
                observed,
                chance: chance_overlap(corpus_size, sa.len(), sb.len()),
                size_a: sa.len(),
                size_b: sb.len(),
                context: format!(
                    "{name_a} (seed {}) vs {name_b} (seed {})",
                    a.header.config.seed, b.header.config.seed
                ),
            });
        }
    }

    if groups.is_empty() {
        return Err(AppError::usage(
            "all run pairs share context and seed; nothing varies, so every overlap is 100",
        ));
    }

    let groups = groups
        .into_iter()
        .map(|(context, stats)| {
            let observed: Vec<f64> = stats.iter().map(|s| s.observed).collect();
            let mean = observed.iter().sum::<f64>() / observed.len() as f64;
            let var = observed.iter().map(|o| (o - mean) * (o - mean)).sum::<f64>()
                / observed.len() as f64;
            let chance_mean =
                stats.iter().map(|s| s.chance).sum::<f64>() / stats.len() as f64;
            StabilityGroup {
                context,
                pairs: stats.len(),
                observed_mean: mean,
                observed_std: var.sqrt(),
                chance_mean,
                stats,
            }
        })
        .collect();

    Ok(StabilityReport {
        schema_version: REPORT_SCHEMA_VERSION,
        corpus_size,
        groups,
    })
}

/// One run's curve plus identity, for the JSON side of the curves report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRun {
    pub log: String,
    pub context: String,
    pub strategy: String,
    pub seed: u64,
    pub final_accuracy: f64,
    pub curve: Vec<albias_core::alcore::CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvesReport {
    pub schema_version: u32,
    pub runs: Vec<CurveRun>,
}

pub fn curves_report(logs: &[(String, RunLog)]) -> Result<CurvesReport, AppError> {
    if logs.is_empty() {
        return Err(AppError::usage("curves needs at least one run log"));
    }
    let runs = logs
        .iter()
        .map(|(name, log)| CurveRun {
            log: name.clone(),
            context: log.context_key(),
            strategy: log.header.config.acquisition.kind.name().to_string(),
            seed: log.header.config.seed,
            final_accuracy: log.footer.final_accuracy,
            curve: log.footer.curve.clone(),
        })
        .collect();
    Ok(CurvesReport {
        schema_version: REPORT_SCHEMA_VERSION,
        runs,
    })
}

/// Write the plot-data CSV: one row per curve point with columns
/// `fraction_labeled,accuracy,strategy,seed`.
pub fn write_curves_csv(path: &Path, report: &CurvesReport) -> Result<(), AppError> {
    let file = std::fs::File::create(path)
        .map_err(|e| AppError::data(format!("{}: {e}", path.display())))?;
    let mut writer = csv::Writer::from_writer(file);
    writer
        .write_record(["fraction_labeled", "accuracy", "strategy", "seed"])
        .map_err(|e| AppError::data(e.to_string()))?;
    for run in &report.runs {
        for point in &run.curve {
            writer
                .write_record([
                    format!("{}", point.fraction_labeled),
                    format!("{}", point.accuracy),
                    run.strategy.clone(),
                    run.seed.to_string(),
                ])
                .map_err(|e| AppError::data(e.to_string()))?;
        }
    }
    writer.flush().map_err(|e| AppError::data(e.to_string()))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCmdReport {
    pub schema_version: u32,
    pub log: String,
    pub context: String,
    pub seed: u64,
    pub test_size: usize,
    pub metrics: CalibrationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmOverlapReport {
    pub schema_version: u32,
    pub log: String,
    pub context: String,
    /// Number of support vectors found on the full corpus.
    pub support_size: usize,
    pub acquired_size: usize,
    pub stat: OverlapStat,
}

/// Serialize any report as pretty JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize>(report: &T) -> Result<Vec<u8>, AppError> {
    let mut json =
        serde_json::to_string_pretty(report).map_err(|e| AppError::data(e.to_string()))?;
    json.push('\n');
    Ok(json.into_bytes())
}

fn check_log_matches(
    name: &str,
    log: &RunLog,
    corpus_len: usize,
    num_classes: usize,
) -> Result<(), AppError> {
    if log.header.corpus_size != corpus_len {
        return Err(AppError::data(format!(
            "{name}: log was produced on a corpus of {} documents, got {corpus_len}",
            log.header.corpus_size
        )));
    }
    if log.header.num_classes != num_classes {
        return Err(AppError::data(format!(
            "{name}: log declares {} classes, got {num_classes}",
            log.header.num_classes
        )));
    }
    Ok(())
}

/// Recompute the label-entropy diagnostics used by [`class_bias_report`]
/// directly from pieces, for callers that have no log file.
pub fn entropy_summary(
    queries: &[Vec<usize>],
    acquired: &std::collections::BTreeSet<usize>,
    labels: &[usize],
    num_classes: usize,
) -> Result<(f64, f64, f64), AppError> {
    let (mean, std) = per_query_label_entropy(queries, labels, num_classes)?;
    let sample = diagnostics::final_sample_label_entropy(acquired, labels, num_classes)?;
    Ok((mean, std, sample))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runlog::{LogFooter, LogHeader, SCHEMA_VERSION};
    use albias_core::alcore::{
        AcquisitionKind, AcquisitionSpec, LoopConfig, ModelFamily, QueryRecord,
    };
    use albias_core::ftext::FtTrainConfig;

    /// Hand-built log: S_0 = given, one round selecting `selected`.
    fn fake_log(
        corpus_size: usize,
        num_classes: usize,
        kind: AcquisitionKind,
        seed: u64,
        initial: Vec<usize>,
        selected: Vec<usize>,
    ) -> RunLog {
        let config = LoopConfig {
            query_size: selected.len(),
            rounds: 1,
            init_size: Some(initial.len()),
            seed,
            model: ModelFamily::Ftext,
            acquisition: AcquisitionSpec::new(kind),
            ft: FtTrainConfig::default(),
        };
        let mut final_train: Vec<usize> = initial.iter().chain(&selected).copied().collect();
        final_train.sort_unstable();
        let scores = vec![0.5; selected.len()];
        RunLog {
            header: LogHeader {
                schema_version: SCHEMA_VERSION,
                corpus: "toy".into(),
                corpus_size,
                num_classes,
                config,
                initial,
            },
            records: vec![QueryRecord {
                round: 1,
                selected,
                scores,
                deleted: vec![],
                train_size: final_train.len(),
                pool_size: corpus_size - final_train.len(),
                accuracy: 0.9,
            }],
            footer: LogFooter {
                final_accuracy: 0.95,
                pool_size: corpus_size - final_train.len(),
                final_train,
                curve: vec![],
            },
        }
    }

    #[test]
    fn class_bias_matches_hand_computation() {
        // Labels alternate 0,1; the query picks three of one class and one
        // of the other: histogram [3,1].
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let log = fake_log(20, 2, AcquisitionKind::Entropy, 1, vec![1, 3], vec![0, 2, 4, 5]);
        let report = class_bias_report(&[("a".into(), log)], &labels, 2).unwrap();
        assert_eq!(report.runs.len(), 1);
        let run = &report.runs[0];
        // label_entropy([3,1]) = ln 2 − KL(uniform ‖ [0.75, 0.25])
        let expected = 2.0f64.ln()
            - (0.5 * (0.5f64 / 0.75).ln() + 0.5 * (0.5f64 / 0.25).ln());
        assert!((run.query_entropy_mean - expected).abs() < 1e-12);
        assert_eq!(run.query_entropy_std, 0.0, "single round has no spread");
        assert!((run.sample_entropy - expected).abs() < 1e-12);
        assert!((report.max_entropy - 2.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn stability_groups_by_context_pair() {
        // Two entropy runs (different seeds) and one random run. Acquired
        // sets chosen so entropy-vs-entropy overlap is 50%.
        let a = fake_log(100, 2, AcquisitionKind::Entropy, 1, vec![90], vec![1, 2, 3, 4]);
        let b = fake_log(100, 2, AcquisitionKind::Entropy, 2, vec![91], vec![3, 4, 5, 6]);
        let c = fake_log(100, 2, AcquisitionKind::Random, 1, vec![92], vec![1, 2, 3, 4]);
        let report = stability_report(&[
            ("a".into(), a),
            ("b".into(), b),
            ("c".into(), c),
        ])
        .unwrap();

        assert_eq!(report.groups.len(), 2);
        let same = report
            .groups
            .iter()
            .find(|g| g.context == "ftext|entropy|k4|b1 vs ftext|entropy|k4|b1")
            .unwrap();
        assert_eq!(same.pairs, 1);
        assert!((same.observed_mean - 50.0).abs() < 1e-12);
        assert!((same.chance_mean - 4.0).abs() < 1e-12, "4 of 100 documents");

        let cross = report
            .groups
            .iter()
            .find(|g| g.context == "ftext|entropy|k4|b1 vs ftext|random|k4|b1")
            .unwrap();
        assert_eq!(cross.pairs, 2, "both entropy runs pair with the random run");
    }

    #[test]
    fn identical_context_and_seed_pairs_are_skipped() {
        let a = fake_log(100, 2, AcquisitionKind::Entropy, 1, vec![90], vec![1, 2]);
        let b = fake_log(100, 2, AcquisitionKind::Entropy, 1, vec![90], vec![1, 2]);
        let err = stability_report(&[("a".into(), a), ("b".into(), b)]).unwrap_err();
        // The only candidate pair is a replica, so no group forms — but the
        // command itself still succeeded at parsing; flag it as usage.
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn curves_report_and_csv_round_trip() {
        let mut log = fake_log(50, 2, AcquisitionKind::Entropy, 3, vec![0], vec![1, 2]);
        log.footer.curve = vec![
            albias_core::alcore::CurvePoint { fraction_labeled: 0.02, accuracy: 0.5 },
            albias_core::alcore::CurvePoint { fraction_labeled: 0.06, accuracy: 0.75 },
        ];
        let report = curves_report(&[("a".into(), log)]).unwrap();
        assert_eq!(report.runs[0].curve.len(), 2);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curves.csv");
        write_curves_csv(&path, &report).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "fraction_labeled,accuracy,strategy,seed"
        );
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first, vec!["0.02", "0.5", "entropy", "3"]);
        // Values survive the round trip exactly.
        assert_eq!(first[0].parse::<f64>().unwrap(), 0.02);
        assert_eq!(text.lines().count(), 3);
    }
}
