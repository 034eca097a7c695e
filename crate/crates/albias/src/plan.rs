//! Declarative sweep plans: one TOML file describing a corpus, a model
//! family, and the strategies × seeds × (K, rounds) grid to run. Plans make
//! large comparison sweeps reproducible without shell loops, and their run
//! enumeration order (schedule, then strategy, then seed) is fixed so output
//! file names are stable.

use std::path::{Path, PathBuf};

use albias_core::alcore::{AcquisitionKind, AcquisitionSpec, LoopConfig, ModelFamily};
use albias_core::ftext::FtTrainConfig;
use serde::Deserialize;

use crate::error::AppError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    corpus: String,
    num_classes: usize,
    model: ModelFamily,
    strategies: Vec<AcquisitionKind>,
    seeds: Vec<u64>,
    out_dir: String,
    schedules: Vec<ScheduleSection>,
    #[serde(default)]
    acquisition: AcqSection,
    #[serde(default)]
    ft: FtSection,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleSection {
    k: usize,
    rounds: usize,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AcqSection {
    init_size: Option<usize>,
    ensemble_size: Option<usize>,
    delete_count: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FtSection {
    dim: Option<usize>,
    epochs: Option<usize>,
    lr: Option<f64>,
    buckets: Option<usize>,
}

/// One run of a sweep: its output file name and full configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedRun {
    pub file_name: String,
    pub config: LoopConfig,
}

/// A validated sweep plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub corpus: PathBuf,
    pub num_classes: usize,
    pub out_dir: PathBuf,
    pub runs: Vec<PlannedRun>,
}

impl ExperimentPlan {
    /// The largest `|S_0| + rounds × K` over all runs; the corpus must have
    /// at least this many documents.
    pub fn max_budget(&self) -> usize {
        self.runs
            .iter()
            .map(|r| r.config.resolved_init_size() + r.config.rounds * r.config.query_size)
            .max()
            .unwrap_or(0)
    }
}

/// Parse and validate a plan file.
pub fn parse_plan(path: &Path) -> Result<ExperimentPlan, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::data(format!("{}: {e}", path.display())))?;
    let file: PlanFile = toml::from_str(&text)
        .map_err(|e| AppError::data(format!("{}: {e}", path.display())))?;

    if file.strategies.is_empty() {
        return Err(AppError::data(format!(
            "{}: plan lists no strategies",
            path.display()
        )));
    }
    if file.seeds.is_empty() {
        return Err(AppError::data(format!("{}: plan lists no seeds", path.display())));
    }
    let mut sorted_seeds = file.seeds.clone();
    sorted_seeds.sort_unstable();
    sorted_seeds.dedup();
    if sorted_seeds.len() != file.seeds.len() {
        return Err(AppError::data(format!(
            "{}: seeds must be distinct",
            path.display()
        )));
    }
    if file.schedules.is_empty() {
        return Err(AppError::data(format!(
            "{}: plan lists no (k, rounds) schedules",
            path.display()
        )));
    }
    for s in &file.schedules {
        if s.k == 0 || s.rounds == 0 {
            return Err(AppError::data(format!(
                "{}: schedule k and rounds must be positive",
                path.display()
            )));
        }
    }

    let defaults = FtTrainConfig::default();
    let ft = FtTrainConfig {
        embedding_dim: file.ft.dim.unwrap_or(defaults.embedding_dim),
        epochs: file.ft.epochs.unwrap_or(defaults.epochs),
        initial_lr: file.ft.lr.unwrap_or(defaults.initial_lr),
        bucket_count: file.ft.buckets.unwrap_or(defaults.bucket_count),
        seed: 0,
    };

    let mut runs = Vec::new();
    for schedule in &file.schedules {
        for &kind in &file.strategies {
            for &seed in &file.seeds {
                let mut acquisition = AcquisitionSpec::new(kind);
                if let Some(m) = file.acquisition.ensemble_size {
                    acquisition.ensemble_size = m;
                }
                acquisition.delete_count = file.acquisition.delete_count;
                let config = LoopConfig {
                    query_size: schedule.k,
                    rounds: schedule.rounds,
                    init_size: file.acquisition.init_size,
                    seed,
                    model: file.model,
                    acquisition,
                    ft,
                };
                runs.push(PlannedRun {
                    file_name: format!(
                        "{}_k{}_b{}_seed{}.jsonl",
                        kind.name(),
                        schedule.k,
                        schedule.rounds,
                        seed
                    ),
                    config,
                });
            }
        }
    }

    let mut names: Vec<&str> = runs.iter().map(|r| r.file_name.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    if names.len() != runs.len() {
        return Err(AppError::data(format!(
            "{}: duplicate runs in plan (same strategy, schedule, and seed)",
            path.display()
        )));
    }

    Ok(ExperimentPlan {
        corpus: PathBuf::from(file.corpus),
        num_classes: file.num_classes,
        out_dir: PathBuf::from(file.out_dir),
        runs,
    })
}
