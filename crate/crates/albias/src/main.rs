//! `al` — a desk-scale laboratory for pool-based active text
//! classification: generate corpora, run acquisition loops, sweep
//! configurations, diagnose sampling bias and stability, and export
//! surrogate datasets.

use std::path::PathBuf;
use std::process::ExitCode;

use albias::commands;
use albias::AppError;
use albias_core::alcore::{AcquisitionKind, AcquisitionSpec, LoopConfig, ModelFamily};
use albias_core::corpus::SyntheticSpec;
use albias_core::ftext::FtTrainConfig;
use albias_core::svmlin::SvmConfig;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "al",
    version,
    about = "Pool-based active text classification: runs, sweeps, diagnostics, surrogate export"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus directory (train.csv, test.csv, synth.json).
    GenSynth(GenSynthArgs),
    /// Run one acquisition loop and write a JSONL run log.
    Run(RunArgs),
    /// Execute every run of a TOML plan and summarize their intersections.
    Sweep {
        /// Plan file (TOML).
        #[arg(long)]
        plan: PathBuf,
    },
    /// Analyze completed run logs.
    #[command(subcommand)]
    Diagnose(DiagnoseCommand),
    /// Overlap between full-corpus SVM support vectors and a run's acquired set.
    SvmOverlap {
        /// Run log to analyze.
        #[arg(long)]
        log: PathBuf,
        /// Corpus directory override (defaults to the path echoed in the log).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// SVM regularization strength.
        #[arg(long, default_value_t = 1.0)]
        svm_c: f64,
        /// SVM convergence tolerance.
        #[arg(long, default_value_t = 1e-3)]
        svm_tol: f64,
        /// Output report (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Export a run's final train set as a surrogate dataset with provenance.
    ExportSurrogate {
        /// Run log to export from.
        #[arg(long)]
        log: PathBuf,
        /// Corpus directory override (defaults to the path echoed in the log).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Output directory for surrogate.csv and manifest.json.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct GenSynthArgs {
    /// Number of classes.
    #[arg(long, default_value_t = 4)]
    classes: usize,
    /// Training documents per class (test gets one fifth, rounded up).
    #[arg(long, default_value_t = 1000)]
    docs_per_class: usize,
    /// Tokens private to each class.
    #[arg(long, default_value_t = 50)]
    class_vocab: usize,
    /// Tokens shared by all classes.
    #[arg(long, default_value_t = 30)]
    shared_vocab: usize,
    /// Probability that a token is drawn from the shared vocabulary.
    #[arg(long, default_value_t = 0.35)]
    noise: f64,
    /// Minimum document length in tokens.
    #[arg(long, default_value_t = 6)]
    len_min: usize,
    /// Maximum document length in tokens.
    #[arg(long, default_value_t = 12)]
    len_max: usize,
    /// Generator seed (the test split uses seed + 1).
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Corpus directory holding train.csv and test.csv.
    #[arg(long)]
    corpus: PathBuf,
    /// Number of classes in the corpus.
    #[arg(long)]
    num_classes: usize,
    /// Classifier trained each round.
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Acquisition strategy.
    #[arg(long, value_enum)]
    strategy: StrategyArg,
    /// Query size K: documents acquired per round.
    #[arg(long)]
    k: usize,
    /// Number of acquisition rounds b.
    #[arg(long)]
    rounds: usize,
    /// Size of the random seed set S_0 (defaults to K).
    #[arg(long)]
    init_size: Option<usize>,
    /// Run seed; all randomness derives from it.
    #[arg(long)]
    seed: u64,
    /// Committee size for ensemble strategies.
    #[arg(long, default_value_t = 5)]
    ensemble_size: usize,
    /// Train documents deleted per round for deletion strategies
    /// (defaults to K/2 rounded down).
    #[arg(long)]
    delete_count: Option<usize>,
    /// Embedding dimension of the ftext classifier.
    #[arg(long, default_value_t = 25)]
    dim: usize,
    /// Training epochs of the ftext classifier.
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    /// Initial learning rate of the ftext classifier.
    #[arg(long, default_value_t = 0.25)]
    lr: f64,
    /// Output run log (JSONL).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum DiagnoseCommand {
    /// Label-entropy bias of queries and of the final acquired sample.
    ClassBias {
        /// Run logs to analyze (repeatable).
        #[arg(long, required = true)]
        log: Vec<PathBuf>,
        /// Corpus directory override (defaults to the path echoed in the logs).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Output report (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Pairwise acquired-set intersections across runs.
    Stability {
        /// Run logs to analyze (repeatable, at least two).
        #[arg(long, required = true, num_args = 1..)]
        log: Vec<PathBuf>,
        /// Output report (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibration metrics of a run's final model on the held-out test set.
    Calibration {
        /// Run log to analyze.
        #[arg(long)]
        log: PathBuf,
        /// Corpus directory override (defaults to the path echoed in the log).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Output report (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy-versus-fraction-labeled curves as JSON and plot-ready CSV.
    Curves {
        /// Run logs to include (repeatable).
        #[arg(long, required = true)]
        log: Vec<PathBuf>,
        /// Output report (JSON).
        #[arg(long)]
        out_json: PathBuf,
        /// Output plot data (CSV).
        #[arg(long)]
        out_csv: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Ftext,
    Nbayes,
}

impl From<ModelArg> for ModelFamily {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Ftext => ModelFamily::Ftext,
            ModelArg::Nbayes => ModelFamily::Nbayes,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Random,
    Entropy,
    Lc,
    DelEntropy,
    DelLc,
    EnsEntropy,
    EnsLc,
    Coreset,
}

impl From<StrategyArg> for AcquisitionKind {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Random => AcquisitionKind::Random,
            StrategyArg::Entropy => AcquisitionKind::Entropy,
            StrategyArg::Lc => AcquisitionKind::LeastConfidence,
            StrategyArg::DelEntropy => AcquisitionKind::DelEntropy,
            StrategyArg::DelLc => AcquisitionKind::DelLc,
            StrategyArg::EnsEntropy => AcquisitionKind::EnsEntropy,
            StrategyArg::EnsLc => AcquisitionKind::EnsLc,
            StrategyArg::Coreset => AcquisitionKind::Coreset,
        }
    }
}

fn dispatch(cli: Cli) -> Result<String, AppError> {
    match cli.command {
        Command::GenSynth(args) => {
            let spec = SyntheticSpec {
                num_classes: args.classes,
                docs_per_class: args.docs_per_class,
                class_vocab_size: args.class_vocab,
                shared_vocab_size: args.shared_vocab,
                noise_rate: args.noise,
                doc_len_range: (args.len_min, args.len_max),
                seed: args.seed,
            };
            commands::cmd_gen_synth(&spec, &args.out)
        }
        Command::Run(args) => {
            let mut acquisition = AcquisitionSpec::new(args.strategy.into());
            acquisition.ensemble_size = args.ensemble_size;
            acquisition.delete_count = args.delete_count;
            let config = LoopConfig {
                query_size: args.k,
                rounds: args.rounds,
                init_size: args.init_size,
                seed: args.seed,
                model: args.model.into(),
                acquisition,
                ft: FtTrainConfig {
                    embedding_dim: args.dim,
                    epochs: args.epochs,
                    initial_lr: args.lr,
                    ..FtTrainConfig::default()
                },
            };
            commands::cmd_run(&args.corpus, args.num_classes, &config, &args.out)
        }
        Command::Sweep { plan } => commands::cmd_sweep(&plan),
        Command::Diagnose(kind) => match kind {
            DiagnoseCommand::ClassBias { log, corpus, out } => {
                commands::cmd_diagnose_class_bias(&log, corpus.as_deref(), &out)
            }
            DiagnoseCommand::Stability { log, out } => {
                commands::cmd_diagnose_stability(&log, &out)
            }
            DiagnoseCommand::Calibration { log, corpus, out } => {
                commands::cmd_diagnose_calibration(&log, corpus.as_deref(), &out)
            }
            DiagnoseCommand::Curves { log, out_json, out_csv } => {
                commands::cmd_diagnose_curves(&log, &out_json, &out_csv)
            }
        },
        Command::SvmOverlap { log, corpus, svm_c, svm_tol, out } => {
            let svm = SvmConfig { c: svm_c, tol: svm_tol, ..SvmConfig::default() };
            commands::cmd_svm_overlap(&log, corpus.as_deref(), &svm, &out)
        }
        Command::ExportSurrogate { log, corpus, out } => {
            commands::cmd_export_surrogate(&log, corpus.as_deref(), &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("al: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
