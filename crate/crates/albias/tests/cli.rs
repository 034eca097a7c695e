//! Black-box tests of the `al` binary: exit codes, output schemas, and
//! byte-level determinism of every artifact it writes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn al() -> Command {
    Command::new(env!("CARGO_BIN_EXE_al"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = al().args(args).output().expect("spawn al");
    assert!(
        out.status.success(),
        "al {:?} failed\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_err(args: &[&str], expected_code: i32) -> String {
    let out = al().args(args).output().expect("spawn al");
    assert_eq!(
        out.status.code(),
        Some(expected_code),
        "al {:?}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Generate a small corpus directory shared by the tests below.
fn gen_corpus(dir: &Path) -> PathBuf {
    let corpus = dir.join("corpus");
    run_ok(&[
        "gen-synth",
        "--classes", "3",
        "--docs-per-class", "80",
        "--class-vocab", "40",
        "--shared-vocab", "25",
        "--noise", "0.3",
        "--len-min", "5",
        "--len-max", "10",
        "--seed", "11",
        "--out", corpus.to_str().unwrap(),
    ]);
    corpus
}

fn run_flags<'a>(corpus: &'a str, out: &'a str, strategy: &'a str, seed: &'a str) -> Vec<&'a str> {
    vec![
        "run",
        "--corpus", corpus,
        "--num-classes", "3",
        "--model", "ftext",
        "--strategy", strategy,
        "--k", "10",
        "--rounds", "3",
        "--seed", seed,
        "--dim", "12",
        "--epochs", "5",
        "--lr", "0.4",
        "--out", out,
    ]
}

#[test]
fn gen_synth_writes_balanced_splits() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = gen_corpus(dir.path());

    let train = fs::read_to_string(corpus.join("train.csv")).unwrap();
    assert_eq!(train.lines().count(), 240);
    let test = fs::read_to_string(corpus.join("test.csv")).unwrap();
    assert_eq!(test.lines().count(), 48, "one fifth per class");

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(corpus.join("synth.json")).unwrap()).unwrap();
    assert_eq!(meta["train"]["seed"], 11);
    assert_eq!(meta["test"]["seed"], 12);
    assert_eq!(meta["test"]["docs_per_class"], 16);

    // Regenerating with the same seed is byte-identical.
    let again = dir.path().join("again");
    run_ok(&[
        "gen-synth",
        "--classes", "3",
        "--docs-per-class", "80",
        "--class-vocab", "40",
        "--shared-vocab", "25",
        "--noise", "0.3",
        "--len-min", "5",
        "--len-max", "10",
        "--seed", "11",
        "--out", again.to_str().unwrap(),
    ]);
    assert_eq!(
        fs::read(corpus.join("train.csv")).unwrap(),
        fs::read(again.join("train.csv")).unwrap()
    );
}

#[test]
fn runs_are_byte_identical_and_logs_parse() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = gen_corpus(dir.path());
    let corpus_s = corpus.to_str().unwrap();

    let log1 = dir.path().join("a.jsonl");
    let log2 = dir.path().join("b.jsonl");
    run_ok(&run_flags(corpus_s, log1.to_str().unwrap(), "entropy", "3"));
    run_ok(&run_flags(corpus_s, log2.to_str().unwrap(), "entropy", "3"));
    let bytes1 = fs::read(&log1).unwrap();
    assert_eq!(bytes1, fs::read(&log2).unwrap());

    let text = String::from_utf8(bytes1).unwrap();
    let lines: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 5, "header, three rounds, footer");
    assert_eq!(lines[0]["kind"], "header");
    assert_eq!(lines[0]["config"]["acquisition"]["kind"], "entropy");
    assert_eq!(lines[0]["config"]["seed"], 3);
    assert_eq!(lines[1]["kind"], "round");
    assert_eq!(lines[1]["round"], 1);
    assert_eq!(lines[1]["selected"].as_array().unwrap().len(), 10);
    assert_eq!(lines[4]["kind"], "final");
    assert!(lines[4]["final_accuracy"].as_f64().unwrap() > 0.0);
}

#[test]
fn diagnose_and_export_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = gen_corpus(dir.path());
    let corpus_s = corpus.to_str().unwrap();

    let ent1 = dir.path().join("ent1.jsonl");
    let ent2 = dir.path().join("ent2.jsonl");
    let rnd = dir.path().join("rnd.jsonl");
    run_ok(&run_flags(corpus_s, ent1.to_str().unwrap(), "entropy", "1"));
    run_ok(&run_flags(corpus_s, ent2.to_str().unwrap(), "entropy", "2"));
    run_ok(&run_flags(corpus_s, rnd.to_str().unwrap(), "random", "1"));

    // class-bias
    let bias = dir.path().join("bias.json");
    run_ok(&[
        "diagnose", "class-bias",
        "--log", ent1.to_str().unwrap(),
        "--log", rnd.to_str().unwrap(),
        "--out", bias.to_str().unwrap(),
    ]);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&bias).unwrap()).unwrap();
    assert_eq!(v["runs"].as_array().unwrap().len(), 2);
    let max_h = v["max_entropy"].as_f64().unwrap();
    assert!((max_h - 3.0f64.ln()).abs() < 1e-12);
    for run in v["runs"].as_array().unwrap() {
        assert!(run["query_entropy_mean"].as_f64().unwrap() <= max_h + 1e-9);
        assert!(run["sample_entropy"].as_f64().is_some());
    }

    // stability
    let stab = dir.path().join("stab.json");
    run_ok(&[
        "diagnose", "stability",
        "--log", ent1.to_str().unwrap(),
        "--log", ent2.to_str().unwrap(),
        "--log", rnd.to_str().unwrap(),
        "--out", stab.to_str().unwrap(),
    ]);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&stab).unwrap()).unwrap();
    let groups = v["groups"].as_array().unwrap();
    assert_eq!(groups.len(), 2, "same-strategy and cross-strategy pairings");
    for g in groups {
        assert!(g["observed_mean"].as_f64().unwrap() >= 0.0);
        assert!(g["chance_mean"].as_f64().unwrap() > 0.0);
    }

    // calibration
    let cal = dir.path().join("cal.json");
    run_ok(&[
        "diagnose", "calibration",
        "--log", ent1.to_str().unwrap(),
        "--out", cal.to_str().unwrap(),
    ]);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&cal).unwrap()).unwrap();
    for key in ["nll", "brier", "ece", "var_ratio", "mean_entropy", "mean_std"] {
        assert!(
            v["metrics"][key].as_f64().unwrap().is_finite(),
            "missing metric {key}"
        );
    }

    // curves
    let cj = dir.path().join("curves.json");
    let cc = dir.path().join("curves.csv");
    run_ok(&[
        "diagnose", "curves",
        "--log", ent1.to_str().unwrap(),
        "--log", rnd.to_str().unwrap(),
        "--out-json", cj.to_str().unwrap(),
        "--out-csv", cc.to_str().unwrap(),
    ]);
    let csv_text = fs::read_to_string(&cc).unwrap();
    let mut lines = csv_text.lines();
    assert_eq!(lines.next().unwrap(), "fraction_labeled,accuracy,strategy,seed");
    // 2 runs × (3 rounds + final model) points.
    assert_eq!(csv_text.lines().count(), 1 + 2 * 4);

    // svm-overlap
    let svm = dir.path().join("svm.json");
    run_ok(&[
        "svm-overlap",
        "--log", ent1.to_str().unwrap(),
        "--out", svm.to_str().unwrap(),
    ]);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&svm).unwrap()).unwrap();
    assert!(v["support_size"].as_u64().unwrap() > 0);
    let observed = v["stat"]["observed"].as_f64().unwrap();
    assert!((0.0..=100.0).contains(&observed));

    // export-surrogate: deterministic and round-trip loadable
    let surro1 = dir.path().join("surro1");
    let surro2 = dir.path().join("surro2");
    run_ok(&[
        "export-surrogate",
        "--log", ent1.to_str().unwrap(),
        "--out", surro1.to_str().unwrap(),
    ]);
    run_ok(&[
        "export-surrogate",
        "--log", ent1.to_str().unwrap(),
        "--out", surro2.to_str().unwrap(),
    ]);
    assert_eq!(
        fs::read(surro1.join("surrogate.csv")).unwrap(),
        fs::read(surro2.join("surrogate.csv")).unwrap()
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(surro1.join("manifest.json")).unwrap())
            .unwrap();
    // init 10 + 3 rounds × 10 = 40 of 240 documents.
    assert_eq!(manifest["per_id"].as_array().unwrap().len(), 40);
    let ratio = manifest["compression_ratio"].as_f64().unwrap();
    assert!((ratio - 40.0 / 240.0).abs() < 1e-12);
    let surrogate_rows = fs::read_to_string(surro1.join("surrogate.csv")).unwrap();
    assert_eq!(surrogate_rows.lines().count(), 40);
}

#[test]
fn sweep_runs_the_grid_and_reports_intersections() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = gen_corpus(dir.path());
    let out_dir = dir.path().join("runs");
    let plan_path = dir.path().join("plan.toml");
    fs::write(
        &plan_path,
        format!(
            r#"
corpus = "{}"
num_classes = 3
model = "ftext"
strategies = ["entropy", "random"]
seeds = [1, 2]
out_dir = "{}"

[[schedules]]
k = 10
rounds = 3

[ft]
dim = 12
epochs = 5
lr = 0.4
buckets = 4096
"#,
            corpus.display(),
            out_dir.display()
        ),
    )
    .unwrap();

    run_ok(&["sweep", "--plan", plan_path.to_str().unwrap()]);
    for name in [
        "entropy_k10_b3_seed1.jsonl",
        "entropy_k10_b3_seed2.jsonl",
        "random_k10_b3_seed1.jsonl",
        "random_k10_b3_seed2.jsonl",
    ] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }
    let inter: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(out_dir.join("intersections.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(inter["corpus_size"], 240);
    assert!(!inter["groups"].as_array().unwrap().is_empty());

    // A single-threaded sweep produces byte-identical artifacts.
    let out_dir2 = dir.path().join("runs2");
    let plan2 = dir.path().join("plan2.toml");
    fs::write(
        &plan2,
        fs::read_to_string(&plan_path)
            .unwrap()
            .replace(&out_dir.display().to_string(), &out_dir2.display().to_string()),
    )
    .unwrap();
    let out = al()
        .args(["sweep", "--plan", plan2.to_str().unwrap()])
        .env("ALBIAS_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    for name in [
        "entropy_k10_b3_seed1.jsonl",
        "random_k10_b3_seed2.jsonl",
        "intersections.json",
    ] {
        assert_eq!(
            fs::read(out_dir.join(name)).unwrap(),
            fs::read(out_dir2.join(name)).unwrap(),
            "{name} differs between parallel and serial sweeps"
        );
    }
}

#[test]
fn error_categories_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = gen_corpus(dir.path());
    let corpus_s = corpus.to_str().unwrap();

    // Usage: unknown strategy value (clap rejects it).
    let mut args = run_flags(corpus_s, "x.jsonl", "entropy", "1");
    args[8] = "mystery";
    run_err(&args, 2);

    // Compute: the engine rejects a label budget larger than the corpus.
    let mut args = run_flags(corpus_s, "x.jsonl", "entropy", "1");
    args[10] = "500"; // --k
    let stderr = run_err(&args, 4);
    assert!(stderr.contains("exceeds"), "{stderr}");

    // Data: missing corpus directory.
    let args = run_flags("no/such/dir", "x.jsonl", "entropy", "1");
    let stderr = run_err(&args, 3);
    assert!(stderr.contains("data:"), "{stderr}");

    // Data: malformed run log.
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "not json\n").unwrap();
    let stderr = run_err(
        &[
            "diagnose", "stability",
            "--log", bad.to_str().unwrap(),
            "--log", bad.to_str().unwrap(),
            "--out", dir.path().join("o.json").to_str().unwrap(),
        ],
        3,
    );
    assert!(stderr.contains("data:"), "{stderr}");

    // Usage: stability with a single log.
    let log = dir.path().join("one.jsonl");
    run_ok(&run_flags(corpus_s, log.to_str().unwrap(), "entropy", "1"));
    run_err(
        &[
            "diagnose", "stability",
            "--log", log.to_str().unwrap(),
            "--out", dir.path().join("o.json").to_str().unwrap(),
        ],
        2,
    );
}
