use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use newstopics::{DtmModel, LdaModel, Vocabulary};
use newstopics_cli::workspace::{Manifest, LOCK};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus_200.jsonl")
}

struct Run {
    dir: tempfile::TempDir,
    config: PathBuf,
}

impl Run {
    /// A workspace under a fresh temp dir with a small, fast config.
    fn new(extra: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let config = dir.path().join("run.toml");
        let text = format!(
            "[corpus]\npath = {:?}\n\n[train]\ntopics = 4\niterations = 60\nburn_in = 20\nthin = 10\n{extra}",
            fixture().display().to_string()
        );
        std::fs::write(&config, text).unwrap();
        Run { dir, config }
    }

    fn ws(&self) -> PathBuf {
        self.dir.path().join("ws")
    }

    fn cmd(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_newstopics"))
            .arg("--workspace")
            .arg(self.ws())
            .arg("--config")
            .arg(&self.config)
            .args(args)
            .env("RUST_LOG", "info")
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.cmd(args);
        let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
        assert!(out.status.success(), "{args:?}: {stderr}");
        stderr
    }

    fn fails(&self, args: &[&str], code: i32) -> String {
        let out = self.cmd(args);
        let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
        assert_eq!(out.status.code(), Some(code), "{args:?}: {stderr}");
        stderr
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.ws().join(name)).unwrap()
    }
}

#[test]
fn ingest_logs_counts() {
    let run = Run::new("");
    let log = run.ok(&["ingest"]);
    assert!(log.contains("200 loaded"), "{log}");
    assert!(log.contains("175 retained"), "{log}");
    let manifest: Manifest = serde_json::from_str(&run.read("manifest.json")).unwrap();
    for name in ["corpus.jsonl", "timeline.csv", "slices.json", "stats.json"] {
        assert!(manifest.artifacts.contains_key(name), "{name}");
    }
    assert_eq!(run.read("timeline.csv").lines().count(), 423);
}

#[test]
fn validation_errors_exit_one_before_any_io() {
    let run = Run::new("");
    for args in [
        &["ingest", "--categories", ""][..],
        &["ingest", "--anchor-day", "40"],
        &["ingest", "--first-start", "2020-01-18"],
        &["train", "--topics", "1"],
        &["train", "--k-sweep", "5,1"],
        &["train", "--burn-in", "60"],
        &["train", "--kappa", "-1"],
        &["preprocess", "--no-above", "1.5"],
        &["report", "--top-n", "1"],
        &["plot", "--width", "0"],
        &["train", "--mode", "sideways"],
    ] {
        let err = run.fails(args, 1);
        assert!(!err.is_empty());
        assert!(!run.ws().exists(), "{args:?} touched the workspace");
    }
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[train]\ntopicz = 3\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_newstopics"))
        .args(["--config", bad.to_str().unwrap(), "--workspace"])
        .arg(dir.path().join("ws"))
        .arg("ingest")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_prerequisites_name_the_subcommand() {
    let run = Run::new("");
    let err = run.fails(&["preprocess"], 2);
    assert!(err.contains("newstopics ingest"), "{err}");
    run.ok(&["ingest"]);
    let err = run.fails(&["train"], 2);
    assert!(err.contains("newstopics preprocess"), "{err}");
    run.ok(&["preprocess"]);
    let err = run.fails(&["report"], 2);
    assert!(err.contains("newstopics train"), "{err}");
    let err = run.fails(&["plot"], 2);
    assert!(err.contains("newstopics report"), "{err}");
    let err = run.fails(&["ingest", "--corpus", "/no/such/file.jsonl"], 2);
    assert!(err.contains("/no/such/file.jsonl"), "{err}");
}

#[test]
fn stale_and_modified_artifacts_are_rejected() {
    let run = Run::new("");
    run.ok(&["ingest"]);
    run.ok(&["preprocess"]);
    run.ok(&["ingest", "--categories", "inrikes"]);
    let err = run.fails(&["train"], 2);
    assert!(err.contains("stale") && err.contains("newstopics preprocess"), "{err}");

    run.ok(&["preprocess"]);
    let bow = run.ws().join("bow.jsonl");
    let mut text = std::fs::read_to_string(&bow).unwrap();
    text.push('\n');
    std::fs::write(&bow, text).unwrap();
    let err = run.fails(&["train"], 2);
    assert!(err.contains("modified"), "{err}");
}

#[test]
fn concurrent_runs_are_locked_out() {
    let run = Run::new("");
    run.ok(&["ingest"]);
    std::fs::write(run.ws().join(LOCK), "").unwrap();
    let err = run.fails(&["preprocess"], 2);
    assert!(err.contains("locked"), "{err}");
    std::fs::remove_file(run.ws().join(LOCK)).unwrap();
    run.ok(&["preprocess"]);
    assert!(!run.ws().join(LOCK).exists());
}

#[test]
fn rerunning_ingest_keeps_the_manifest() {
    let run = Run::new("");
    run.ok(&["ingest"]);
    let first = run.read("manifest.json");
    run.ok(&["ingest"]);
    assert_eq!(run.read("manifest.json"), first);
}

#[test]
fn vocabulary_drops_singletons_and_respects_the_stoplist() {
    let run = Run::new("");
    run.ok(&["ingest"]);
    run.ok(&["preprocess"]);
    let default = Vocabulary::from_json(&run.read("vocab.json")).unwrap();
    // Every body ends in a unique reference token.
    assert!(default.tokens().iter().all(|t| !t.starts_with("ref")));
    assert!(default.id("och").is_none());
    assert!(default.id("sjukhus").is_some());

    let empty = run.dir.path().join("empty.txt");
    std::fs::write(&empty, "").unwrap();
    run.ok(&["preprocess", "--stoplist", empty.to_str().unwrap()]);
    let unfiltered = Vocabulary::from_json(&run.read("vocab.json")).unwrap();
    assert!(default.tokens().iter().all(|t| unfiltered.id(t).is_some()));
    assert!(unfiltered.len() > default.len());
}

#[test]
fn k_sweep_reports_one_overlap_matrix_per_k() {
    let run = Run::new("k_sweep = [3, 4, 5]\n");
    run.ok(&["ingest"]);
    run.ok(&["preprocess"]);
    run.ok(&["train", "--mode", "static"]);
    run.ok(&["report"]);
    for k in [3usize, 4, 5] {
        let overlap: serde_json::Value = serde_json::from_str(&run.read(&format!("reports/overlap_k{k}.json"))).unwrap();
        let matrix = overlap["matrix"].as_array().unwrap();
        assert_eq!(matrix.len(), k);
        for (i, row) in matrix.iter().enumerate() {
            assert_eq!(row[i].as_f64(), Some(1.0));
        }
        assert_eq!(run.read(&format!("reports/intertopic_k{k}.csv")).lines().count(), k + 1);
    }
    run.ok(&["plot"]);
    for k in [3, 4, 5] {
        assert!(run.ws().join(format!("figures/intertopic_k{k}.svg")).exists());
    }
    assert!(!run.ws().join("figures/trajectories_topic00.svg").exists());
}

#[test]
fn twenty_topics_and_twelve_slices() {
    let run = Run::new("");
    run.ok(&["ingest"]);
    run.ok(&["preprocess"]);
    run.ok(&["train", "--topics", "20", "--mode", "static"]);
    let topics: serde_json::Value = serde_json::from_str(&run.read("models/topics_k20.json")).unwrap();
    assert_eq!(topics.as_array().unwrap().len(), 20);
    run.ok(&["train", "--topics", "20", "--mode", "dtm"]);
    let dtm = DtmModel::from_json(&run.read("models/dtm_k20.json")).unwrap();
    assert_eq!(dtm.num_slices(), 12);
    assert_eq!(dtm.beta.len(), 12);
    assert_eq!(dtm.topics(), 20);

    run.ok(&["report", "--topics", "20", "--k-sweep", "20"]);
    let csv = run.read("reports/trajectories.csv");
    assert!(csv.starts_with("topic,word,slice_start,probability\n"));
    assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 4));
    run.ok(&["plot"]);
    assert!(run.ws().join("figures/trajectories_topic19.svg").exists());
    assert!(run.ws().join("figures/timeline.svg").exists());
}

#[test]
fn single_slice_dtm_matches_static_model() {
    let run = Run::new("");
    run.ok(&["ingest", "--n-slices", "1"]);
    run.ok(&["preprocess"]);
    run.ok(&["--seed", "11", "train", "--mode", "static"]);
    run.ok(&["--seed", "11", "train", "--mode", "dtm"]);
    let lda = LdaModel::from_json(&run.read("models/lda_k4.json")).unwrap();
    let dtm = DtmModel::from_json(&run.read("models/dtm_k4.json")).unwrap();
    assert_eq!(dtm.num_slices(), 1);
    assert_eq!(dtm.beta[0], lda.beta);
    assert_eq!(dtm.theta[0], lda.theta);
}

#[test]
fn flags_override_the_config() {
    let run = Run::new("");
    run.ok(&["ingest"]);
    run.ok(&["preprocess"]);
    run.ok(&["train", "--topics", "3"]);
    assert!(run.ws().join("models/lda_k3.json").exists());
    assert!(!run.ws().join("models/lda_k4.json").exists());
    let a = run.read("models/lda_k3.json");
    run.ok(&["--seed", "99", "train", "--topics", "3"]);
    assert_ne!(run.read("models/lda_k3.json"), a);
    let model = LdaModel::from_json(&run.read("models/lda_k3.json")).unwrap();
    assert_eq!(model.hyper.seed, 99);
}
