//! End-to-end runs of the `topicvar` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_topicvar"));
    c.env_remove("TOPICVAR_LOG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn topicvar")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn error_line(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr is empty");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not JSON ({e}): {line}"))
}

fn read_csv(p: &Path) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(p).unwrap();
    r.records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).to_str().unwrap().to_string()
    }

    fn write(&self, name: &str, text: &str) -> String {
        std::fs::write(self.path(name), text).unwrap();
        self.s(name)
    }
}

const WATER: [&str; 6] = ["river", "water", "boat", "fish", "lake", "stream"];
const MONEY: [&str; 6] = ["stock", "market", "money", "price", "trade", "share"];

/// 40 documents alternating between two word groups, one per line.
fn two_theme_docs() -> String {
    let mut text = String::new();
    for d in 0..40usize {
        let words = if d % 2 == 0 { WATER } else { MONEY };
        let doc: Vec<&str> = (0..12).map(|i| words[(d * 5 + i * 7) % 6]).collect();
        text.push_str(&doc.join(" "));
        text.push('\n');
    }
    text
}

fn preprocess_and_train(ws: &Workspace) -> String {
    let docs = ws.write("docs.txt", &two_theme_docs());
    ok(&["preprocess", "--input", &docs, "--out", &ws.s("corpus.bin")]);
    ok(&[
        "train",
        "--corpus",
        &ws.s("corpus.bin"),
        "--topics",
        "2",
        "--iters",
        "200",
        "--burnin",
        "100",
        "--thin",
        "10",
        "--seed",
        "3",
        "--top-n",
        "4",
        "--out",
        &ws.s("run"),
    ]);
    ws.s("run")
}

#[test]
fn pipeline_from_raw_text_to_scores() {
    let ws = Workspace::new();
    let run_dir = preprocess_and_train(&ws);

    let pre =
        serde_json::from_str::<Value>(&std::fs::read_to_string(ws.path("corpus.bin.manifest.json")).unwrap()).unwrap();
    assert_eq!(pre["command"], "preprocess");

    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(ws.path("run/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "train");
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["config"]["collected_samples"], 10);
    assert_eq!(manifest["config"]["vocab_size"], 12);
    let outs: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["path"].as_str().unwrap())
        .collect();
    for f in ["phi.bin", "summary.bin", "topics.csv"] {
        assert!(outs.contains(&f), "{f} missing from {outs:?}");
    }

    // each topic's top words come from one theme
    let topics = read_csv(&ws.path("run/topics.csv"));
    assert_eq!(topics[0], ["topic", "rank", "word_id", "term", "probability"]);
    assert_eq!(topics.len(), 1 + 2 * 4);
    for k in ["0", "1"] {
        let terms: Vec<&str> = topics[1..]
            .iter()
            .filter(|r| r[0] == k)
            .map(|r| r[3].as_str())
            .collect();
        assert!(
            terms.iter().all(|t| WATER.contains(t)) || terms.iter().all(|t| MONEY.contains(t)),
            "mixed topic {terms:?}"
        );
    }

    ok(&[
        "score",
        "--run",
        &run_dir,
        "--doc-units",
        "--dataset",
        "toy",
        "--out",
        &ws.s("scores.csv"),
    ]);
    let scores = read_csv(&ws.path("scores.csv"));
    assert_eq!(
        scores[0],
        [
            "dataset",
            "topic_id",
            "variability",
            "stability",
            "mu",
            "sigma",
            "pmi",
            "npmi",
            "coherence"
        ]
    );
    assert_eq!(scores.len(), 3);
    for row in &scores[1..] {
        assert_eq!(row[0], "toy");
        for v in &row[2..] {
            assert!(v.parse::<f64>().unwrap().is_finite());
        }
    }
    assert!(ws.path("scores.csv.manifest.json").exists());

    ok(&[
        "score",
        "--run",
        &run_dir,
        "--metrics",
        "npmi,variability",
        "--out",
        &ws.s("two.csv"),
    ]);
    assert_eq!(
        read_csv(&ws.path("two.csv"))[0],
        ["dataset", "topic_id", "npmi", "variability"]
    );

    ok(&["export-posterior", "--run", &run_dir, "--out", &ws.s("posterior.csv")]);
    let post = read_csv(&ws.path("posterior.csv"));
    assert_eq!(post[0], ["doc", "topic", "mu", "sigma", "cv"]);
    assert_eq!(post.len(), 1 + 40 * 2);
}

#[test]
fn score_refuses_a_modified_run() {
    let ws = Workspace::new();
    let run_dir = preprocess_and_train(&ws);
    std::fs::write(ws.path("run/topics.csv"), "topic,rank,word_id,term,probability\n").unwrap();
    let out = run(&["score", "--run", &run_dir, "--out", &ws.s("scores.csv")]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_line(&out);
    assert_eq!(err["error"], "invalid_input");
    assert!(err["message"].as_str().unwrap().contains("topics.csv"));
    assert!(!ws.path("scores.csv").exists());
}

#[test]
fn same_seed_same_bytes() {
    let a = Workspace::new();
    let b = Workspace::new();
    preprocess_and_train(&a);
    preprocess_and_train(&b);
    for f in ["run/summary.bin", "run/phi.bin", "run/topics.csv"] {
        assert_eq!(
            std::fs::read(a.path(f)).unwrap(),
            std::fs::read(b.path(f)).unwrap(),
            "{f}"
        );
    }
}

fn ratings_csv() -> String {
    let mut s = String::from("dataset,topic_id,r1,r2,r3\n");
    for d in ["a", "b", "c"] {
        for t in 0..12u32 {
            let base = 1 + (t * 5 + d.len() as u32 * 3) % 4;
            let other = if t % 3 == 0 { base.max(2) - 1 } else { base };
            let third = if t % 4 == 0 { String::new() } else { base.to_string() };
            s.push_str(&format!("{d},{t},{base},{other},{third}\n"));
        }
    }
    s
}

fn mean_ratings() -> Vec<(String, u32, f64)> {
    let text = ratings_csv();
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            let vals: Vec<f64> = r
                .iter()
                .skip(2)
                .filter(|c| !c.is_empty())
                .map(|c| c.parse().unwrap())
                .collect();
            (
                r[0].to_string(),
                r[1].parse().unwrap(),
                vals.iter().sum::<f64>() / vals.len() as f64,
            )
        })
        .collect()
}

#[test]
fn evaluate_identical_scores_gives_r_one() {
    let ws = Workspace::new();
    let ratings = ws.write("ratings.csv", &ratings_csv());
    let mut scores = String::from("dataset,topic_id,oracle,flipped\n");
    for (d, t, m) in mean_ratings() {
        scores.push_str(&format!("{d},{t},{m:?},{:?}\n", 10.0 - 2.0 * m));
    }
    let scores = ws.write("scores.csv", &scores);
    ok(&[
        "evaluate",
        "--scores",
        &scores,
        "--ratings",
        &ratings,
        "--out",
        &ws.s("eval.csv"),
    ]);
    let rows = read_csv(&ws.path("eval.csv"));
    assert_eq!(rows[0], ["metric", "pearson_r", "n", "error"]);
    assert_eq!(rows[1][0], "oracle");
    assert_eq!(rows[1][1].parse::<f64>().unwrap(), 1.0);
    assert_eq!(rows[1][2], "36");
    assert_eq!(rows[2][1].parse::<f64>().unwrap(), -1.0);

    ok(&["agreement", "--ratings", &ratings, "--out", &ws.s("alpha.csv")]);
    let alpha = read_csv(&ws.path("alpha.csv"));
    assert_eq!(alpha[0], ["dataset", "alpha", "items", "error"]);
    assert_eq!(alpha.len(), 4);
    for row in &alpha[1..] {
        let a: f64 = row[1].parse().unwrap();
        assert!(a > 0.5 && a <= 1.0, "{row:?}");
    }

    ok(&[
        "export-scatter",
        "--scores",
        &scores,
        "--ratings",
        &ratings,
        "--out",
        &ws.s("scatter"),
    ]);
    let pts = read_csv(&ws.path("scatter/oracle.csv"));
    assert_eq!(
        pts[0],
        [
            "row",
            "dataset",
            "topic_id",
            "human_mean",
            "metric_value",
            "slope",
            "intercept",
            "r"
        ]
    );
    assert_eq!(pts.len(), 1 + 36 + 1);
    let fit = pts.last().unwrap();
    assert_eq!(fit[0], "fit");
    assert!((fit[5].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    assert!(ws.path("scatter/flipped.csv").exists());
    assert!(ws.path("scatter/manifest.json").exists());
}

/// Three datasets where `signal` tracks the rating and `noise` does not.
fn feature_tables(ws: &Workspace) -> Vec<String> {
    let ratings = mean_ratings();
    ["a", "b", "c"]
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut s = String::from("dataset,topic_id,signal,noise\n");
            for (ds, t, m) in ratings.iter().filter(|r| r.0 == *d) {
                let noise = ((t * 7 + i as u32 * 3) % 11) as f64;
                s.push_str(&format!("{ds},{t},{:?},{noise:?}\n", 0.5 * m + 0.1 * i as f64));
            }
            ws.write(&format!("{d}.csv"), &s)
        })
        .collect()
}

#[test]
fn estimator_commands() {
    let ws = Workspace::new();
    let ratings = ws.write("ratings.csv", &ratings_csv());
    let tables = feature_tables(&ws);

    let mut args = vec!["cross-eval", "--features"];
    args.extend(tables.iter().map(String::as_str));
    let ce_out = ws.s("cross.csv");
    args.extend([
        "--ratings",
        &ratings,
        "--mode",
        "all",
        "--kernel",
        "linear",
        "--out",
        &ce_out,
    ]);
    ok(&args);
    let cells = read_csv(&ws.path("cross.csv"));
    assert_eq!(cells[0], ["test", "train", "pearson_r", "error"]);
    // 6 one-to-one, 3 two-to-one, 3 means
    assert_eq!(cells.len(), 1 + 6 + 3 + 3);
    assert!(cells.iter().any(|r| r[0] == "c" && r[1] == "a+b"));
    for r in &cells[1..] {
        assert!(r[2].parse::<f64>().unwrap() > 0.95, "{r:?}");
    }

    let mut args = vec!["ablate", "--features"];
    args.extend(tables.iter().map(String::as_str));
    let ab_out = ws.s("ablate.csv");
    args.extend(["--ratings", &ratings, "--kernel", "linear", "--out", &ab_out]);
    ok(&args);
    let rows = read_csv(&ws.path("ablate.csv"));
    assert_eq!(rows[0], ["removed_feature", "test", "pearson_r", "full_pearson_r"]);
    assert_eq!(rows.len(), 1 + 2 * 3);
    for r in rows[1..].iter().filter(|r| r[0] == "signal") {
        assert!(r[2].parse::<f64>().unwrap() < r[3].parse::<f64>().unwrap());
    }

    let model = ws.s("model.json");
    ok(&[
        "train-estimator",
        "--features",
        &tables[0],
        &tables[1],
        "--ratings",
        &ratings,
        "--kernel",
        "linear",
        "--out",
        &model,
    ]);
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(m["format_version"], 1);
    assert_eq!(m["kernel"]["type"], "linear");
    assert!(ws.path("model.json.manifest.json").exists());

    ok(&[
        "predict",
        "--model",
        &model,
        "--features",
        &tables[2],
        "--out",
        &ws.s("pred.csv"),
    ]);
    let pred = read_csv(&ws.path("pred.csv"));
    assert_eq!(pred.len(), 13);
    let pred_col = pred[0].iter().position(|h| h == "predicted").expect("predicted column");
    let p: Vec<f64> = pred[1..].iter().map(|r| r[pred_col].parse().unwrap()).collect();
    let truth: Vec<f64> = mean_ratings().iter().filter(|r| r.0 == "c").map(|r| r.2).collect();
    let r = topicvar::evaluation::pearson_r(&p, &truth).unwrap();
    assert!(r > 0.95, "r = {r}");

    // predicting needs the same columns
    let wrong = ws.write("wrong.csv", "dataset,topic_id,signal\nc,0,1.0\nc,1,2.0\n");
    let out = run(&[
        "predict",
        "--model",
        &model,
        "--features",
        &wrong,
        "--out",
        &ws.s("bad.csv"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "feature_mismatch");
    assert!(!ws.path("bad.csv").exists());
}

#[test]
fn errors_are_json_with_exit_codes() {
    let ws = Workspace::new();

    let out = run(&["train"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_line(&out)["error"], "usage");

    let out = run(&["preprocess", "--input", &ws.s("missing.txt"), "--out", &ws.s("c.bin")]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_line(&out);
    assert_eq!(err["error"], "io");
    assert!(err["message"].as_str().unwrap().contains("missing.txt"));

    let docs = ws.write("docs.txt", &two_theme_docs());
    ok(&["preprocess", "--input", &docs, "--out", &ws.s("corpus.bin")]);
    let out = run(&[
        "train",
        "--corpus",
        &ws.s("corpus.bin"),
        "--topics",
        "2",
        "--iters",
        "10",
        "--burnin",
        "10",
        "--out",
        &ws.s("run"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_line(&out)["error"], "invalid_config");
    assert!(!ws.path("run/summary.bin").exists());
    assert!(!ws.path("run/phi.bin").exists());

    let out = run(&[
        "preprocess",
        "--input",
        &docs,
        "--min-count",
        "1000",
        "--out",
        &ws.s("empty.bin"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "empty_corpus");
    assert!(!ws.path("empty.bin").exists());

    let bad = ws.write("bad.csv", "dataset,topic_id,r1\nx,0,9\n");
    let out = run(&["agreement", "--ratings", &bad, "--out", &ws.s("a.csv")]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "format");
}
