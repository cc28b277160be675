//! End-to-end tests of the `homograph` binary: exit codes, output shapes,
//! schema-mismatch diagnostics, and byte-identical reproducibility.

use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn homograph() -> Command {
    Command::new(env!("CARGO_BIN_EXE_homograph"))
}

/// Runs the command and returns (exit code, stdout, stderr).
fn run(cmd: &mut Command) -> (i32, String, String) {
    let output = cmd.output().expect("binary runs");
    (
        output.status.code().expect("exit code"),
        String::from_utf8(output.stdout).expect("utf-8 stdout"),
        String::from_utf8(output.stderr).expect("utf-8 stderr"),
    )
}

fn parse_json(text: &str) -> Value {
    serde_json::from_str(text).expect("valid JSON")
}

#[test]
fn ssim_identity_pair_reports_unity() {
    let (code, stdout, _) = run(homograph().args(["ssim", "example.com", "example.com"]));
    assert_eq!(code, 0);
    let report = parse_json(&stdout);
    assert_eq!(report["mean_ssim"], 1.0);
    assert_eq!(report["char_diff_ratio"], 0.0);
    let per_char = report["per_char_ssim"].as_array().unwrap();
    assert_eq!(per_char.len(), "example.com".chars().count());
    assert!(per_char.iter().all(|v| v == 1.0));
    assert!(report["diff_positions"].as_array().unwrap().is_empty());
    assert!(report["config_digest"].as_str().unwrap().len() == 64);
    assert!(report["tool_version"].as_str().is_some());
}

#[test]
fn ssim_length_mismatch_reports_zero() {
    let (code, stdout, _) = run(homograph().args(["ssim", "abc", "abcd"]));
    assert_eq!(code, 0);
    let report = parse_json(&stdout);
    assert_eq!(report["mean_ssim"], 0.0);
    assert!(report["per_char_ssim"].as_array().unwrap().is_empty());
    assert!(report["char_diff_ratio"].is_null());
}

#[test]
fn ssim_decodes_punycode_unless_raw() {
    let (code, stdout, _) = run(homograph().args(["ssim", "xn--ggle-0qaa.com", "google.com"]));
    assert_eq!(code, 0);
    let report = parse_json(&stdout);
    assert_eq!(report["candidate"], "gõõgle.com");
    let mean = report["mean_ssim"].as_f64().unwrap();
    assert!(mean > 0.0 && mean < 1.0);

    // --raw compares the typed strings; the lengths differ, so the mean
    // collapses to zero.
    let (code, stdout, _) =
        run(homograph().args(["ssim", "--raw", "xn--ggle-0qaa.com", "google.com"]));
    assert_eq!(code, 0);
    let report = parse_json(&stdout);
    assert_eq!(report["candidate"], "xn--ggle-0qaa.com");
    assert_eq!(report["mean_ssim"], 0.0);
}

#[test]
fn usage_errors_exit_one() {
    let (code, _, _) = run(homograph().args(["ssim", "a", "b", "--bogus-flag"]));
    assert_eq!(code, 1, "unknown flag");

    let (code, _, _) = run(homograph().arg("frobnicate"));
    assert_eq!(code, 1, "unknown subcommand");

    let (code, _, _) = run(&mut homograph());
    assert_eq!(code, 1, "missing subcommand");

    let (code, _, stderr) = run(homograph().args([
        "featurize", "--corpus", "x.jsonl", "--mode", "bigram", "--output", "x.csv",
    ]));
    assert_eq!(code, 1, "unknown mode");
    assert!(stderr.contains("usage error"), "stderr: {stderr}");

    let (code, _, stderr) = run(homograph().args([
        "train", "--corpus", "x.jsonl", "--output", "x.json", "--algo", "perceptron",
    ]));
    assert_eq!(code, 1, "unknown algorithm");
    assert!(stderr.contains("usage error"), "stderr: {stderr}");

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, "{\"bitmap_sid\": 32}").unwrap();
    let (code, _, stderr) = run(homograph()
        .args(["--config", config.to_str().unwrap(), "ssim", "a.com", "a.com"]));
    assert_eq!(code, 1, "unknown config key");
    assert!(stderr.contains("bitmap_sid"), "stderr: {stderr}");
}

#[test]
fn help_and_version_exit_zero() {
    let (code, stdout, _) = run(homograph().arg("--help"));
    assert_eq!(code, 0);
    for subcommand in ["generate", "featurize", "train", "predict", "evaluate", "analyze", "ssim"]
    {
        assert!(stdout.contains(subcommand), "help lists {subcommand}");
    }
    let (code, _, _) = run(homograph().arg("--version"));
    assert_eq!(code, 0);
}

#[test]
fn missing_input_files_exit_two() {
    let (code, _, stderr) =
        run(homograph().args(["predict", "--model", "/nonexistent/model.json", "a", "b"]));
    assert_eq!(code, 2);
    assert!(stderr.contains("/nonexistent/model.json"), "stderr: {stderr}");

    let (code, _, stderr) =
        run(homograph().args(["evaluate", "--corpus", "/nonexistent/corpus.jsonl"]));
    assert_eq!(code, 2);
    assert!(stderr.contains("/nonexistent/corpus.jsonl"), "stderr: {stderr}");
}

/// Generates a small fixed corpus into `dir` and returns its path.
fn generate_small_corpus(dir: &Path) -> std::path::PathBuf {
    let corpus = dir.join("corpus.jsonl");
    let (code, _, stderr) = run(homograph().args([
        "generate",
        "--output",
        corpus.to_str().unwrap(),
        "--homographs-per-brand",
        "3",
        "--nonhomographs-per-brand",
        "3",
        "--max-substitutions",
        "3",
        "--seed",
        "21",
    ]));
    assert_eq!(code, 0, "generate failed: {stderr}");
    corpus
}

#[test]
fn pipeline_generates_featurizes_trains_and_predicts() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_small_corpus(dir.path());

    // The corpus leads with a metadata line stamping version and digest.
    let text = std::fs::read_to_string(&corpus).unwrap();
    let first = parse_json(text.lines().next().unwrap());
    assert!(first["_meta"]["tool_version"].as_str().is_some());
    assert_eq!(first["_meta"]["config_digest"].as_str().unwrap().len(), 64);
    let samples = text.lines().count() - 1;
    assert!(samples >= 400, "corpus has {samples} samples");

    // Same seed, same bytes.
    let again = dir.path().join("again.jsonl");
    let (code, _, _) = run(homograph().args([
        "generate",
        "--output",
        again.to_str().unwrap(),
        "--homographs-per-brand",
        "3",
        "--nonhomographs-per-brand",
        "3",
        "--max-substitutions",
        "3",
        "--seed",
        "21",
    ]));
    assert_eq!(code, 0);
    assert_eq!(
        std::fs::read(&corpus).unwrap(),
        std::fs::read(&again).unwrap(),
        "regenerated corpus is byte-identical"
    );

    // Featurize: comment header then one CSV row per sample.
    let features = dir.path().join("features.csv");
    let (code, _, stderr) = run(homograph().args([
        "featurize",
        "--corpus",
        corpus.to_str().unwrap(),
        "--output",
        features.to_str().unwrap(),
    ]));
    assert_eq!(code, 0, "featurize failed: {stderr}");
    let csv = std::fs::read_to_string(&features).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# tool_version:"));
    assert!(lines.next().unwrap().starts_with("# config_digest:"));
    assert!(lines.next().unwrap().starts_with("# schema_digest:"));
    let header = lines.next().unwrap();
    assert!(header.starts_with("ssim,"), "combined puts the ssim column first");
    assert!(header.ends_with(",label"));
    assert_eq!(lines.count(), samples);

    // Train a deterministic single tree on the full corpus.
    let model = dir.path().join("model.json");
    let (code, _, stderr) = run(homograph().args([
        "train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--output",
        model.to_str().unwrap(),
        "--algo",
        "decision_tree",
    ]));
    assert_eq!(code, 0, "train failed: {stderr}");
    let model_json = parse_json(&std::fs::read_to_string(&model).unwrap());
    assert!(model_json["tool_version"].as_str().is_some());
    assert_eq!(model_json["config_digest"].as_str().unwrap().len(), 64);

    // Predict on explicit pairs: a metadata line, then one line per pair,
    // with Punycode decoded before scoring.
    let (code, stdout, stderr) = run(homograph().args([
        "predict",
        "--model",
        model.to_str().unwrap(),
        "xn--ggle-0qaa.com",
        "google.com",
        "example.com",
        "example.com",
    ]));
    assert_eq!(code, 0, "predict failed: {stderr}");
    let lines: Vec<Value> = stdout.lines().map(parse_json).collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0]["_meta"]["model_schema_digest"].as_str().unwrap().len(), 64);
    assert_eq!(lines[1]["candidate"], "gõõgle.com");
    for line in &lines[1..] {
        let prediction = line["prediction"].as_u64().unwrap();
        assert!(prediction <= 1);
        let score = line["score"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&score));
        let label = line["label"].as_str().unwrap();
        assert!(label == "homograph" || label == "non_homograph");
    }

    // Predict over a whole corpus: one line per sample plus metadata.
    let (code, stdout, _) = run(homograph().args([
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().count(), samples + 1);

    // An odd number of positional names cannot form pairs.
    let (code, _, _) = run(homograph().args([
        "predict", "--model", model.to_str().unwrap(), "lonely.com",
    ]));
    assert_eq!(code, 1);

    // Asking for a different feature mode than the model was trained with
    // is a schema mismatch, as is changing the render configuration.
    let (code, _, stderr) = run(homograph().args([
        "predict", "--model", model.to_str().unwrap(), "--mode", "ssim", "a.com", "b.com",
    ]));
    assert_eq!(code, 2);
    assert!(stderr.contains("schema mismatch"), "stderr: {stderr}");

    let (code, _, stderr) = run(homograph().args([
        "predict", "--model", model.to_str().unwrap(), "--bitmap-side", "32", "a.com", "b.com",
    ]));
    assert_eq!(code, 2);
    assert!(stderr.contains("schema mismatch"), "stderr: {stderr}");
}

#[test]
fn evaluate_and_analyze_report_structure() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_small_corpus(dir.path());
    let corpus = corpus.to_str().unwrap();

    let report_path = dir.path().join("evaluate.json");
    let evaluate = |path: &Path| {
        let (code, _, stderr) = run(homograph().args([
            "evaluate",
            "--corpus",
            corpus,
            "--algo",
            "decision_tree",
            "--output",
            path.to_str().unwrap(),
        ]));
        assert_eq!(code, 0, "evaluate failed: {stderr}");
    };
    evaluate(&report_path);
    let report = parse_json(&std::fs::read_to_string(&report_path).unwrap());
    let rows = report["rows"].as_array().unwrap();
    let modes: Vec<&str> = rows.iter().map(|r| r["mode"].as_str().unwrap()).collect();
    assert_eq!(modes, ["ssim", "unigram", "combined"]);
    for row in rows {
        assert_eq!(row["algorithm"], "decision_tree");
        let acc = row["metrics"]["acc"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&acc));
    }
    assert_eq!(report["samples"].as_u64().unwrap() as usize, 432);

    // Re-running the same evaluation writes the same bytes.
    let second = dir.path().join("evaluate-again.json");
    evaluate(&second);
    assert_eq!(
        std::fs::read(&report_path).unwrap(),
        std::fs::read(&second).unwrap(),
        "re-evaluated report is byte-identical"
    );

    // Table rendering of the same report.
    let (code, stdout, _) = run(homograph().args([
        "--format", "table", "evaluate", "--corpus", corpus, "--algo", "decision_tree",
    ]));
    assert_eq!(code, 0);
    assert!(stdout.contains("configuration"));
    assert!(stdout.contains("combined / decision_tree"));

    // Analyze: ten bins conserving the corpus, six error listings (both
    // directions of three similarity ranges), and the plottable CSV.
    let analysis_path = dir.path().join("analysis.json");
    let figure = dir.path().join("figure.csv");
    let (code, _, stderr) = run(homograph().args([
        "analyze",
        "--corpus",
        corpus,
        "--algo",
        "decision_tree",
        "--output",
        analysis_path.to_str().unwrap(),
        "--figure-csv",
        figure.to_str().unwrap(),
    ]));
    assert_eq!(code, 0, "analyze failed: {stderr}");
    let analysis = parse_json(&std::fs::read_to_string(&analysis_path).unwrap());
    for scheme in ["equal_count_bins", "equal_range_bins"] {
        let bins = analysis[scheme]["bins"].as_array().unwrap();
        assert_eq!(bins.len(), 10, "{scheme}");
        let total: u64 = bins.iter().map(|b| b["sample_count"].as_u64().unwrap()).sum();
        assert_eq!(total, 432, "{scheme} conserves the corpus");
    }
    let error_reports = analysis["error_reports"].as_array().unwrap();
    assert_eq!(error_reports.len(), 6);
    let groups: Vec<&str> =
        error_reports.iter().map(|r| r["group"].as_str().unwrap()).collect();
    assert_eq!(groups, ["low", "low", "mid", "mid", "high", "high"]);

    let csv = std::fs::read_to_string(&figure).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# tool_version:"));
    assert!(lines.next().unwrap().starts_with("# config_digest:"));
    assert_eq!(lines.next().unwrap(), "bin_index,approach,accuracy");
    assert_eq!(lines.count(), 30, "ten bins times three approaches");
}

/// The flagship comparison at corpus scale: 100-bag Bagging over five
/// stratified folds must rank the combined features strictly above either
/// single-feature approach on accuracy.
#[test]
fn evaluate_ranks_combined_features_first_at_scale() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    let (code, _, stderr) = run(homograph().args([
        "generate", "--output", corpus.to_str().unwrap(), "--seed", "7",
    ]));
    assert_eq!(code, 0, "generate failed: {stderr}");

    let (code, stdout, stderr) = run(homograph().args([
        "evaluate",
        "--corpus",
        corpus.to_str().unwrap(),
        "--modes",
        "ssim,unigram,combined",
        "--algo",
        "bagging",
        "-k",
        "5",
        "--seed",
        "7",
    ]));
    assert_eq!(code, 0, "evaluate failed: {stderr}");
    let report = parse_json(&stdout);
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let acc = |i: usize| rows[i]["metrics"]["acc"].as_f64().unwrap();
    let (ssim, unigram, combined) = (acc(0), acc(1), acc(2));
    assert!(
        combined > ssim && combined > unigram,
        "combined {combined} must beat ssim {ssim} and unigram {unigram}"
    );
    for (i, acc) in [ssim, unigram, combined].iter().enumerate() {
        assert!(*acc >= 0.85, "row {i} accuracy {acc}");
    }
}
