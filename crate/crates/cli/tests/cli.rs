use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn ontic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ontic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn models_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn toy_model() -> String {
    models_dir().join("toy.json").display().to_string()
}

fn json_out(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_model(dir: &tempfile::TempDir, name: &str, preparations: &str) -> String {
    let text = format!(
        r#"{{
  "atoms": ["a", "b", "c"],
  "preparations": {preparations},
  "experiments": [{{"name": "E", "outcomes": ["1", "2"], "response": [[1, 0], [0, 1], [0, 1]]}}]
}}"#
    );
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn toy_model_verifies() {
    let out = ontic(&["verify", "--model", &toy_model()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = json_out(&out);
    assert_eq!(report["pass"], true);
    assert_eq!(report["tool"], "ontic");
    assert_eq!(report["config"]["tol"], 1e-9);
    assert_eq!(report["puc"]["worst_residual"], 0.0);
    assert_eq!(report["nca"]["holds"], false);
}

#[test]
fn independent_pairs_fail_verification() {
    let path = models_dir().join("independent.json").display().to_string();
    let out = ontic(&["verify", "--model", &path]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("FAIL quantum consistency"));
}

#[test]
fn unnormalized_density_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_model(
        &dir,
        "bad.json",
        r#"{"0,0": [0.5, 0.4, 0], "0,+": [1, 0, 0], "+,0": [0, 1, 0], "+,+": [0, 0, 1]}"#,
    );
    let out = ontic(&["verify", "--model", &path]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("normalization"), "{err}");
    assert!(err.contains("0,0"), "{err}");
}

#[test]
fn syntax_error_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\n  \"atoms\": [\"a\",,]\n}").unwrap();
    let out = ontic(&["verify", "--model", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn puc_violation_names_the_atom() {
    let dir = tempfile::tempdir().unwrap();
    // Atom c carries mass under 00 and ++ but not under 0+ and +0.
    let path = write_model(
        &dir,
        "puc.json",
        r#"{"0,0": [0.5, 0, 0.5], "0,+": [1, 0, 0], "+,0": [0, 1, 0], "+,+": [0, 0.5, 0.5]}"#,
    );
    for cmd in ["verify", "puc-check"] {
        let out = ontic(&[cmd, "--model", &path]);
        assert_eq!(out.status.code(), Some(1), "{cmd}");
        assert!(stderr(&out).contains("at atom c"), "{}", stderr(&out));
        assert_eq!(json_out(&out)["puc"]["worst"]["atom"], "c");
    }
}

#[test]
fn distances_on_toy_model() {
    let out = ontic(&["distances", "--model", &toy_model(), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    let critical = rows.iter().find(|r| &r[0] == "0,0" && &r[1] == "+,+").unwrap();
    assert_eq!(&critical[2], "1");
}

#[test]
fn toy_search_writes_models() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("found");
    let out = ontic(&["toy-search", "--require-nca-violation", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    let count = summary["count"].as_u64().unwrap();
    assert!(count >= 1);
    for m in summary["models"].as_array().unwrap() {
        assert_eq!(m["overlaps_p00_with_p0p_and_pp0"], true);
        let file = out_dir.join(m["file"].as_str().unwrap());
        assert!(file.exists());
    }
    // A written model verifies on its own.
    let first = out_dir.join("model-001.json");
    let verify = ontic(&["verify", "--model", first.to_str().unwrap()]);
    assert_eq!(verify.status.code(), Some(0));
    assert!(out_dir.join("grids.txt").exists());
}

#[test]
fn impossible_search_reports_zero() {
    let out = ontic(&["toy-search", "--require-critical-overlap"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_out(&out)["count"], 0);
}

#[test]
fn game_output_is_byte_identical() {
    let args = ["game-sim", "--n", "5", "--alpha", "0", "--trials", "100000", "--seed", "11"];
    let a = ontic(&args);
    let b = ontic(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let report = json_out(&a);
    assert_eq!(report["config"]["seed"], 11);
    let p = report["result"]["p_correct"].as_f64().unwrap();
    let se = report["result"]["std_error"].as_f64().unwrap();
    assert!((p - 0.9).abs() <= 3.0 * se);
}

#[test]
fn game_rejects_bad_parameters() {
    assert_eq!(ontic(&["game-sim", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(ontic(&["game-sim", "--n", "1"]).status.code(), Some(2));
    assert_eq!(ontic(&["game-sim", "--alpha", "2"]).status.code(), Some(2));
    assert_eq!(ontic(&["game-sim", "--format", "xml"]).status.code(), Some(2));
}

#[test]
fn game_bounds_include_n_epsilon() {
    let out = ontic(&["game-sim", "--n", "3", "--trials", "1000", "--epsilon", "1e-6"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_out(&out)["extendibility"][0]["n_epsilon"], 7);
}

#[test]
fn bounds_table_rows_and_flags() {
    let out = ontic(&["bounds", "--epsilon", "1e-8,1e-6,0.2,0.5", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# ontic "));
    assert!(text.lines().next().unwrap().contains("seed=0"));
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let eps: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(eps, [1e-8, 1e-6, 0.2, 0.5]);
    assert_eq!(&rows[1][1], "7");
    assert!((rows[1][2].parse::<f64>().unwrap() - 0.7929).abs() < 1e-4);
    assert!((rows[1][3].parse::<f64>().unwrap() - 0.8110).abs() < 1e-4);
    assert!(rows[3][4].starts_with("out_of_domain"));
}

#[test]
fn theorem_check_over_a_sequence() {
    let out = ontic(&["theorem-check", "--model", &toy_model(), "--model", &toy_model()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = json_out(&out);
    assert_eq!(report["corollary"]["report"]["status"], "holds");
    assert_eq!(report["corollary"]["limiting_lower_bound"], 1.0);
}

#[test]
fn out_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = ontic(&["bounds", "--epsilon", "1e-6", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(report["rows"][0]["bound"]["n_epsilon"], 7);
}

#[test]
fn missing_file_is_an_input_error() {
    let out = ontic(&["verify", "--model", "/nonexistent/model.json"]);
    assert_eq!(out.status.code(), Some(2));
}
