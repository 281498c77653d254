//! End-to-end tests that drive the compiled `ffia` binary: argument parsing,
//! stdin/file plumbing, JSON and CSV output shapes, and exit codes.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_ffia");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_on(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(BIN)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary spawns");
    child
        .stdin
        .as_mut()
        .expect("stdin is piped")
        .write_all(stdin.as_bytes())
        .expect("stdin accepts the document");
    child.wait_with_output().expect("binary exits")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    fs::create_dir_all(&dir).expect("scratch dir");
    dir
}

const GF27_CHANNEL: &str = r#"{"p":3,"n":3,"matrix":[[1,1],[22,1]]}"#;

#[test]
fn field_reports_the_element_and_its_matrix() {
    let out = run(&["field", "3", "3", "22"]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert_eq!(doc["p"], json!(3));
    assert_eq!(doc["n"], json!(3));
    assert_eq!(doc["size"], json!(27));
    assert_eq!(doc["modulus"], json!([1, 0, 2, 1]));
    assert_eq!(doc["modulus_poly"], json!("s^3+2s+1"));
    let el = &doc["element"];
    assert_eq!(el["label"], json!(22));
    assert_eq!(el["digits"], json!([2, 1, 1]));
    assert_eq!(el["poly"], json!("2s^2+s+1"));
    assert_eq!(
        el["rep_matrix"],
        json!([[0, 1, 2], [2, 0, 1], [2, 1, 1]]),
        "multiplication-by-22 matrix in high-to-low coordinates"
    );
    assert_eq!(el["minimal_poly"], json!("s^3+2s^2+2s+2"));
    assert_eq!(el["subfield_degree"], json!(3));
    assert_eq!(el["in_base_field"], json!(false));
}

#[test]
fn field_rejects_a_composite_characteristic() {
    let out = run(&["field", "4", "2"]);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("not prime"));
}

#[test]
fn classify_reads_a_channel_from_standard_input() {
    let out = run_on(
        &["xch", "classify"],
        r#"{"p":3,"n":2,"matrix":[[0,0],[0,0]]}"#,
    );
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert_eq!(doc["class"], json!("disconnected"));
    assert_eq!(doc["C"], json!(0));
    assert_eq!(doc["C_linear"], json!(0));
    assert_eq!(doc["case"], json!(3));
    // Keys that only apply to other classes stay out of the document.
    assert!(doc.get("h").is_none());
    assert!(doc.get("structure").is_none());
    assert!(doc.get("conditions").is_none());
}

#[test]
fn construct_verify_simulate_round_trip_through_files() {
    let dir = scratch("round_trip");
    let channel = dir.join("channel.json");
    let scheme = dir.join("scheme.json");
    fs::write(&channel, GF27_CHANNEL).unwrap();

    let out = run(&[
        "xch",
        "construct",
        "--in",
        channel.to_str().unwrap(),
        "--out",
        scheme.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty(), "--out keeps stdout quiet");
    let saved: Value = serde_json::from_str(&fs::read_to_string(&scheme).unwrap()).unwrap();
    assert_eq!(saved["mode"], json!("scalar_p3"));
    assert_eq!(saved["matrix"], json!([[1, 1], [22, 1]]));

    let out = run(&["xch", "verify", "--in", scheme.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    assert_eq!(report["pass"], json!(true));
    assert_eq!(report["mode"], json!("scalar_p3"));
    assert_eq!(report["sum_rate"], json!("4/3"));
    assert_eq!(report["certificates"]["rank_S1"], json!(3));
    assert_eq!(report["certificates"]["rank_S2"], json!(3));
    assert_eq!(report["certificates"]["aligned_dims"], json!([1, 1]));

    let out = run(&[
        "xch",
        "simulate",
        "--in",
        scheme.to_str().unwrap(),
        "--messages",
        "random:7",
    ]);
    assert_eq!(code(&out), 0);
    let sim = stdout_json(&out);
    assert_eq!(sim["mode"], json!("scalar_p3"));
    assert_eq!(sim["streams"], json!([1, 1, 1, 1]));
    assert_eq!(sim["match"], json!(true));
    assert_eq!(sim["sent"], sim["decoded"]);

    let messages = dir.join("messages.json");
    fs::write(&messages, r#"{"messages":[[1],[2],[0],[1]]}"#).unwrap();
    let out = run(&[
        "xch",
        "simulate",
        "--in",
        scheme.to_str().unwrap(),
        "--messages",
        messages.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let sim = stdout_json(&out);
    assert_eq!(sim["sent"], json!([[1], [2], [0], [1]]));
    assert_eq!(sim["decoded"], json!([[1], [2], [0], [1]]));
    assert_eq!(sim["match"], json!(true));
}

#[test]
fn verify_rejects_a_tampered_scheme() {
    let dir = scratch("tampered");
    let out = run_on(&["xch", "construct"], GF27_CHANNEL);
    assert_eq!(code(&out), 0);
    let mut doc = stdout_json(&out);
    doc["certificates"]["rank_S1"] = json!(2);
    let tampered = dir.join("tampered.json");
    fs::write(&tampered, serde_json::to_string(&doc).unwrap()).unwrap();

    let out = run(&["xch", "verify", "--in", tampered.to_str().unwrap()]);
    assert_eq!(code(&out), 4);
    assert!(stderr_text(&out).contains("disagree"));
}

#[test]
fn construct_honors_and_checks_a_forced_mode() {
    // The quadratic-extension scheme needs n = 2; forcing it on GF(3^3) is
    // reported as an infeasible construction, not a usage error.
    let out = run_on(&["xch", "construct", "--mode", "ext_p2"], GF27_CHANNEL);
    assert_eq!(code(&out), 3);
    assert!(stderr_text(&out).contains("n = 2"));

    let out = run_on(&["xch", "construct", "--mode", "bogus"], GF27_CHANNEL);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("unknown X scheme mode"));
}

#[test]
fn census_exhaustive_x_matches_the_closed_forms() {
    let out = run(&["census", "x", "--p", "2", "--n", "2", "--exhaustive", "--check"]);
    assert_eq!(code(&out), 0, "--check exits 0 when every comparison passes");
    let doc = stdout_json(&out);
    assert_eq!(doc["target"], json!("x_normalized_h"));
    assert_eq!(doc["exhaustive"], json!(true));
    assert_eq!(doc["total"], json!(3));
    let classes = doc["classes"].as_array().unwrap();
    let degenerate = classes.iter().find(|c| c["label"] == json!("degenerate")).unwrap();
    assert_eq!(degenerate["count"], json!(1));
    assert_eq!(degenerate["fraction"], json!("1/3"));
    let comparisons = doc["comparisons"].as_array().unwrap();
    assert!(!comparisons.is_empty());
    assert!(comparisons.iter().all(|c| c["pass"] == json!(true)));
    let frac = comparisons
        .iter()
        .find(|c| c["name"] == json!("degenerate_fraction"))
        .unwrap();
    assert_eq!(frac["relation"], json!("=="));
    assert_eq!(frac["measured"], json!("1/3"));
    assert_eq!(frac["reference"], json!("1/3"));
}

#[test]
fn census_runs_are_deterministic() {
    let sampled = ["census", "ic3", "--p", "3", "--n", "2", "--sample", "500", "--seed", "9"];
    let first = run(&sampled);
    let second = run(&sampled);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout, "same seed, same bytes");
    let doc = stdout_json(&first);
    assert_eq!(doc["exhaustive"], json!(false));
    assert_eq!(doc["seed"], json!(9));
    assert_eq!(doc["total"], json!(500));

    let exhaustive = ["census", "x", "--p", "3", "--n", "2", "--exhaustive"];
    let first = run(&exhaustive);
    let second = run(&exhaustive);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn census_writes_json_and_csv_files() {
    let dir = scratch("census_out");
    let base = dir.join("x22");
    let out = run(&[
        "census",
        "x",
        "--p",
        "2",
        "--n",
        "2",
        "--exhaustive",
        "--out",
        base.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let json_text = fs::read_to_string(dir.join("x22.json")).unwrap();
    let csv_text = fs::read_to_string(dir.join("x22.csv")).unwrap();
    assert_eq!(json_text.as_bytes(), out.stdout, "stdout echoes the JSON file");
    let doc: Value = serde_json::from_str(&json_text).unwrap();
    assert_eq!(doc["total"], json!(3));
    let mut lines = csv_text.lines();
    assert_eq!(
        lines.next(),
        Some("kind,label,count,fraction,relation,reference,pass")
    );
    assert!(csv_text.contains("class,degenerate,1,1/3,,,"));
    assert!(csv_text.contains("check,degenerate_fraction,,1/3,==,1/3,true"));
}

#[test]
fn census_prints_csv_on_request() {
    let out = run(&["census", "x", "--p", "2", "--n", "2", "--exhaustive", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("kind,label,count,fraction,relation,reference,pass")
    );
    assert!(text.contains("class,aligned,2,2/3,,,"));
}

#[test]
fn census_refuses_an_oversized_exhaustive_sweep() {
    let out = run(&["census", "x", "--p", "3", "--n", "20", "--exhaustive"]);
    assert_eq!(code(&out), 5);
    assert!(stderr_text(&out).contains("sample instead"));
}

#[test]
fn ic3_structure_pipeline_end_to_end() {
    // One absent cross link (h32 = 0) with all effective direct gains outside
    // F_p: capacity settles at 3/2 and the zero-structure scheme achieves it.
    let channel = r#"{"p":5,"n":2,"matrix":[[5,1,1],[1,5,1],[1,0,5]]}"#;

    let out = run_on(&["ic3", "classify"], channel);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert_eq!(doc["class"], json!("zero_case_7"));
    assert_eq!(doc["C"], json!("3/2"));
    assert_eq!(doc["C_linear"], json!("3/2"));
    assert_eq!(doc["case"], json!(7));
    assert_eq!(doc["structure"], json!("K"));
    let conditions = doc["conditions"].as_array().unwrap();
    assert_eq!(conditions.len(), 3);
    assert!(conditions.iter().all(|c| c["holds"] == json!(true)));

    let dir = scratch("ic3_structure");
    let scheme = dir.join("scheme.json");
    let out = run_on(&["ic3", "construct", "--out", scheme.to_str().unwrap()], channel);
    assert_eq!(code(&out), 0);
    let saved: Value = serde_json::from_str(&fs::read_to_string(&scheme).unwrap()).unwrap();
    assert_eq!(saved["mode"], json!("zero_structure"));
    assert_eq!(saved["zero_case"], json!(7));
    assert_eq!(saved["structure"], json!("K"));
    assert_eq!(saved["m"], json!(1));
    assert_eq!(saved["streams"], json!([1, 1, 1]));
    assert_eq!(saved["sum_rate"], json!("3/2"));

    let out = run(&["ic3", "verify", "--in", scheme.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    assert_eq!(report["pass"], json!(true));
    assert_eq!(report["sum_rate"], json!("3/2"));
    assert_eq!(report["certificates"]["aligned_dims"], json!([1, 1, 1]));

    let out = run(&[
        "ic3",
        "simulate",
        "--in",
        scheme.to_str().unwrap(),
        "--messages",
        "random:3",
    ]);
    assert_eq!(code(&out), 0);
    let sim = stdout_json(&out);
    assert_eq!(sim["match"], json!(true));
}

#[test]
fn malformed_input_is_a_usage_error() {
    let out = run_on(&["xch", "classify"], "not json");
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("invalid JSON"));

    // A messages file with the wrong number of blocks is caught before any
    // encoding happens.
    let dir = scratch("bad_messages");
    let channel = dir.join("channel.json");
    let scheme = dir.join("scheme.json");
    let short = dir.join("short.json");
    fs::write(&channel, GF27_CHANNEL).unwrap();
    fs::write(&short, r#"{"messages":[[1],[2]]}"#).unwrap();
    let out = run(&[
        "xch",
        "construct",
        "--in",
        channel.to_str().unwrap(),
        "--out",
        scheme.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let out = run(&[
        "xch",
        "simulate",
        "--in",
        scheme.to_str().unwrap(),
        "--messages",
        short.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("expected 4 message blocks"));
}
