use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_probbits"))
}

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn run_args(args: &[&str]) -> (Option<i32>, Value) {
    let out = bin().args(args).output().unwrap();
    let code = out.status.code();
    (code, json(&out))
}

fn write_program(dir: &tempfile::TempDir, name: &str, source: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, source).unwrap();
    path.to_string_lossy().into_owned()
}

fn without_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("elapsed_ms");
    v
}

#[test]
fn golden_outputs() {
    for (file, extra, golden) in [
        ("discrete4.pb", &["--stats"][..], "discrete4.json"),
        (
            "beta-missing.pb",
            &["--oracle", "--encoding", "categ"][..],
            "beta-missing.json",
        ),
    ] {
        let path = corpus_dir().join(file);
        let mut args = vec!["run", path.to_str().unwrap()];
        args.extend_from_slice(extra);
        let (code, got) = run_args(&args);
        assert_eq!(code, Some(0));
        let want: Value = serde_json::from_str(
            &std::fs::read_to_string(
                Path::new(env!("CARGO_MANIFEST_DIR"))
                    .join("tests/golden")
                    .join(golden),
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(without_timing(got), want, "{file}");
    }
}

#[test]
fn repeated_runs_are_identical() {
    let path = corpus_dir().join("luhn-4.pb");
    let a = run_args(&["run", path.to_str().unwrap(), "--stats"]).1;
    let b = run_args(&["run", path.to_str().unwrap(), "--stats"]).1;
    assert_eq!(without_timing(a), without_timing(b));
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax.pb", "let x = \nobserve(", 10, "parse_error"),
        ("unknown.pb", "return y", 10, "unknown_identifier"),
        (
            "narrow.pb",
            "return int(uniform(0, 8), 2)",
            11,
            "compile_error",
        ),
        (
            "unsat.pb",
            "let x = flip(0.5) observe(x && !x) return x",
            12,
            "unsatisfiable_evidence",
        ),
    ];
    for (name, source, code, kind) in cases {
        let path = write_program(&dir, name, source);
        let (got, v) = run_args(&["run", &path]);
        assert_eq!(got, Some(code), "{name}");
        assert_eq!(v["error"]["kind"], kind, "{name}");
    }
    let (code, v) = run_args(&["run", "syntax.pb"]);
    assert_eq!(code, Some(14));
    assert_eq!(v["error"]["kind"], "io_error");

    let path = write_program(&dir, "syntax.pb", "let x = \nobserve(");
    let (_, v) = run_args(&["run", &path]);
    assert_eq!(v["error"]["line"], 2);
}

#[test]
fn timeout_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    // middle bits of a 24-bit product have exponentially large diagrams
    let path = write_program(
        &dir,
        "slow.pb",
        "return uniform(0, 16777216) * uniform(0, 16777216)",
    );
    let (code, v) = run_args(&["run", &path, "--timeout-sec", "1"]);
    assert_eq!(code, Some(13));
    assert_eq!(v["error"]["kind"], "timeout");
}

#[test]
fn oracle_flag_reports_deviation() {
    let path = corpus_dir().join("luhn-2.pb");
    let (code, v) = run_args(&["run", path.to_str().unwrap(), "--oracle"]);
    assert_eq!(code, Some(0));
    assert!(v["oracle"]["max_abs_diff"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["oracle"]["queries"].as_array().unwrap().len(), 1);
}

#[test]
fn pretty_output_is_a_table() {
    let path = corpus_dir().join("discrete4.pb");
    let out = bin()
        .args(["run", path.to_str().unwrap(), "--pretty"])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0.400000000000"));
    assert!(serde_json::from_str::<Value>(&text).is_err());
}

#[test]
fn corpus_filter_selects_beta_programs() {
    let (code, v) = run_args(&["corpus", "--filter", "beta"]);
    assert_eq!(code, Some(0));
    let names: Vec<&str> = v["programs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["beta-single", "beta-missing"]);
}

#[test]
fn full_corpus_passes() {
    let (code, v) = run_args(&["corpus"]);
    assert_eq!(code, Some(0), "{v:#}");
    assert_eq!(v["failed"], 0);
    assert_eq!(v["passed"], 9);
}

#[test]
fn corrupted_program_fails_alone() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["discrete4", "beta-single"] {
        std::fs::copy(
            corpus_dir().join(format!("{name}.pb")),
            dir.path().join(format!("{name}.pb")),
        )
        .unwrap();
    }
    write_program(&dir, "broken.pb", "let x = flip(0.5\nreturn x");
    let (code, v) = run_args(&["corpus", "--dir", dir.path().to_str().unwrap()]);
    assert_eq!(code, Some(20));
    let programs = v["programs"].as_array().unwrap();
    assert_eq!(programs.len(), 3);
    for p in programs {
        let broken = p["name"] == "broken";
        assert_eq!(p["passed"], !broken, "{p}");
    }
}

#[test]
fn bench_lt_rows_and_monotone_sizes() {
    let (code, v) = run_args(&["bench", "lt", "--max-bits", "8", "--repetitions", "1"]);
    assert_eq!(code, Some(0));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    for enc in ["bitwise", "categ"] {
        let nodes: Vec<u64> = rows
            .iter()
            .map(|r| r[enc]["node_count"].as_u64().unwrap())
            .collect();
        assert!(nodes.windows(2).all(|w| w[0] <= w[1]), "{enc}: {nodes:?}");
    }
}

#[test]
fn bench_encoding_sizes() {
    let (_, v) = run_args(&["bench", "categ-vs-bitwise", "--bits", "4"]);
    let row = &v["rows"][0];
    assert_eq!(row["categ"]["node_count"], 49);
    assert_eq!(row["bitwise"]["node_count"], 26);
}

#[test]
fn bench_luhn_matches_oracle_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("luhn.csv");
    let (code, v) = run_args(&[
        "bench",
        "luhn",
        "--digits",
        "4",
        "--repetitions",
        "1",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code, Some(0));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!(r["oracle_max_abs_diff"].as_f64().unwrap() < 1e-9);
    }
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("size,bitwise_status"));
}

#[test]
fn fuzz_command() {
    let (code, v) = run_args(&["fuzz", "--cases", "30", "--seed", "9"]);
    assert_eq!(code, Some(0), "{v:#}");
    assert!(v["failures"].as_array().unwrap().is_empty());
}
