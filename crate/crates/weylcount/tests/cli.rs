//! End-to-end tests of the installed binary: exit codes, CSV schema and
//! determinism, manifests, and config handling.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_weylcount"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("weylcount-test-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn count_examples_and_exit_codes() {
    let out = run(&["count", "--dims", "2", "--lambda", "10"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("N=100 "));

    let out = run(&["count", "--dims", "1,1", "--lambda-sq", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("N=9 "));

    let out = run(&["count", "--dims", "2,0", "--lambda", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("0"));

    let out = run(&[
        "count",
        "--dims",
        "2,2,2",
        "--lambda",
        "2000",
        "--work-cap",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn count_accepts_exact_rational_threshold() {
    // lambda^2 = 3/2 on S^2: only the constant eigenfunction
    let out = run(&["count", "--dims", "2", "--lambda-sq", "3/2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("N=1 "));
}

#[test]
fn constants_table() {
    let out = run(&["constants", "--dims", "2,1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("weyl_constant=1.3333333333333333e0"));
    assert!(text.contains("exact_equal=true"));
    let out = run(&["constants", "--dims", "3"]);
    assert!(stdout(&out).contains("weyl_constant=3.3333333333333331e-1"));
}

#[test]
fn remainder_csv_is_deterministic_and_manifested() {
    let dir = temp_dir("remainder");
    let csv_a = dir.join("a.csv");
    let csv_b = dir.join("b.csv");
    let args = |path: &Path, threads: &str| {
        vec![
            "--threads".to_string(),
            threads.to_string(),
            "remainder".to_string(),
            "--dims".to_string(),
            "2,1".to_string(),
            "--lambda-min".to_string(),
            "20".to_string(),
            "--lambda-max".to_string(),
            "200".to_string(),
            "--samples".to_string(),
            "32".to_string(),
            "--out".to_string(),
            path.to_string_lossy().into_owned(),
        ]
    };
    let out = bin().args(args(&csv_a, "1")).output().unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    // different thread count must not change exact-mode bytes
    let out = bin().args(args(&csv_b, "2")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));

    let a = std::fs::read(&csv_a).unwrap();
    let b = std::fs::read(&csv_b).unwrap();
    assert_eq!(a, b, "CSV bytes differ across thread counts");

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "lambda,value,main_term,error");
    let first = lines.next().unwrap();
    assert_eq!(first.split(',').count(), 4);

    // manifest sits next to the CSV and records the run
    let manifest_path = csv_a.with_extension("manifest.json");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["arithmetic_mode"], "exact");
    assert_eq!(
        manifest["outputs"][0].as_str().unwrap(),
        csv_a.to_string_lossy()
    );

    // round-trip: re-running the manifest's command line reproduces bytes
    let recorded: Vec<String> = manifest["command_line"]
        .as_array()
        .unwrap()
        .iter()
        .skip(1)
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let out = bin().args(&recorded).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let again = std::fs::read(&csv_a).unwrap();
    assert_eq!(again, b, "manifest round-trip changed output");

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn remainder_lattice_with_shift() {
    let out = run(&[
        "remainder",
        "--lattice",
        "2,1,2",
        "--shift",
        "0.37,0.91",
        "--lambda-min",
        "30",
        "--lambda-max",
        "300",
        "--samples",
        "48",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    assert!(text.contains("fit: slope="));
    // weighted values with half-integer-free shifts stay rational: p/q form
    assert!(text.lines().any(|l| l.contains('/')));

    let out = run(&[
        "remainder",
        "--lattice",
        "2,1,2",
        "--shift",
        "0.5",
        "--lambda-min",
        "30",
        "--lambda-max",
        "300",
        "--samples",
        "48",
    ]);
    assert_eq!(out.status.code(), Some(2), "shift arity must be checked");
}

#[test]
fn remainder_envelope_and_raw_grid_options() {
    let out = run(&[
        "remainder",
        "--dims",
        "2,1",
        "--lambda-min",
        "20",
        "--lambda-max",
        "300",
        "--samples",
        "48",
        "--envelope",
        "--no-snap",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    assert!(text.contains("envelope=true"));
    // unsnapped grid keeps the exact geometric endpoints
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("2.0000000000000000e1,"));

    // default sample count comes from the per-decade density
    let out = run(&[
        "remainder",
        "--dims",
        "1,1",
        "--lambda-min",
        "100",
        "--lambda-max",
        "1000",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("geometric 64 samples"), "{err}");
}

#[test]
fn remainder_floating_mode() {
    let out = run(&[
        "remainder",
        "--lattice",
        "2,1,2",
        "--shift",
        "0.123456789,0.987654321",
        "--float",
        "--lambda-min",
        "20",
        "--lambda-max",
        "200",
        "--samples",
        "24",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    assert!(text.contains("fit: slope="));
    // floating values carry exponents, not p/q forms
    assert!(!text
        .lines()
        .any(|l| !l.starts_with("fit:") && l.contains('/')));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("\"arithmetic_mode\": \"floating\""));
}

#[test]
fn remainder_rejects_huge_shift() {
    let out = run(&[
        "remainder",
        "--lattice",
        "2,1,2",
        "--shift",
        "1099511627777,0",
        "--lambda-min",
        "20",
        "--lambda-max",
        "200",
        "--samples",
        "24",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn remainder_rejects_small_sample_count() {
    let out = run(&[
        "remainder",
        "--dims",
        "1,1",
        "--lambda-min",
        "10",
        "--lambda-max",
        "100",
        "--samples",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn molly_sandwich_pass_lines() {
    let out = run(&["molly", "--dims", "1,1", "--lambda", "30", "--epsilon", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("sandwich PASS"));

    let out = run(&[
        "molly",
        "--dims",
        "2,1",
        "--lambda",
        "50",
        "--epsilon",
        "auto",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    // auto epsilon = 50^(-1/3)
    assert!(text.contains("epsilon=2.7144"));
    assert!(text.contains("sandwich PASS"));

    let out = run(&["molly", "--dims", "1,1", "--lambda", "30", "--epsilon", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn counterexample_table() {
    let dir = temp_dir("counterexample");
    let csv = dir.join("jumps.csv");
    let out = run(&[
        "counterexample",
        "--kmax",
        "10",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "k,jump,threshold,drops,ratio");
    let mut checked = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 5);
        let jump: f64 = fields[1].parse().unwrap();
        let threshold: f64 = fields[2].parse().unwrap();
        let drops: f64 = fields[3].parse().unwrap();
        assert!(
            jump >= threshold - 2.0 * drops,
            "row violates the drop-corrected bound: {line}"
        );
        checked += 1;
    }
    assert_eq!(checked, 10);
    assert!(stdout(&out).contains("census=true"));

    let out = run(&["counterexample", "--kmax", "0"]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_is_honored_and_overridden_by_flags() {
    let dir = temp_dir("config");
    let config = dir.join("config.json");
    std::fs::write(&config, r#"{"work_cap": 10}"#).unwrap();

    // config cap makes a modest query refuse
    let out = bin()
        .env("WEYLCOUNT_CONFIG", &config)
        .args(["count", "--dims", "2,2", "--lambda", "100"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    // explicit flag overrides the file
    let out = bin()
        .env("WEYLCOUNT_CONFIG", &config)
        .args([
            "--work-cap",
            "1000000",
            "count",
            "--dims",
            "2,2",
            "--lambda",
            "100",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    std::fs::remove_dir_all(&dir).ok();
}
