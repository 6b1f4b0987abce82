//! End-to-end exercises of the binary: simulate -> analyze -> tables on a
//! small cell, the oracle-check subcommand, config files, and the output-dir
//! environment variable.

use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_memstab");

fn run(args: &[&str], envs: &[(&str, &str)]) -> (bool, String, String) {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    (
        out.status.success(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn simulate_analyze_tables_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let common = [
        "--structure", "S3",
        "--level", "3",
        "--temp", "1.3",
        "--samples", "20000",
        "--replicas", "2",
        "--seed", "42",
        "--out", out,
    ];

    let mut args = vec!["simulate", "--stage", "production"];
    args.extend_from_slice(&common);
    let (ok, stdout, stderr) = run(&args, &[]);
    assert!(ok, "simulate failed: {stderr}");
    assert!(stdout.contains("results.jsonl"));
    assert!(dir.path().join("results.jsonl").exists());

    // sample CSVs have the documented layout plus a JSON sidecar
    let series_dir = dir.path().join("series");
    let mut csvs: Vec<_> = std::fs::read_dir(&series_dir)
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension().is_some_and(|x| x == "csv")).then_some(p)
        })
        .collect();
    csvs.sort();
    assert!(!csvs.is_empty());
    let body = std::fs::read_to_string(&csvs[0]).unwrap();
    assert!(body.starts_with("step,energy,abs_m"));
    assert!(csvs[0].with_extension("json").exists());

    let mut args = vec!["analyze"];
    args.extend_from_slice(&common);
    let (ok, _, stderr) = run(&args, &[]);
    assert!(ok, "analyze failed: {stderr}");

    let mut args = vec!["tables"];
    args.extend_from_slice(&common);
    let (ok, stdout, stderr) = run(&args, &[]);
    assert!(ok, "tables failed: {stderr}");
    assert!(stdout.contains("susceptibility_peaks.txt"));
    let peaks = std::fs::read_to_string(dir.path().join("tables/susceptibility_peaks.txt")).unwrap();
    assert!(peaks.contains("S3"), "{peaks}");
}

#[test]
fn analyze_without_production_names_missing_stage() {
    let dir = tempfile::tempdir().unwrap();
    let (ok, _, stderr) = run(
        &["analyze", "--structure", "1", "--level", "2", "--out", dir.path().to_str().unwrap()],
        &[],
    );
    assert!(!ok);
    assert!(stderr.contains("production"), "{stderr}");
}

#[test]
fn oracle_check_subcommand_passes_on_small_graph() {
    let (ok, stdout, stderr) = run(
        &["oracle-check", "--structure", "1", "--level", "2", "--temp", "0.8", "--samples", "100000"],
        &[],
    );
    assert!(ok, "{stderr}");
    assert_eq!(stdout.matches("[ok]").count(), 4, "{stdout}");
    assert!(!stdout.contains("MISMATCH"));
}

#[test]
fn oracle_check_rejects_large_graphs() {
    let (ok, _, stderr) = run(&["oracle-check", "--structure", "1", "--level", "3"], &[]);
    assert!(!ok);
    assert!(stderr.contains("budget"), "{stderr}");
}

#[test]
fn config_file_plus_env_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("exp.toml");
    std::fs::write(
        &cfg_path,
        "structures = [\"S1\"]\nlevels = [2]\ntemperature = 0.7\nreplicas = 2\nn_samples = 5000\nbase_seed = 7\n",
    )
    .unwrap();
    let out_dir = dir.path().join("from-env");

    let (ok, _, stderr) = run(
        &["simulate", "--stage", "production", "--config", cfg_path.to_str().unwrap()],
        &[("MEMSTAB_OUT", out_dir.to_str().unwrap())],
    );
    assert!(ok, "{stderr}");
    assert!(out_dir.join("results.jsonl").exists());

    // same config re-run appends to the same store; a different seed is
    // rejected as a mixed-config store
    let (ok, _, stderr) = run(
        &[
            "simulate", "--stage", "production",
            "--config", cfg_path.to_str().unwrap(),
            "--seed", "8",
        ],
        &[("MEMSTAB_OUT", out_dir.to_str().unwrap())],
    );
    assert!(!ok);
    assert!(stderr.contains("different config"), "{stderr}");
}

#[test]
fn smoke_run_with_ten_samples_completes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (ok, _, stderr) = run(
        &[
            "simulate", "--stage", "all",
            "--structure", "2",
            "--level", "2",
            "--temp", "0.9",
            "--samples", "10",
            "--replicas", "2",
            "--out", out,
        ],
        &[],
    );
    assert!(ok, "smoke run failed: {stderr}");
    let store = std::fs::read_to_string(dir.path().join("results.jsonl")).unwrap();
    assert!(
        store.contains("\"low_confidence\":true"),
        "smoke analysis should be flagged: {store}"
    );
}

fn file_names(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn determinism_across_runs() {
    let mk = || {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let (ok, _, stderr) = run(
            &[
                "simulate", "--stage", "all",
                "--structure", "3",
                "--level", "2",
                "--temp", "1.3",
                "--samples", "4000",
                "--replicas", "2",
                "--seed", "99",
                "--out", out,
            ],
            &[],
        );
        assert!(ok, "{stderr}");
        let series = dir.path().join("series");
        let mut blobs = Vec::new();
        for name in file_names(&series) {
            if name.ends_with(".csv") {
                blobs.push((name.clone(), std::fs::read_to_string(series.join(name)).unwrap()));
            }
        }
        // store lines minus the path-bearing series records
        let store: Vec<String> = std::fs::read_to_string(dir.path().join("results.jsonl"))
            .unwrap()
            .lines()
            .filter(|l| !l.contains("csv_path"))
            .map(String::from)
            .collect();
        (blobs, store)
    };
    let a = mk();
    let b = mk();
    assert_eq!(a, b, "identical config + seed must reproduce bit-identical outputs");
}
