//! End-to-end tests of the CLI: config ingestion, file emission,
//! determinism, sweep aggregation, checksums, and exit codes.

use std::path::Path;
use std::process::Command;

use qgyro_cli::config::ExperimentConfig;
use qgyro_cli::{experiments, manifest, sweep};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qgyro"))
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

const THERMAL_CONFIG: &str = r#"
[experiment]
kind = "thermal-curve"
[geometry]
twice_ell = [10, 20]
[run]
n_points = 21
"#;

#[test]
fn thermal_curve_emits_csv_and_verifiable_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig::from_toml(THERMAL_CONFIG).unwrap();
    let outcome = experiments::run(&config, dir.path()).unwrap();

    let csv = read(&dir.path().join("thermal_curve.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "ell,s_z,Lz_over_ell");
    // 2 sizes x 21 samples.
    assert_eq!(lines.count(), 42);
    // Saturation rows parse losslessly to exactly -1.
    let first_row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first_row[2].parse::<f64>().unwrap(), -1.0);

    let checked = manifest::self_check(&outcome.manifest_path).unwrap();
    assert_eq!(checked, 1);
}

#[test]
fn identical_configs_reproduce_identical_outputs() {
    let config = ExperimentConfig::from_toml(THERMAL_CONFIG).unwrap();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    experiments::run(&config, dir_a.path()).unwrap();
    experiments::run(&config, dir_b.path()).unwrap();
    let a = std::fs::read(dir_a.path().join("thermal_curve.csv")).unwrap();
    let b = std::fs::read(dir_b.path().join("thermal_curve.csv")).unwrap();
    assert_eq!(a, b, "outputs must be byte-identical across reruns");
}

#[test]
fn evolve_records_merit_against_axis() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig::from_toml(
        r#"
[experiment]
kind = "evolve"
[geometry]
twice_ell = 20
[source]
s_z = 0.25
[initial]
theta0 = 0.0
[run]
steps = 50
merit_axis = [0.0, 0.0, 1.0]
"#,
    )
    .unwrap();
    experiments::run(&config, dir.path()).unwrap();
    let csv = read(&dir.path().join("trajectory.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,Lx,Ly,Lz,r,theta,merit");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    // Aligned coherent state: merit = (1 + 2l/d)/2 = (1 + 20/21)/2.
    let merit: f64 = first[6].parse().unwrap();
    assert!((merit - 0.5 * (1.0 + 20.0 / 21.0)).abs() < 1e-12);
    assert_eq!(csv.lines().count(), 52);
}

#[test]
fn povm_report_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig::from_toml(
        r#"
[experiment]
kind = "povm-report"
[geometry]
twice_ell = 14
[initial]
state = "mixed"
[run]
merit_axis = [0.0, 0.0, 1.0]
"#,
    )
    .unwrap();
    experiments::run(&config, dir.path()).unwrap();
    let json = read(&dir.path().join("povm_report.json"));
    let report: experiments::PovmReport = serde_json::from_str(&json).unwrap();
    assert_eq!(report.q_ave, 0.5);
    assert_eq!(report.theta, None);
    // Lambda_+ of the mixed state is (l+1)/d on the diagonal.
    assert!((report.lambda_plus[0][0][0] - 8.0 / 15.0).abs() < 1e-12);
    // Re-serialization round-trips through identical structs.
    let echoed: experiments::PovmReport =
        serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(echoed, report);
}

#[test]
fn sweep_runs_configs_and_aggregates_deterministically() {
    let work = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for name in ["a", "b", "c"] {
        let path = work.path().join(format!("{name}.toml"));
        std::fs::write(&path, THERMAL_CONFIG).unwrap();
        paths.push(path);
    }

    let out_serial = work.path().join("serial");
    let out_parallel = work.path().join("parallel");
    let (serial, failed_serial) = sweep::sweep(&paths, 1, &out_serial).unwrap();
    let (parallel, failed_parallel) = sweep::sweep(&paths, 8, &out_parallel).unwrap();
    assert!(!failed_serial && !failed_parallel);

    // Three identical configs give three byte-identical outputs.
    let bytes: Vec<Vec<u8>> = ["a", "b", "c"]
        .iter()
        .map(|n| std::fs::read(out_serial.join(n).join("thermal_curve.csv")).unwrap())
        .collect();
    assert_eq!(bytes[0], bytes[1]);
    assert_eq!(bytes[1], bytes[2]);

    // Aggregated manifests agree modulo timestamps and output roots.
    assert_eq!(serial.entries.len(), parallel.entries.len());
    for (a, b) in serial.entries.iter().zip(parallel.entries.iter()) {
        assert_eq!(a.config_sha256, b.config_sha256);
        assert_eq!(a.status, b.status);
        let hashes = |entry: &sweep::SweepEntry| {
            entry.outputs.iter().map(|o| o.sha256.clone()).collect::<Vec<_>>()
        };
        assert_eq!(hashes(a), hashes(b));
    }
}

#[test]
fn sweep_reports_partial_failure() {
    let work = tempfile::tempdir().unwrap();
    let good = work.path().join("good.toml");
    std::fs::write(&good, THERMAL_CONFIG).unwrap();
    let bad = work.path().join("bad.toml");
    std::fs::write(
        &bad,
        "[experiment]\nkind = \"evolve\"\n[geometry]\ntwice_ell = 10\n[source]\ns_z = 0.7\n",
    )
    .unwrap();

    let out = work.path().join("out");
    let (summary, any_failed) = sweep::sweep(&[good, bad], 2, &out).unwrap();
    assert!(any_failed);
    let ok = summary.entries.iter().filter(|e| e.status == "ok").count();
    assert_eq!(ok, 1);
    let failed: Vec<_> = summary.entries.iter().filter(|e| e.status != "ok").collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0].status.contains("|<S_z>| <= 1/2"), "{}", failed[0].status);
}

#[test]
fn binary_rejects_invalid_polarization_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let output = binary()
        .args(["evolve", "--twice-ell", "10", "--s-z", "0.7", "--steps", "5"])
        .args(["--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("|<S_z>| <= 1/2"), "diagnostic names the bound: {stderr}");
}

#[test]
fn binary_runs_hitting_time_and_self_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let status = binary()
        .args(["hitting-time", "--twice-ell", "10,20", "--epsilon", "0.2"])
        .args(["--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let manifest_path = out.join("run_manifest.json");

    let ok = binary()
        .args(["self-check", "--manifest", manifest_path.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(ok.success());

    // Tamper with an output: the self-check must fail with exit 3.
    let target = out.join("hitting_time.csv");
    let mut text = read(&target);
    text.push_str("tampered\n");
    std::fs::write(&target, text).unwrap();
    let bad = binary()
        .args(["self-check", "--manifest", manifest_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn binary_honors_output_env_var() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from-env");
    let status = binary()
        .args(["povm-report", "--twice-ell", "6"])
        .env(qgyro_cli::OUT_DIR_ENV, out.to_str().unwrap())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("povm_report.json").exists());
}

#[test]
fn gap_sweep_config_mismatch_is_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("curve.toml");
    std::fs::write(&config_path, THERMAL_CONFIG).unwrap();
    // Invoking `gap-sweep` with a thermal-curve config is a validation error.
    let output = binary()
        .args(["gap-sweep", "--config", config_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}
