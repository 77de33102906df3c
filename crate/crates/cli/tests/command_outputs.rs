//! End-to-end checks of the `vortex-lab` binary: emitted files, exit codes,
//! stderr error JSON, and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vortex-lab"))
}

fn work_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn square_config(out_dir: &Path) -> String {
    format!(
        "schema_version = 1\n\n[scenario]\nstrengths = [1.0, 1.0, 1.0, 1.0]\n\n\
         [scenario.positions]\nkind = \"square\"\n\n[integrator]\nt_end = 4.0\n\n\
         [output]\ndir = {:?}\n",
        out_dir.to_str().unwrap()
    )
}

fn stderr_error_kind(output: &Output) -> String {
    let text = String::from_utf8_lossy(&output.stderr);
    let parsed: serde_json::Value =
        serde_json::from_str(text.trim()).unwrap_or_else(|_| panic!("stderr is not JSON: {text}"));
    parsed["error"]["kind"].as_str().expect("error.kind").to_string()
}

#[test]
fn run_emits_deterministic_files_and_a_clean_report() {
    let dir = work_dir("run_deterministic");
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    let config = write_config(&dir, "square.toml", &square_config(&out_a));

    let status = bin().arg("run").arg(&config).status().unwrap();
    assert!(status.success());
    let rerun = bin()
        .arg("run")
        .arg(&config)
        .env("VORTEX_LAB_OUTPUT_DIR", &out_b)
        .status()
        .unwrap();
    assert!(rerun.success(), "output-dir override failed");

    for name in ["trajectory.csv", "shape.csv", "report.json", "run_meta.json"] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        assert!(!a.is_empty(), "{name} is empty");
    }

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["termination"], "time_limit");
    assert_eq!(report["classification"]["report"]["clusters"].as_array().unwrap().len(), 0);
    assert_eq!(report["initial_invariants"]["angular_impulse"], 4.0);
    assert_eq!(report["initial_invariants"]["m_pair_sum"], 8.0);
    assert!(report["invariant_drift"]["worst"].as_f64().unwrap() < 1e-8);
    assert_eq!(report["conditions"]["entries"].as_array().unwrap().len(), 7);
}

#[test]
fn classify_reanalyzes_a_stored_run() {
    let dir = work_dir("classify_stored");
    let out = dir.join("out");
    let config = write_config(&dir, "square.toml", &square_config(&out));
    assert!(bin().arg("run").arg(&config).status().unwrap().success());

    let output = bin().arg("classify").arg(&out).output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&output.stdout)).unwrap();
    assert_eq!(report["command"], "classify");
    assert_eq!(report["classification"]["clusters"].as_array().unwrap().len(), 0);
    assert!(report["samples"].as_u64().unwrap() >= 10);
}

#[test]
fn sweep_isolates_failed_grid_points_and_exits_partial() {
    let dir = work_dir("sweep_partial");
    let out = dir.join("sw");
    let config_body = format!(
        "schema_version = 1\n\n[scenario]\nstrengths = [1.0, 1.0, 1.0, 1.0]\n\n\
         [scenario.positions]\nkind = \"square\"\nside = 1.0\n\n[integrator]\nt_end = 1.0\n\n\
         [output]\ndir = {:?}\n\n[[sweep.axes]]\npath = \"scenario.positions.side\"\n\
         values = [1.0, -2.0, 1.5]\n",
        out.to_str().unwrap()
    );
    let config = write_config(&dir, "sweep.toml", &config_body);

    let output = bin().arg("sweep").arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(3), "expected partial exit");
    assert_eq!(stderr_error_kind(&output), "partial");

    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(rows.len(), 4, "header plus one row per grid point:\n{summary}");
    assert!(rows[1].contains(",ok,"));
    assert!(rows[2].contains(",error,") && rows[2].contains("side"));
    assert!(rows[3].contains(",ok,"));
    assert!(out.join("run-0000/trajectory.csv").is_file());
    assert!(!out.join("run-0001/trajectory.csv").exists());
    assert!(out.join("run-0002/trajectory.csv").is_file());
}

#[test]
fn sweep_without_a_grid_is_a_usage_error() {
    let dir = work_dir("sweep_empty");
    let config = write_config(&dir, "square.toml", &square_config(&dir.join("out")));
    let output = bin().arg("sweep").arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert_eq!(stderr_error_kind(&output), "usage");
}

#[test]
fn curve_samples_satisfy_their_defining_relations() {
    let output = bin()
        .args(["parallelogram-curve", "--g1", "2.0", "--g2", "-1.0", "--points", "64"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = String::from_utf8(output.stdout).unwrap();
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let fields: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(fields.len(), 6);
        assert!(fields[4].abs() < 1e-12, "energy residual {} at p = {}", fields[4], fields[0]);
        assert!(fields[5].abs() < 1e-12, "law residual {} at p = {}", fields[5], fields[0]);
        rows += 1;
    }
    assert_eq!(rows, 64);
}

#[test]
fn reduce_reports_tracking_within_the_envelope() {
    let dir = work_dir("reduce_report");
    let out = dir.join("red");
    let config_body = format!(
        "schema_version = 1\n\n[scenario]\nstrengths = [0.3, 0.7, 1.0, 1.0]\n\n\
         [scenario.positions]\nkind = \"binary\"\nepsilon = 5e-3\nangle = 0.3\n\
         center = [0.15, -0.1]\nspectators = [[-0.8, 0.65], [0.7, 0.9]]\n\n\
         [integrator]\nt_end = 0.2\nrel_tol = 1e-11\nabs_tol = 1e-13\n\n\
         [analysis]\nclassify = false\n\n[output]\ndir = {:?}\n",
        out.to_str().unwrap()
    );
    let config = write_config(&dir, "binary.toml", &config_body);

    let status = bin().arg("reduce").arg(&config).status().unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("reduction.json")).unwrap())
            .unwrap();
    assert!(report["condition_satisfied"].as_bool().unwrap());
    assert!(report["round_trip_max_error"].as_f64().unwrap() < 1e-12);
    let averaged = &report["averaged"];
    assert!(averaged["within_envelope"].as_bool().unwrap(), "{averaged}");
    assert_eq!(averaged["stop_reason"], "completed");
    assert!(averaged["hbar_relative_drift"].as_f64().unwrap() < 1e-9);

    let reduced = std::fs::read_to_string(out.join("reduced.csv")).unwrap();
    assert!(reduced.lines().count() > 100);
    assert!(reduced.lines().count() <= 4002);
}

#[test]
fn invalid_config_prints_machine_readable_json() {
    let dir = work_dir("invalid_config");
    let config = write_config(&dir, "bad.toml", "schema_version = 1\n[scenario]\n");
    let output = bin().arg("run").arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert_eq!(stderr_error_kind(&output), "usage");
}

#[test]
fn immediate_singularity_is_a_runtime_error() {
    let dir = work_dir("immediate_singularity");
    let config_body = format!(
        "schema_version = 1\n\n[scenario]\nstrengths = [1.0, -1.0]\n\n\
         [scenario.positions]\nkind = \"explicit\"\nvalues = [[0.0, 0.0], [1e-9, 0.0]]\n\n\
         [output]\ndir = {:?}\n",
        dir.join("out").to_str().unwrap()
    );
    let config = write_config(&dir, "singular.toml", &config_body);
    let output = bin().arg("run").arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert_eq!(stderr_error_kind(&output), "runtime");
}
