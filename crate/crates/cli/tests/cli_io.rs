//! End-to-end behavior of the `edgeloc` binary: exit codes, configuration
//! validation, output-file layout, and byte-level reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn exe() -> &'static str {
    env!("CARGO_BIN_EXE_edgeloc")
}

fn shipped_scenario() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/desk_scale.json")
}

fn run(args: &[&str]) -> Output {
    Command::new(exe())
        .args(args)
        .output()
        .expect("binary should launch")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no exit code (killed by signal?)")
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

/// Parses a CSV produced by the binary into (headers, string records).
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_path(path)
        .unwrap_or_else(|e| panic!("cannot open {}: {e}", path.display()));
    let headers = reader.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_owned).collect())
        .collect();
    (headers, rows)
}

fn column(headers: &[String], name: &str) -> usize {
    headers
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("missing column {name} in {headers:?}"))
}

#[test]
fn check_subcommand_passes_and_exits_zero() {
    let out = run(&["check"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(exit_code(&out), 0, "stdout: {stdout}");
    assert_eq!(stdout.matches(": ok (").count(), 5, "stdout: {stdout}");
    assert!(!stdout.contains("FAILED"), "stdout: {stdout}");
}

#[test]
fn missing_config_file_is_a_configuration_error() {
    let out = run(&["peb", "--config", "/nonexistent/scenario.json"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn malformed_json_is_a_configuration_error() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("broken.json");
    std::fs::write(&cfg, "{ not json").unwrap();
    let out = run(&["peb", "--config", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn unknown_fields_and_bad_values_are_configuration_errors() {
    let dir = TempDir::new().unwrap();

    // Unknown key: likely a typo, so the schema rejects it outright.
    let cfg = dir.path().join("unknown.json");
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(shipped_scenario()).unwrap()).unwrap();
    doc["window_width"] = serde_json::json!(2.0);
    std::fs::write(&cfg, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = run(&["peb", "--config", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);

    // Anchor on the wrong side of the wall.
    let cfg = dir.path().join("anchor.json");
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(shipped_scenario()).unwrap()).unwrap();
    doc["anchors"][0][1] = serde_json::json!(5.0);
    std::fs::write(&cfg, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = run(&["peb", "--config", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);

    // Unsupported schema version.
    let cfg = dir.path().join("version.json");
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(shipped_scenario()).unwrap()).unwrap();
    doc["schema_version"] = serde_json::json!(99);
    std::fs::write(&cfg, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = run(&["peb", "--config", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn flag_overrides_are_validated_like_the_file() {
    let scenario = shipped_scenario();
    let out = run(&[
        "peb",
        "--config",
        scenario.to_str().unwrap(),
        "--samples",
        "0",
    ]);
    assert_eq!(exit_code(&out), 2);

    let out = run(&["mc", "--config", scenario.to_str().unwrap(), "--snr-db", ""]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn ratio_runs_are_reproducible_and_seed_sensitive() {
    let scenario = shipped_scenario();
    let dirs: Vec<TempDir> = (0..3).map(|_| TempDir::new().unwrap()).collect();
    for (dir, seed) in dirs.iter().zip(["5", "5", "6"]) {
        let out = run(&[
            "ratio",
            "--config",
            scenario.to_str().unwrap(),
            "--samples",
            "8",
            "--seed",
            seed,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let bytes: Vec<Vec<u8>> = dirs
        .iter()
        .map(|d| read(&d.path().join("ratio_sweep.csv")))
        .collect();
    assert_eq!(bytes[0], bytes[1], "same seed must reproduce bytes");
    assert_ne!(bytes[0], bytes[2], "different seed must change the draw");
}

#[test]
fn peb_outputs_are_internally_consistent() {
    let scenario = shipped_scenario();
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "peb",
        "--config",
        scenario.to_str().unwrap(),
        "--samples",
        "60",
        "--snr-db",
        "3,15",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let (headers, rows) = read_csv(&dir.path().join("peb_points.csv"));
    let (c3d, cz) = (column(&headers, "peb_3d_m"), column(&headers, "peb_z_m"));
    let crank = column(&headers, "rank");
    assert_eq!(rows.len(), 60 * 2);
    for row in &rows {
        let p3: f64 = row[c3d].parse().unwrap();
        let pz: f64 = row[cz].parse().unwrap();
        assert!(p3.is_finite() && p3 > 0.0);
        // The axis bound is one diagonal term of the trace under the root.
        assert!(pz <= p3 * (1.0 + 1e-12), "axis bound {pz} exceeds 3D bound {p3}");
        assert_eq!(row[crank], "3");
    }

    let (headers, rows) = read_csv(&dir.path().join("peb_cdf.csv"));
    let (csnr, cpct) = (column(&headers, "snr_db"), column(&headers, "percentile"));
    let c3d = column(&headers, "peb_3d_m");
    assert_eq!(rows.len(), 2 * 101);
    let mut previous: Option<(String, f64)> = None;
    for row in &rows {
        let pct: u32 = row[cpct].parse().unwrap();
        let value: f64 = row[c3d].parse().unwrap();
        if let Some((snr, last)) = &previous {
            if *snr == row[csnr] {
                assert!(value >= *last, "CDF must be non-decreasing in the percentile");
            }
        }
        previous = Some((row[csnr].clone(), value));
        assert!(pct <= 100);
    }

    let manifest: serde_json::Value =
        serde_json::from_slice(&read(&dir.path().join("manifest.json"))).unwrap();
    assert_eq!(manifest["mode"], "peb_map");
    assert_eq!(manifest["outputs"][0], "peb_points.csv");
    assert_eq!(manifest["rows"][0], 120);
    assert_eq!(manifest["scenario"]["n_samples"], 60);
}

#[test]
fn mc_outputs_follow_the_declared_schema() {
    let scenario = shipped_scenario();
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "mc",
        "--config",
        scenario.to_str().unwrap(),
        "--samples",
        "40",
        "--snr-db",
        "9",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let (headers, rows) = read_csv(&dir.path().join("mc_trials.csv"));
    let cconv = column(&headers, "nls_converged");
    let cerr = column(&headers, "nls_error_m");
    assert_eq!(rows.len(), 40);
    let converged = rows.iter().filter(|r| r[cconv] == "true").count();
    assert!(converged >= 38, "only {converged}/40 trials converged");
    for row in rows.iter().filter(|r| r[cconv] == "true") {
        let err: f64 = row[cerr].parse().unwrap();
        assert!(err.is_finite() && err >= 0.0);
    }

    let (headers, rows) = read_csv(&dir.path().join("mc_summary.csv"));
    assert_eq!(rows.len(), 1);
    let nls = column(&headers, "nls_rmse_m");
    let lls = column(&headers, "lls_rmse_m");
    let nls_rmse: f64 = rows[0][nls].parse().unwrap();
    let lls_rmse: f64 = rows[0][lls].parse().unwrap();
    assert!(
        nls_rmse < lls_rmse,
        "range-model fit ({nls_rmse} m) should beat the Euclidean baseline ({lls_rmse} m)"
    );
}
