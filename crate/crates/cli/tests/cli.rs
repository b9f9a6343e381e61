//! End-to-end tests of the `qbounce` binary: file formats, exit codes,
//! reproducibility, and the closed fit loop on a short mirror.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn qbounce() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qbounce"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn qbounce");
    assert!(
        out.status.success(),
        "command failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Short-mirror config so propagation stays fast; flags still win over it.
fn fast_config(dir: &Path) -> PathBuf {
    let path = dir.join("fast.toml");
    fs::write(&path, "flight_length = 0.05\n").unwrap();
    path
}

fn parse_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>())
        .collect();
    (header, rows)
}

#[test]
fn spectrum_reports_the_transition_ladder() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("spectrum.csv");
    run_ok(
        qbounce()
            .args(["spectrum", "--n-states", "5", "--out"])
            .arg(&out),
    );
    let (header, rows) = parse_csv(&out);
    assert_eq!(header[0..3], ["n", "a", "energy_peV"]);
    assert_eq!(rows.len(), 5);
    // omega_{3,0} - omega_{0,0} = (E_3 - E_0)/hbar = 4.07e3 rad/s.
    let col = header
        .iter()
        .position(|h| h == "omega_0_rad_per_s")
        .unwrap();
    let w30: f64 = rows[3][col].parse().unwrap();
    let w00: f64 = rows[0][col].parse().unwrap();
    assert!(((w30 - w00) / 4.07e3 - 1.0).abs() < 5e-3, "w30 = {w30}");

    // Single-state basis gives a single row.
    let single = dir.path().join("single.csv");
    run_ok(
        qbounce()
            .args(["spectrum", "--n-states", "1", "--out"])
            .arg(&single),
    );
    assert_eq!(parse_csv(&single).1.len(), 1);
}

#[test]
fn spectrum_unwritable_path_exits_2() {
    let out = qbounce()
        .args([
            "spectrum",
            "--n-states",
            "2",
            "--out",
            "/nonexistent-dir/x.csv",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_datasets_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let config = fast_config(dir.path());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        run_ok(
            qbounce()
                .args([
                    "synth",
                    "--sigma",
                    "500",
                    "--velocity",
                    "9.5",
                    "--points-per-mode",
                    "2",
                    "--seed",
                    "7",
                    "--config",
                ])
                .arg(&config)
                .arg("--out")
                .arg(out),
        );
    }
    let bytes_a = fs::read(&a).unwrap();
    assert_eq!(
        bytes_a,
        fs::read(&b).unwrap(),
        "same seed must give identical bytes"
    );
    let records = qbounce_cli::io::read_records(&a).unwrap();
    assert_eq!(records.len(), 4);
    assert!(records.iter().all(|r| r.error == 0.05));
    // A different seed moves the noisy transmissions.
    let c = dir.path().join("c.csv");
    run_ok(
        qbounce()
            .args([
                "synth",
                "--sigma",
                "500",
                "--velocity",
                "9.5",
                "--points-per-mode",
                "2",
                "--seed",
                "8",
                "--config",
            ])
            .arg(&config)
            .arg("--out")
            .arg(&c),
    );
    assert_ne!(bytes_a, fs::read(&c).unwrap());
}

#[test]
fn fit_recovers_generating_sigma_and_caches() {
    let dir = TempDir::new().unwrap();
    let config = fast_config(dir.path());
    let data = dir.path().join("data.csv");
    run_ok(
        qbounce()
            .args([
                "synth",
                "--sigma",
                "500",
                "--velocity",
                "9.5",
                "--points-per-mode",
                "2",
                "--noise-scale",
                "0",
                "--seed",
                "1",
                "--config",
            ])
            .arg(&config)
            .arg("--out")
            .arg(&data),
    );

    let cache = dir.path().join("cache");
    let model = dir.path().join("model.csv");
    let run_fit = |surface: &Path, summary: &Path| {
        run_ok(
            qbounce()
                .args([
                    "fit",
                    "--sigma-min",
                    "250",
                    "--sigma-max",
                    "1000",
                    "--sigma-points",
                    "3",
                    "--velocity-points",
                    "2",
                    "--config",
                ])
                .arg(&config)
                .arg("--data")
                .arg(&data)
                .arg("--cache")
                .arg(&cache)
                .arg("--model-out")
                .arg(&model)
                .arg("--out")
                .arg(surface)
                .arg("--summary")
                .arg(summary),
        );
    };
    let surface = dir.path().join("surface.csv");
    let summary = dir.path().join("summary.json");
    run_fit(&surface, &summary);

    // Model comparison mirrors the input columns plus model predictions; on
    // noiseless data the model transmission equals the measured one.
    let (model_header, model_rows) = parse_csv(&model);
    assert_eq!(
        model_header,
        [
            "strength_m_per_s",
            "omega_rad_per_s",
            "transmission",
            "error",
            "P0",
            "P1",
            "P2",
            "T_model"
        ]
    );
    assert_eq!(model_rows.len(), 4);
    for row in &model_rows {
        let measured: f64 = row[2].parse().unwrap();
        let modeled: f64 = row[7].parse().unwrap();
        assert!((measured - modeled).abs() < 1e-9, "{measured} vs {modeled}");
    }

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    // The middle node of the log grid lands at 500 up to rounding.
    let best_sigma = json["best"]["sigma"].as_f64().unwrap();
    assert!(
        (best_sigma / 500.0 - 1.0).abs() < 1e-12,
        "best sigma {best_sigma}"
    );
    assert_eq!(json["best"]["velocity"], serde_json::json!(9.5));
    assert!(json["chi2_min"].as_f64().unwrap() < 1e-10);
    assert_eq!(json["underdetermined"], serde_json::json!(false));
    assert_eq!(json["n_points"], serde_json::json!(4));
    assert!(json["failed_nodes"].as_array().unwrap().is_empty());

    // Surface has one row per (sigma, velocity) node: (3 + inf) * 2.
    let (header, rows) = parse_csv(&surface);
    assert_eq!(header, ["sigma", "velocity", "c0", "c1", "c2", "chi2"]);
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().any(|r| r[0] == "inf"));

    // Cache populated; a rerun from cache is byte-identical.
    assert!(fs::read_dir(&cache).unwrap().count() > 0);
    let surface2 = dir.path().join("surface2.csv");
    let summary2 = dir.path().join("summary2.json");
    run_fit(&surface2, &summary2);
    assert_eq!(fs::read(&surface).unwrap(), fs::read(&surface2).unwrap());
    assert_eq!(fs::read(&summary).unwrap(), fs::read(&summary2).unwrap());
}

#[test]
fn fit_flags_underdetermined_data() {
    let dir = TempDir::new().unwrap();
    let config = fast_config(dir.path());
    let data = dir.path().join("one.csv");
    fs::write(
        &data,
        "strength_m_per_s,omega_rad_per_s,transmission,error\n2.05e-3,4067.0,0.9,0.05\n",
    )
    .unwrap();
    let summary = dir.path().join("summary.json");
    run_ok(
        qbounce()
            .args([
                "fit",
                "--sigma-min",
                "400",
                "--sigma-max",
                "600",
                "--sigma-points",
                "2",
                "--velocity-points",
                "2",
                "--config",
            ])
            .arg(&config)
            .arg("--data")
            .arg(&data)
            .arg("--out")
            .arg(dir.path().join("surface.csv"))
            .arg("--summary")
            .arg(&summary),
    );
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(json["underdetermined"], serde_json::json!(true));
    // Convex and consistent: a single record is interpolated exactly.
    assert!(json["chi2_min"].as_f64().unwrap() < 1e-16);
}

#[test]
fn fit_rejects_bad_data_files() {
    let dir = TempDir::new().unwrap();
    let fit_with = |data: &Path| {
        qbounce()
            .args(["fit", "--sigma-points", "2", "--velocity-points", "2"])
            .arg("--data")
            .arg(data)
            .arg("--out")
            .arg(dir.path().join("s.csv"))
            .output()
            .unwrap()
    };

    // Missing file.
    let out = fit_with(&dir.path().join("missing.csv"));
    assert_eq!(out.status.code(), Some(2));

    // Wrong header.
    let bad_header = dir.path().join("bad_header.csv");
    fs::write(&bad_header, "a,b,c,d\n1,2,3,4\n").unwrap();
    let out = fit_with(&bad_header);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("header"));

    // Negative error bar, reported with its line number.
    let bad_row = dir.path().join("bad_row.csv");
    fs::write(
        &bad_row,
        "strength_m_per_s,omega_rad_per_s,transmission,error\n2e-3,4000,0.9,0.05\n2e-3,4100,0.8,-0.05\n",
    )
    .unwrap();
    let out = fit_with(&bad_row);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 3"), "stderr: {stderr}");

    // Unparsable number, also with a line number.
    let bad_num = dir.path().join("bad_num.csv");
    fs::write(
        &bad_num,
        "strength_m_per_s,omega_rad_per_s,transmission,error\nnope,4000,0.9,0.05\n",
    )
    .unwrap();
    let out = fit_with(&bad_num);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn record_reader_handles_edge_cases() {
    let dir = TempDir::new().unwrap();
    // Header-only file parses to an empty list.
    let empty = dir.path().join("empty.csv");
    fs::write(
        &empty,
        "strength_m_per_s,omega_rad_per_s,transmission,error\n",
    )
    .unwrap();
    assert!(qbounce_cli::io::read_records(&empty).unwrap().is_empty());

    // A single well-formed row round-trips, scientific notation included.
    let one = dir.path().join("one.csv");
    fs::write(
        &one,
        "strength_m_per_s,omega_rad_per_s,transmission,error\n2.05e-3,4070,0.71,0.05\n",
    )
    .unwrap();
    let records = qbounce_cli::io::read_records(&one).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].strength, 2.05e-3);
    assert_eq!(records[0].omega, 4070.0);

    // Duplicate (strength, omega) pairs are repeated measurements, not an
    // error.
    let dup = dir.path().join("dup.csv");
    fs::write(
        &dup,
        "strength_m_per_s,omega_rad_per_s,transmission,error\n2e-3,4000,0.9,0.05\n2e-3,4000,0.8,0.05\n",
    )
    .unwrap();
    assert_eq!(qbounce_cli::io::read_records(&dup).unwrap().len(), 2);
}

#[test]
fn sweep_shows_rabi_dip_and_revival() {
    // Strength sweep on the 0 -> 3 resonance over a full 30 cm flight:
    // transmission dips well below the undriven value and partially
    // revives at strong drive.
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep.csv");
    run_ok(
        qbounce()
            .args([
                "sweep",
                "--mode",
                "strength",
                "--min",
                "0",
                "--max",
                "4e-3",
                "--points",
                "7",
                "--sigmas",
                "inf",
                "--velocity",
                "6.58",
                "--out",
            ])
            .arg(&out),
    );
    let (header, rows) = parse_csv(&out);
    let t_col = header.iter().position(|h| h == "T_model").unwrap();
    let values: Vec<f64> = rows.iter().map(|r| r[t_col].parse().unwrap()).collect();
    assert_eq!(values.len(), 7);
    let undriven = values[0];
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let last = *values.last().unwrap();
    assert!((undriven - 1.073).abs() < 1e-2, "T(0) = {undriven}");
    assert!(min < 0.5, "no Rabi dip: {values:?}");
    assert!(last > 0.9, "no revival: {values:?}");
}

#[test]
fn sweep_large_sigma_matches_conservative() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep.csv");
    run_ok(
        qbounce()
            .args([
                "sweep",
                "--mode",
                "strength",
                "--min",
                "0",
                "--max",
                "4e-3",
                "--points",
                "3",
                "--sigmas",
                "1e6,inf",
                "--velocity",
                "9.5",
                "--out",
            ])
            .arg(&out),
    );
    let (header, rows) = parse_csv(&out);
    let t_col = header.iter().position(|h| h == "T_model").unwrap();
    let huge: Vec<f64> = rows
        .iter()
        .filter(|r| r[0] != "inf")
        .map(|r| r[t_col].parse().unwrap())
        .collect();
    let cons: Vec<f64> = rows
        .iter()
        .filter(|r| r[0] == "inf")
        .map(|r| r[t_col].parse().unwrap())
        .collect();
    assert_eq!(huge.len(), 3);
    assert_eq!(cons.len(), 3);
    for (a, b) in huge.iter().zip(&cons) {
        assert!((a - b).abs() < 1e-3, "sigma=1e6 {a} vs conservative {b}");
    }
}

#[test]
fn sweep_empty_range_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("empty.csv");
    run_ok(
        qbounce()
            .args([
                "sweep", "--mode", "omega", "--min", "3e3", "--max", "5e3", "--points", "0",
                "--out",
            ])
            .arg(&out),
    );
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("sigma,"));
}

#[test]
fn simulate_writes_trajectory_diagnostics() {
    let dir = TempDir::new().unwrap();
    let config = fast_config(dir.path());
    let out = dir.path().join("traj.csv");
    run_ok(
        qbounce()
            .args([
                "simulate",
                "--sigma",
                "500",
                "--velocity",
                "9.5",
                "--strength",
                "2.05e-3",
                "--omega",
                "4067",
                "--outputs",
                "5",
                "--config",
            ])
            .arg(&config)
            .arg("--out")
            .arg(&out),
    );
    let (header, rows) = parse_csv(&out);
    assert_eq!(header[0], "tau");
    assert_eq!(header[1], "P0");
    assert_eq!(
        header[header.len() - 3..],
        ["purity", "energy_J", "trace_drift"]
    );
    assert_eq!(rows.len(), 5);
    let purity_col = header.len() - 3;
    for row in &rows {
        let purity: f64 = row[purity_col].parse().unwrap();
        assert!(purity > 0.0 && purity <= 1.0 + 1e-9);
        let drift: f64 = row[header.len() - 1].parse().unwrap();
        assert!(drift < 1e-3);
    }
}

#[test]
fn simulate_diagnostic_failure_exits_1() {
    // At sigma = 0.4 the truncated dissipator leaks trace far beyond the
    // ceiling within a short flight.
    let dir = TempDir::new().unwrap();
    let config = fast_config(dir.path());
    let out = qbounce()
        .args([
            "simulate",
            "--sigma",
            "0.4",
            "--velocity",
            "9.5",
            "--strength",
            "4e-3",
            "--omega",
            "4067",
            "--outputs",
            "3",
            "--config",
        ])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("t.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trace drifted"));
}

#[test]
fn predict_reports_and_backreaction() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("pred.json");
    run_ok(
        qbounce()
            .args(["predict", "--sigma", "500", "--out"])
            .arg(&out),
    );
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let entropic = json["entropic_power_W"].as_f64().unwrap();
    assert!((entropic / 1.76e-31 - 1.0).abs() < 1e-2);
    let dp = json["dp_power_W"].as_f64().unwrap();
    assert!((dp / 1.66e-27 - 1.0).abs() < 1e-2);
    assert_eq!(json["dp_power_selected_W"], json["dp_power_W"]);

    let out2 = dir.path().join("pred2.json");
    run_ok(
        qbounce()
            .args(["predict", "--sigma", "500", "--backreaction", "--out"])
            .arg(&out2),
    );
    let json2: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out2).unwrap()).unwrap();
    assert_eq!(
        json2["dp_power_selected_W"].as_f64().unwrap(),
        2.0 * json2["dp_power_W"].as_f64().unwrap()
    );

    // 1 kg custom particle: the D-P rate reaches watt scale.
    let out3 = dir.path().join("kg.json");
    run_ok(
        qbounce()
            .args([
                "predict",
                "--particle",
                "custom",
                "--mass",
                "1.0",
                "--n-states",
                "2",
                "--sigma",
                "500",
                "--out",
            ])
            .arg(&out3),
    );
    let json3: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out3).unwrap()).unwrap();
    assert!((json3["dp_power_W"].as_f64().unwrap() / 1.0 - 1.0).abs() < 2e-2);
    assert!((json3["entropic_power_W"].as_f64().unwrap() / 1.25e-13 - 1.0).abs() < 1e-2);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "sigma = 250.0\n").unwrap();

    let out = dir.path().join("a.json");
    run_ok(
        qbounce()
            .args(["predict", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out),
    );
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["sigma"], serde_json::json!(250.0));

    let out2 = dir.path().join("b.json");
    run_ok(
        qbounce()
            .args(["predict", "--sigma", "500", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out2),
    );
    let json2: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out2).unwrap()).unwrap();
    assert_eq!(json2["sigma"], serde_json::json!(500.0));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let config = fast_config(dir.path());
    let data = dir.path().join("data.csv");
    run_ok(
        qbounce()
            .args([
                "synth",
                "--sigma",
                "500",
                "--velocity",
                "9.5",
                "--points-per-mode",
                "1",
                "--seed",
                "5",
                "--config",
            ])
            .arg(&config)
            .arg("--out")
            .arg(&data),
    );
    let mut outputs = Vec::new();
    for threads in ["1", "2"] {
        let surface = dir.path().join(format!("surface_{threads}.csv"));
        let summary = dir.path().join(format!("summary_{threads}.json"));
        run_ok(
            qbounce()
                .args([
                    "fit",
                    "--threads",
                    threads,
                    "--sigma-min",
                    "400",
                    "--sigma-max",
                    "600",
                    "--sigma-points",
                    "2",
                    "--velocity-points",
                    "2",
                    "--config",
                ])
                .arg(&config)
                .arg("--data")
                .arg(&data)
                .arg("--out")
                .arg(&surface)
                .arg("--summary")
                .arg(&summary),
        );
        outputs.push((fs::read(&surface).unwrap(), fs::read(&summary).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}
