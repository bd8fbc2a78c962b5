use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const FIG2: &str = r#"
[channel]
alpha_los = 2.5
alpha_nlos = 3.5
m_los = 1
m_nlos = 1
beta = 0.7

[[layers]]
density = 1e-5
altitude = 100.0
power = 1.0

[simulation]
trials = 2000
seed = 3
"#;

fn two_layer(h1: f64) -> String {
    format!(
        "[channel]\nalpha_los = 2.5\nalpha_nlos = 3.5\nbeta = 0.7\n\n\
         [[layers]]\ndensity = 5e-6\naltitude = {h1:?}\npower = 1.0\n\n\
         [[layers]]\ndensity = 5e-6\naltitude = 200.0\npower = 1.0\n"
    )
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aerialnet"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn analyze_reports_stp_and_association() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fig2.toml", FIG2);
    let o = run(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let stp = v["stp"].as_f64().unwrap();
    assert!((stp - 0.6448496890242638).abs() < 1e-6, "{stp}");
    let assoc = v["association"].as_object().unwrap();
    let total: f64 = assoc.values().map(|x| x.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-6);
    assert!(v["params"]["layers"].is_array());
    assert_eq!(
        v["conditional_stp"]["layer1_los"].as_array().unwrap().len(),
        3
    );
}

#[test]
fn analyze_output_file_gets_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fig2.toml", FIG2);
    let out = dir.path().join("a.json");
    let o = run(&[
        "analyze",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["outputs"][0].as_str().unwrap(), out.to_str().unwrap());
    assert_eq!(m["command_line"][1], "analyze");
}

#[test]
fn config_errors_exit_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        &FIG2.replace("alpha_los = 2.5", "alpha_los = 1.9"),
    );
    let o = run(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(
        stderr(&o).contains("bad.toml:3:") && stderr(&o).contains("alpha > 2"),
        "{}",
        stderr(&o)
    );

    let cfg = write(
        dir.path(),
        "shape.toml",
        &FIG2.replace("m_los = 1", "m_los = 2.5"),
    );
    let o = run(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("integer"), "{}", stderr(&o));

    let o = run(&["analyze", "--config", "/nonexistent.toml"]);
    assert_eq!(code(&o), 2);
    let o = run(&["frobnicate"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fig2.toml", FIG2);
    let cfg = cfg.to_str().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (out, threads) in [(&a, "1"), (&b, "4")] {
        let o = run(&[
            "simulate",
            "--config",
            cfg,
            "--seed",
            "11",
            "--threads",
            threads,
            "--output",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v: Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(v["trials"], 2000);
    assert!(v["stderr"].as_f64().unwrap() > 0.0);
    assert!(v["empty_windows"].is_u64());
    let m: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("a.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(m["seed"], 11);

    let o = run(&["simulate", "--config", cfg, "--trials", "10"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("100 trials"), "{}", stderr(&o));
}

#[test]
fn sweep_writes_csv_json_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fig2.toml", FIG2);
    let out = dir.path().join("h.csv");
    let o = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--grid",
        "h1=50:200:3:log",
        "--engines",
        "analytic,montecarlo",
        "--trials",
        "500",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("h1,stp_analytic,stp_mc,stp_mc_stderr"));
    assert_eq!(lines.count(), 3);
    assert!(dir.path().join("h.json").exists());
    assert!(dir.path().join("h.manifest.json").exists());
}

#[test]
fn two_dimensional_sweep_with_optimal_density() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fig3.toml", FIG2);
    let out = dir.path().join("s.csv");
    let o = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--grid",
        "h1=100,200",
        "--grid",
        "lambda1=10^-7:10^-4:4:log",
        "--optimal-density",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = std::fs::read_to_string(&out).unwrap().lines().count() - 1;
    assert_eq!(rows, 2 * 4);
    let overlay = std::fs::read_to_string(dir.path().join("s_optimal.csv")).unwrap();
    let mut lines = overlay.lines();
    assert_eq!(
        lines.next().unwrap(),
        "h1,argmax_density,max_stp,bound,bound_holds,boundary"
    );
    assert_eq!(lines.count(), 2);
}

#[test]
fn malformed_grid_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fig2.toml", FIG2);
    let out = dir.path().join("x.csv");
    for grid in ["h1=1:2:1", "h9=1,2", "h1=0:10:4:log", "h1"] {
        let o = run(&[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--grid",
            grid,
            "--output",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 2, "{grid}: {}", stderr(&o));
    }
}

#[test]
fn failed_points_are_rows_not_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fig2.toml", FIG2);
    let out = dir.path().join("a.csv");
    let o = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--grid",
        "alpha_los=1.5,2.5",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("1 grid point"), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows[0].contains("alpha_los must be > 2"));
    assert!(rows[1].ends_with(','));
}

#[test]
fn iso_total_reports_argmax_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fig4.toml", &two_layer(100.0));
    let out = dir.path().join("iso.csv");
    let o = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--iso-total",
        "10^-6",
        "--fractions",
        "5",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = std::fs::read_to_string(dir.path().join("iso_argmax.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next().unwrap(), "total,argmax_fraction,max_stp");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[1], "0.0");
    assert_eq!(
        std::fs::read_to_string(&out).unwrap().lines().count(),
        1 + 5
    );
}

#[test]
fn bound_per_layer_and_total() {
    let dir = tempfile::tempdir().unwrap();
    let low = write(dir.path(), "low.toml", &two_layer(100.0));
    let o = run(&["bound", "--config", low.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let layers = v["layers"].as_array().unwrap();
    assert_eq!(layers.len(), 2);
    let (b1, b2) = (
        layers[0]["bound"].as_f64().unwrap(),
        layers[1]["bound"].as_f64().unwrap(),
    );
    assert!(b1 > b2, "lower layer should allow more nodes");
    assert!((v["total_bound"].as_f64().unwrap() - (b1 + b2)).abs() < 1e-18);

    let nak = write(
        dir.path(),
        "nak.toml",
        &two_layer(100.0).replace("beta = 0.7", "beta = 0.7\nm_los = 3"),
    );
    let o = run(&["bound", "--config", nak.to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}
