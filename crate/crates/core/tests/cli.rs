use std::path::Path;
use std::process::{Command, Output};

use eosvac::io::{read_csv_table, read_json_table};

fn eosvac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eosvac"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = eosvac(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Four-point Lagrange interpolation of `(xs, ys)` at `x`.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&v| v < x).clamp(2, xs.len() - 2) - 2;
    let (px, py) = (&xs[i..i + 4], &ys[i..i + 4]);
    (0..4)
        .map(|a| {
            let basis: f64 = (0..4)
                .filter(|&b| b != a)
                .map(|b| (x - px[b]) / (px[a] - px[b]))
                .product();
            py[a] * basis
        })
        .sum()
}

fn column(table: &eosvac::io::Table, name: &str) -> Vec<f64> {
    table.column(name).unwrap().into_iter().map(|v| v.unwrap()).collect()
}

#[test]
fn ratio_at_twice_the_resonance() {
    let csv = stdout(&[
        "ratio",
        "--model",
        "lorentz",
        "--eps-r",
        "1",
        "--omega-x",
        "1",
        "--g",
        "0.5",
        "--omega",
        "0.01:5:1000",
    ]);
    assert!(csv.starts_with("omega,value\n"));
    let t = read_csv_table(&csv).unwrap();
    assert_eq!(t.rows.len(), 1000);
    let (w, r) = (column(&t, "omega"), column(&t, "value"));
    assert!((interpolate(&w, &r, 2.0) - 1.224745).abs() < 1e-6);
}

#[test]
fn check_passes_for_the_figure_model() {
    let out = eosvac(&[
        "check",
        "--model",
        "lorentz",
        "--eps-r",
        "1",
        "--omega-x",
        "1",
        "--g",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 8);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn check_json_lists_statuses() {
    let text = stdout(&["check", "--eps-r", "2", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["meta"]["command"], "check");
    let statuses: Vec<&str> = doc["data"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["status"].as_str().unwrap())
        .collect();
    assert!(statuses.contains(&"flag"));
    assert!(!statuses.contains(&"fail"));
}

#[test]
fn figure_panels() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    stdout(&["reproduce-fig2", "--out-dir", d]);

    let a = read_csv_table(&std::fs::read_to_string(dir.path().join("fig2a_dispersion.csv")).unwrap()).unwrap();
    assert_eq!(a.columns, ["k", "omega_lower", "omega_upper", "omega_bare"]);
    let row = a.rows.iter().find(|r| r[0] == Some(1.0)).expect("k = 1 on the grid");
    assert!((row[1].unwrap() - 0.618034).abs() < 1e-6);
    assert!((row[2].unwrap() - 1.618034).abs() < 1e-6);
    assert_eq!(row[3], Some(1.0));

    let b = read_csv_table(&std::fs::read_to_string(dir.path().join("fig2b_ratio.csv")).unwrap()).unwrap();
    let (w, r) = (column(&b, "omega"), column(&b, "value"));
    for (w, r) in w.iter().zip(&r) {
        if *w > 1.0 && *w < 2f64.sqrt() {
            assert_eq!(*r, 0.0, "gap point {w}");
        }
    }
    let i2 = w.iter().position(|&x| x == 2.0).unwrap();
    assert!((r[i2] - 1.224745).abs() < 1e-6);
}

#[test]
fn figure_panels_json() {
    let dir = tempfile::tempdir().unwrap();
    stdout(&[
        "reproduce-fig2",
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--format",
        "json",
    ]);
    let text = std::fs::read_to_string(dir.path().join("fig2a_dispersion.json")).unwrap();
    let (meta, table) = read_json_table(&text).unwrap();
    assert_eq!(meta["units"], "reduced");
    assert_eq!(meta["model"]["g"], 0.5);
    assert_eq!(table.columns[0], "k");
}

#[test]
fn seeded_output_is_reproducible() {
    let args = ["synth", "--sigma", "0.01", "--seed", "42", "--omega", "0.05:3:400"];
    let a = stdout(&args);
    assert_eq!(a, stdout(&args));
    assert_ne!(
        a,
        stdout(&["synth", "--sigma", "0.01", "--seed", "43", "--omega", "0.05:3:400"])
    );
    let seq = stdout(&[
        "synth",
        "--sigma",
        "0.01",
        "--seed",
        "42",
        "--omega",
        "0.05:3:400",
        "--sequential",
    ]);
    assert_eq!(a, seq);
}

#[test]
fn conversion_constant_cancels() {
    for cmd in [
        vec!["spectrum", "--omega", "0.1:4:50"],
        vec!["spectrum", "--source", "vacuum", "--omega", "0.1:4:50"],
        vec!["timecorr", "--tau", "-2:2:9"],
    ] {
        let mut one = cmd.clone();
        one.extend(["--conversion", "1", "--format", "json"]);
        let mut ten = cmd.clone();
        ten.extend(["--conversion", "10", "--format", "json"]);
        assert_eq!(stdout(&one), stdout(&ten), "{cmd:?}");
    }
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn json_trace_feeds_fit_and_invert() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.json");
    write(&trace, &stdout(&["synth", "--format", "json", "--omega", "0.05:3:400"]));

    let fit = stdout(&[
        "fit",
        "--input",
        trace.to_str().unwrap(),
        "--guess",
        "1.2:0.4",
        "--format",
        "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&fit).unwrap();
    assert_eq!(doc["meta"]["converged"], true);
    let w = doc["data"][0]["omega"].as_f64().unwrap();
    let g = doc["data"][0]["g"].as_f64().unwrap();
    assert!((w - 1.0).abs() < 1e-6 && (g - 0.5).abs() < 1e-6, "{w} {g}");

    let inv = stdout(&["invert", "--input", trace.to_str().unwrap(), "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&inv).unwrap();
    let gap = &doc["meta"]["gaps"][0];
    let step = 2.95 / 399.0;
    assert!((gap["lo"].as_f64().unwrap() - 1.0).abs() < step);
    assert!((gap["hi"].as_f64().unwrap() - 2f64.sqrt()).abs() < step);
}

#[test]
fn csv_ratio_output_feeds_invert() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("ratio.csv");
    write(&trace, &stdout(&["ratio", "--omega", "0.05:3:60"]));
    let out = stdout(&["invert", "--input", trace.to_str().unwrap(), "--eps-r", "1"]);
    let t = read_csv_table(&out).unwrap();
    for row in &t.rows {
        let w = row[0].unwrap();
        if let Some(eps) = row[1] {
            let exact = 1.0 - 1.0 / (w * w - 1.0);
            assert!(((eps - exact) / exact).abs() < 1e-10, "{w}");
        }
    }
}

#[test]
fn config_file_mirrors_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    write(
        &cfg,
        r#"{"model":{"kind":"lorentz","eps_r":1.0,"omega_x":1.0,"g":0.5},"omega":{"min":0.5,"max":3.0,"points":6},"format":"json"}"#,
    );
    let from_file = stdout(&["ratio", "--config", cfg.to_str().unwrap()]);
    let from_flags = stdout(&["ratio", "--omega", "0.5:3:6", "--format", "json"]);
    assert_eq!(from_file, from_flags);

    let out_path = dir.path().join("out.csv");
    stdout(&[
        "ratio",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "csv",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(std::fs::read_to_string(out_path).unwrap().starts_with("omega,value\n"));
}

#[test]
fn exit_codes() {
    assert_eq!(eosvac(&[]).status.code(), Some(1));
    assert_eq!(eosvac(&["ratio", "--omega", "3:1:10"]).status.code(), Some(1));
    assert_eq!(eosvac(&["ratio", "--g", "-0.5"]).status.code(), Some(1));
    assert_eq!(
        eosvac(&["fit", "--input", "/nonexistent/trace.csv"]).status.code(),
        Some(1)
    );
    assert_eq!(eosvac(&["--version"]).status.code(), Some(0));
    let diverging = eosvac(&["timecorr", "--filter", "identity"]);
    assert_eq!(diverging.status.code(), Some(2));
    assert!(!diverging.stderr.is_empty());
}

#[test]
fn tables_have_expected_columns() {
    assert!(stdout(&["hopfield", "--k", "1:1:1"]).starts_with("k,branch,omega,x,z,"));
    assert!(stdout(&["nk", "--k", "1:1:1"]).starts_with("k,population,lhs,rhs,residual\n"));
    assert!(stdout(&["timecorr", "--tau", "0:1:2", "--method", "modes"]).starts_with("tau,value\n"));
    let multi = stdout(&["dispersion", "--oscillators", "1:0.3,3:0.2", "--k", "1:2:2"]);
    assert!(multi.starts_with("k,omega_0,omega_1,omega_2,omega_bare\n"));
}
