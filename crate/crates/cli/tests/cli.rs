use std::path::PathBuf;
use std::process::{Command, Output};

use orderest_core::risksim::{read_csv, to_csv_string};

fn orderest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orderest")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Numbers on the line starting with `name`.
fn values(text: &str, name: &str) -> Vec<f64> {
    text.lines()
        .find(|l| l.starts_with(name))
        .map(|l| l.split_whitespace().filter_map(|w| w.parse().ok()).collect())
        .unwrap_or_default()
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("orderest-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn psi_table_for_independent_gammas() {
    let out = orderest(&[
        "psi", "--model", "indep_gamma", "--a1", "1", "--a2", "1", "--loss", "squared_error", "--target", "smaller",
        "--lambda", "1", "--t", "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let row: Vec<f64> = stdout(&out).lines().last().unwrap().split_whitespace().map(|w| w.parse().unwrap()).collect();
    assert_eq!(row[..2], [1.0, 2.0]);
    assert!((row[2] - 1.0).abs() < 1e-9 && (row[3] - 1.0).abs() < 1e-5 && row[4] < 1e-5, "{row:?}");
}

#[test]
fn psi_for_nearly_uncorrelated_normals() {
    let out = orderest(&[
        "psi", "--model", "bvn", "--s1", "1", "--s2", "1", "--rho", "1e-9", "--target", "smaller", "--lambda", "0", "--t", "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let row: Vec<f64> = stdout(&out).lines().last().unwrap().split_whitespace().map(|w| w.parse().unwrap()).collect();
    assert!((row[2] + 2.5).abs() < 1e-6 && (row[3] + 2.5).abs() < 1e-6, "{row:?}");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(orderest(&["psi", "--target", "smaller", "--lambda", "0", "--t", "1"]).status.code(), Some(2));
    assert_eq!(orderest(&["psi", "--model", "bvn", "--s1", "one"]).status.code(), Some(2));
    assert_eq!(orderest(&["psi", "--model", "nope", "--target", "smaller", "--lambda", "0", "--t", "1"]).status.code(), Some(2));
    assert_eq!(orderest(&["simulate", "--preset", "fig3a"]).status.code(), Some(2));
    assert_eq!(orderest(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(orderest(&["improve", "--model", "indep_exp", "--s1", "1", "--x1", "1", "--x2", "2", "--key", "smaller:blee"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_with_one() {
    let out = orderest(&["improve", "--model", "indep_gamma", "--a1", "1", "--a2", "1", "--key", "smaller:bsee", "--x1", "0", "--x2", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    let out = orderest(&["psi", "--model", "bvn", "--s1", "-1", "--s2", "1", "--rho", "0", "--target", "smaller", "--lambda", "0", "--t", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn improve_examples() {
    let out = orderest(&["improve", "--model", "indep_gamma", "--a1", "1", "--a2", "1", "--key", "smaller:bsee", "--x1", "3", "--x2", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(values(&text, "base"), vec![1.5]);
    assert_eq!(values(&text, "improved"), vec![1.5]);

    let out = orderest(&["improve", "--model", "bvn", "--s1", "1", "--s2", "1", "--rho", "0", "--key", "smaller:blee", "--x1", "2", "--x2", "1"]);
    let text = stdout(&out);
    assert_eq!(values(&text, "base"), vec![2.0]);
    assert_eq!(values(&text, "improved"), vec![1.5]);
    assert_eq!(values(&text, "ancillary"), vec![-1.0]);
}

#[test]
fn bounds_report_their_source() {
    let out = orderest(&["bounds", "--model", "indep_exp", "--s1", "1", "--s2", "2", "--target", "smaller", "--t", "-1,3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.matches("closed_form").count(), 2);
    let out = orderest(&[
        "bounds", "--model", "bvn", "--s1", "1", "--s2", "2", "--rho", "0.3", "--loss", "linex", "--target", "larger", "--t", "0",
        "--lambda-grid-points", "12",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("grid_approximate"));
}

#[test]
fn simulate_writes_reparsable_csv_and_svg() {
    let dir = scratch("sim");
    let d = dir.to_str().unwrap();
    let out = orderest(&["simulate", "--preset", "fig2a", "--n", "2000", "--seed", "42", "--out-dir", d, "--format", "both"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("fig2a.csv")).unwrap();
    assert!(csv.starts_with("model,target,loss,estimator,lambda,risk,stderr,n,seed\n"));
    let curve = read_csv(csv.as_bytes()).unwrap();
    assert_eq!(curve.labels.len(), 4);
    assert_eq!(to_csv_string(&curve).unwrap(), csv);
    let svg = std::fs::read_to_string(dir.join("fig2a.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 4);

    let out = orderest(&["simulate", "--preset", "fig1e", "--n", "500", "--out-dir", d]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("fig1e.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("bvn[s1=10;s2=0.4;rho=0],smaller"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = scratch("cfg");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"model": "indep_exp", "s1": 1, "s2": 2, "target": "smaller", "estimators": ["blee", "improved_blee"],
                "lambda": [0, 1, 2], "n": 1000, "name": "mine", "out-dir": {:?}}}"#,
            dir.to_str().unwrap()
        ),
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let out = orderest(&["--config", c, "simulate", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let curve = read_csv(std::fs::File::open(dir.join("mine.csv")).unwrap()).unwrap();
    assert_eq!(curve.lambda_grid, vec![0.0, 1.0, 2.0]);
    assert_eq!(curve.risks[0][0].n, 1000);
    assert!(stdout(&out).contains("improved BLEE vs BLEE"));

    let out = orderest(&["--config", c, "psi", "--s2", "1", "--lambda", "0.5", "--t", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("indep_exp[s1=1;s2=1]"));

    std::fs::write(&cfg, r#"{"modle": "bvn"}"#).unwrap();
    assert_eq!(orderest(&["--config", c, "analyze"]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn analyze_accepts_a_data_file() {
    let dir = scratch("data");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("pairs.csv");
    std::fs::write(&path, "a,1,3\nb,2,2\nc,0,5\n").unwrap();
    let out = orderest(&["analyze", "--data", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(values(&text, "means"), vec![1.0, 3.333]);
    assert_eq!(values(&text, "improved"), vec![1.0, 3.3333]);

    std::fs::write(&path, "a,1,3\nb,1,2\n").unwrap();
    assert_eq!(orderest(&["analyze", "--data", path.to_str().unwrap()]).status.code(), Some(1));
    std::fs::remove_dir_all(&dir).unwrap();
}
