mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn locout(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locout"))
        .args(args)
        .env_remove("LOCOUT_THREADS")
        .output()
        .expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn write_matrix(file: &Path, n: usize, p: usize, seed: u64) {
    let x = common::gaussian(n, p, seed);
    let mut out = String::new();
    for i in 0..n {
        let row: Vec<String> = x.row(i).iter().map(|v| format!("{v:.17e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(file, out).unwrap();
}

fn read_csv(file: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(file).unwrap();
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect();
    (header, rows)
}

#[test]
fn score_writes_one_row_per_observation() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "data.csv");
    write_matrix(Path::new(&input), 100, 200, 1);
    let output = path(&dir, "scores.csv");
    let out = locout(&[
        "score", "--input", &input, "--k", "20", "--alpha", "0.5", "--output", &output,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = read_csv(&output);
    assert_eq!(header, ["row_id", "locout"]);
    assert_eq!(rows.len(), 100);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0], i.to_string());
        assert!(row[1].parse::<f64>().unwrap() >= 0.0);
    }

    let again = locout(&["score", "--input", &input, "--k", "20", "--alpha", "0.5"]);
    assert_eq!(again.stdout, fs::read(&output).unwrap());
}

#[test]
fn alpha_out_of_range_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "data.csv");
    write_matrix(Path::new(&input), 10, 20, 2);
    let out = locout(&["score", "--input", &input, "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(0, 1]"));
    assert!(out.stdout.is_empty());
}

#[test]
fn low_dimension_warning_goes_to_stderr() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "data.csv");
    write_matrix(Path::new(&input), 30, 3, 3);
    let out = locout(&["score", "--input", &input, "--k", "10"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 31);
    assert!(stdout
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap() == 0.0));
    assert!(!out.stderr.is_empty());
}

#[test]
fn simulate_normal_with_noise() {
    let dir = TempDir::new().unwrap();
    let output = path(&dir, "sim.csv");
    let out = locout(&[
        "simulate", "--setup", "normal", "--noise", "1000", "--seed", "7", "--output", &output,
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
    let (header, rows) = read_csv(&output);
    assert_eq!(header.len(), 1052);
    assert_eq!(&header[1050..], ["label", "group"]);
    assert_eq!(rows.len(), 400);
    let outliers = rows.iter().filter(|r| r[1050] == "1").count();
    assert_eq!(outliers, 21);
}

#[test]
fn simulate_lognormal_is_positive() {
    let dir = TempDir::new().unwrap();
    let output = path(&dir, "sim.csv");
    let out = locout(&[
        "simulate",
        "--setup",
        "lognormal",
        "--noise",
        "20",
        "--seed",
        "3",
        "--output",
        &output,
    ]);
    assert!(out.status.success());
    let (_, rows) = read_csv(&output);
    for row in &rows {
        assert!(row[..70].iter().all(|v| v.parse::<f64>().unwrap() > 0.0));
    }
}

#[test]
fn simulate_without_outliers() {
    let out = locout(&[
        "simulate",
        "--noise",
        "0",
        "--groups",
        "10,10,10",
        "--outlier-fraction",
        "0",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 30);
    assert!(rows.iter().all(|r| r.len() == 52 && r[50] == "0"));
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate", "--groups", "20,20,20", "--noise", "30", "--seed", "11",
    ];
    assert_eq!(locout(&args).stdout, locout(&args).stdout);
    let other = locout(&[
        "simulate", "--groups", "20,20,20", "--noise", "30", "--seed", "12",
    ]);
    assert_ne!(locout(&args).stdout, other.stdout);
}

#[test]
fn evaluate_prints_auc() {
    let dir = TempDir::new().unwrap();
    let scores = path(&dir, "s.csv");
    let labels = path(&dir, "l.csv");
    fs::write(&scores, "row_id,locout\n0,0.1\n1,0.4\n2,0.35\n3,0.8\n").unwrap();
    fs::write(&labels, "x,label\n5,0\n6,0\n7,1\n8,1\n").unwrap();
    let out = locout(&[
        "evaluate",
        "--scores",
        &scores,
        "--labels",
        &format!("{labels}:label"),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let auc: f64 = String::from_utf8(out.stdout)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert_eq!(auc, 0.75);
}

#[test]
fn evaluate_without_label_column_fails() {
    let dir = TempDir::new().unwrap();
    let scores = path(&dir, "s.csv");
    let labels = path(&dir, "l.csv");
    fs::write(&scores, "row_id,locout\n0,0.1\n1,0.4\n").unwrap();
    fs::write(&labels, "x,y\n5,0\n6,1\n").unwrap();
    let out = locout(&[
        "evaluate",
        "--scores",
        &scores,
        "--labels",
        &format!("{labels}:label"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("label"));
}

#[test]
fn score_with_missing_label_column_fails() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "data.csv");
    fs::write(&input, "a,b,c\n1,2,3\n4,5,7\n").unwrap();
    let out = locout(&[
        "score",
        "--input",
        &input,
        "--header",
        "--label-column",
        "label",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_report_shape() {
    let out = locout(&[
        "bench",
        "--setups",
        "normal",
        "--noise",
        "0,350,1000",
        "--reps",
        "5",
        "--groups",
        "45,45,30",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(
        header.starts_with("setup,distribution,p_inf,p_noise,method,repetition,seed,auc,runtime_s")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 30);
    for method in ["locout", "knn"] {
        assert_eq!(
            rows.iter()
                .filter(|r| r.split(',').nth(4) == Some(method))
                .count(),
            15
        );
    }
}

#[test]
fn profile_writes_one_row() {
    let out = locout(&[
        "profile", "--n", "100", "--p", "500", "--k", "40", "--runs", "1",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let header: Vec<&str> = lines[0].split(',').collect();
    let values: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(header.len(), values.len());
    for stage in [
        "t_distances",
        "t_core_selection",
        "t_svd",
        "t_cd",
        "t_od",
        "t_weights",
        "t_total",
    ] {
        let col = header.iter().position(|h| *h == stage).unwrap();
        assert!(values[col].parse::<f64>().unwrap() >= 0.0);
    }
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(locout(&["--help"]).status.code(), Some(0));
    assert_eq!(locout(&["--version"]).status.code(), Some(0));
    assert_eq!(locout(&["frobnicate"]).status.code(), Some(1));
}
