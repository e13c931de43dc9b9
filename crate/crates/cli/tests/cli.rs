use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rdkf(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdkf"))
        .args(args)
        .current_dir(cwd)
        .env_remove("RDKF_OUT")
        .output()
        .expect("binary runs")
}

fn ok(output: &Output) {
    assert!(
        output.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                files.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn compare_writes_three_row_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = rdkf(&["compare", "--preset", "smoke", "--out", "res"], dir.path());
    ok(&out);
    let summary = fs::read_to_string(dir.path().join("res/summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 4, "{summary}");
    assert!(lines[0].starts_with("variant,mean_avg_sq_err"));
    let labels: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(labels, ["RDKF", "DKF1", "DKF2"]);
    for label in labels {
        assert!(dir.path().join("res").join(label).join("series.csv").is_file());
        assert!(dir.path().join("res").join(label).join("per_node.csv").is_file());
    }
    let manifest = fs::read_to_string(dir.path().join("res/manifest.toml")).unwrap();
    assert!(manifest.contains("[manifest]") && manifest.contains("command = \"compare\""));
}

#[test]
fn manifest_rerun_reproduces_csv_bytes() {
    let dir = tempfile::tempdir().unwrap();
    ok(&rdkf(
        &["compare", "--preset", "smoke", "--seed", "7", "--alpha", "5", "--event-log", "--trace", "--out", "a"],
        dir.path(),
    ));
    ok(&rdkf(&["compare", "--config", "a/manifest.toml", "--out", "b"], dir.path()));
    let a = csv_files(&dir.path().join("a"));
    let b = csv_files(&dir.path().join("b"));
    assert!(a.len() >= 9, "{} csv files", a.len());
    assert_eq!(a, b);
}

#[test]
fn simulate_is_deterministic_and_honours_out_env() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_rdkf"))
            .args(["simulate", "--preset", "smoke", "--filter", "dkf", "--alpha", "0.01"])
            .env("RDKF_OUT", name)
            .current_dir(dir.path())
            .output()
            .unwrap();
        ok(&out);
        csv_files(&dir.path().join(name))
    };
    let first = run("x");
    assert_eq!(first, run("y"));
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["dkf/per_node.csv", "dkf/series.csv", "summary.csv"]);
    let manifest = fs::read_to_string(dir.path().join("x/manifest.toml")).unwrap();
    assert!(manifest.contains("alpha = 0.01"), "{manifest}");
}

#[test]
fn range_error_leaves_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = rdkf(&["simulate", "--preset", "smoke", "--b", "-1", "--out", "res"], dir.path());
    assert!(!out.status.success());
    assert!(stderr(&out).contains("invalid configuration"), "{}", stderr(&out));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn runtime_failure_leaves_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = rdkf(&["simulate", "--preset", "smoke", "--filter", "nosuch", "--out", "res"], dir.path());
    assert!(!out.status.success());
    assert!(stderr(&out).contains("nosuch"), "{}", stderr(&out));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn unknown_config_key_is_reported_with_location() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "runs = 2\n\n[filter]\nalfa = 3.0\n").unwrap();
    let out = rdkf(&["simulate", "--config", "bad.toml", "--out", "res"], dir.path());
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("bad.toml") && err.contains("alfa") && err.contains("line 4"), "{err}");
    assert!(!dir.path().join("res").exists());
}

#[test]
fn plot_writes_four_figures() {
    let dir = tempfile::tempdir().unwrap();
    ok(&rdkf(&["compare", "--preset", "smoke", "--T", "10", "--out", "res"], dir.path()));
    ok(&rdkf(&["plot", "res"], dir.path()));
    for name in ["avg_sq_err.svg", "per_node.svg", "rate.svg", "theta.svg"] {
        let svg = fs::read_to_string(dir.path().join("res/plots").join(name)).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("</svg>"), "{name}");
        for label in ["RDKF", "DKF1", "DKF2"] {
            if name != "theta.svg" {
                assert!(svg.contains(label), "{name} lacks {label}");
            }
        }
    }
    ok(&rdkf(&["plot", "res/RDKF/series.csv", "--out", "single"], dir.path()));
    assert_eq!(fs::read_dir(dir.path().join("single")).unwrap().count(), 4);
}

#[test]
fn plot_of_missing_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = rdkf(&["plot", "nothing-here"], dir.path());
    assert!(!out.status.success());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn full_scale_compare_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out = rdkf(&["compare", "--preset", "paper", "--runs", "20", "--seed", "1", "--out", "results/"], dir.path());
    ok(&out);
    let mut reader = csv::Reader::from_path(dir.path().join("results/summary.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    for row in &rows {
        for cell in row.iter().skip(1) {
            let v: f64 = cell.parse().unwrap();
            assert!(v.is_finite() && v >= 0.0, "{row:?}");
        }
    }
    let series = fs::read_to_string(dir.path().join("results/RDKF/series.csv")).unwrap();
    assert_eq!(series.lines().count(), 1 + 21 * 301);
}
