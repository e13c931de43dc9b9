//! Figures from the CSV outputs of `simulate` and `compare`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::output::Staging;
use crate::svg::{bar_chart, line_chart, BarChart, LineChart, Series};

pub const FIGURES: [&str; 4] = ["avg_sq_err.svg", "per_node.svg", "rate.svg", "theta.svg"];

/// Across-run mean series of one variant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VariantSeries {
    pub label: String,
    pub t: Vec<f64>,
    pub avg_sq_err: Vec<f64>,
    pub rate: Vec<f64>,
    pub theta: Vec<f64>,
    pub theta_bar: Vec<f64>,
    pub per_node: Vec<f64>,
}

fn input_error(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Input {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn open(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::Reader::from_path(path).map_err(|e| input_error(path, e.to_string()))
}

fn column(headers: &csv::StringRecord, path: &Path, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| input_error(path, format!("missing column `{name}`")))
}

fn number(record: &csv::StringRecord, idx: usize, path: &Path) -> Result<f64> {
    let cell = record.get(idx).unwrap_or("");
    cell.parse()
        .map_err(|_| input_error(path, format!("line {}: `{cell}` is not a number", record.position().map_or(0, |p| p.line()))))
}

/// Reads the `run = mean` rows of a series file, keeping variant order.
pub fn read_series(path: &Path) -> Result<Vec<VariantSeries>> {
    let mut reader = open(path)?;
    let headers = reader.headers().map_err(|e| input_error(path, e.to_string()))?.clone();
    let cols = ["variant", "run", "t", "avg_sq_err", "rate", "theta", "theta_bar"]
        .map(|c| column(&headers, path, c));
    let [variant, run, t, err, rate, theta, theta_bar] = cols;
    let (variant, run, t, err, rate, theta, theta_bar) = (variant?, run?, t?, err?, rate?, theta?, theta_bar?);
    let mut out: Vec<VariantSeries> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| input_error(path, e.to_string()))?;
        if record.get(run) != Some("mean") {
            continue;
        }
        let label = record.get(variant).unwrap_or("").to_string();
        let idx = match out.iter().position(|s| s.label == label) {
            Some(i) => i,
            None => {
                out.push(VariantSeries {
                    label,
                    ..Default::default()
                });
                out.len() - 1
            }
        };
        let s = &mut out[idx];
        s.t.push(number(&record, t, path)?);
        s.avg_sq_err.push(number(&record, err, path)?);
        s.rate.push(number(&record, rate, path)?);
        s.theta.push(number(&record, theta, path)?);
        s.theta_bar.push(number(&record, theta_bar, path)?);
    }
    if out.is_empty() {
        return Err(input_error(path, "no `mean` rows found"));
    }
    Ok(out)
}

/// Per-node time-averaged errors keyed by variant.
pub fn read_per_node(path: &Path) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut reader = open(path)?;
    let headers = reader.headers().map_err(|e| input_error(path, e.to_string()))?.clone();
    let variant = column(&headers, path, "variant")?;
    let value = column(&headers, path, "avg_sq_err_i")?;
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| input_error(path, e.to_string()))?;
        let label = record.get(variant).unwrap_or("").to_string();
        out.entry(label).or_default().push(number(&record, value, path)?);
    }
    Ok(out)
}

fn summary_order(dir: &Path) -> Option<Vec<String>> {
    let mut reader = csv::Reader::from_path(dir.join("summary.csv")).ok()?;
    let idx = reader.headers().ok()?.iter().position(|h| h == "variant")?;
    reader
        .records()
        .map(|r| r.ok().and_then(|r| r.get(idx).map(str::to_string)))
        .collect()
}

/// Series files under `input`: the file itself, `input/series.csv`, or
/// one per variant sub-directory.
pub fn discover(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    if !input.is_dir() {
        return Err(input_error(input, "no such file or directory"));
    }
    if input.join("series.csv").is_file() {
        return Ok(vec![input.join("series.csv")]);
    }
    let mut found: Vec<PathBuf> = std::fs::read_dir(input)
        .map_err(CliError::io(input))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("series.csv").is_file())
        .collect();
    found.sort();
    if let Some(order) = summary_order(input) {
        let rank = |p: &PathBuf| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned());
            order.iter().position(|o| Some(o) == name.as_ref()).unwrap_or(usize::MAX)
        };
        found.sort_by_key(rank);
    }
    if found.is_empty() {
        return Err(input_error(input, "no series.csv found"));
    }
    Ok(found.into_iter().map(|p| p.join("series.csv")).collect())
}

/// Loads every variant reachable from `input`, with per-node values from
/// the `per_node.csv` next to each series file.
pub fn load(input: &Path) -> Result<Vec<VariantSeries>> {
    let mut all = Vec::new();
    for series_path in discover(input)? {
        let mut series = read_series(&series_path)?;
        let per_node_path = series_path.with_file_name("per_node.csv");
        if per_node_path.is_file() {
            let mut per_node = read_per_node(&per_node_path)?;
            for s in &mut series {
                s.per_node = per_node.remove(&s.label).unwrap_or_default();
            }
        }
        all.extend(series);
    }
    Ok(all)
}

fn line(label: String, t: &[f64], y: &[f64], colour: usize, dashed: bool) -> Series {
    Series {
        label,
        points: t.iter().copied().zip(y.iter().copied()).collect(),
        dashed,
        colour,
    }
}

/// The four figures as `(file name, svg text)`.
pub fn figures(variants: &[VariantSeries]) -> Vec<(&'static str, String)> {
    let error = LineChart {
        title: "Average squared estimation error".into(),
        x_label: "t".into(),
        y_label: "mean over nodes of |x - x_hat|^2".into(),
        log_y: true,
        series: variants
            .iter()
            .enumerate()
            .map(|(k, v)| line(v.label.clone(), &v.t, &v.avg_sq_err, k, false))
            .collect(),
    };
    let per_node = BarChart {
        title: "Time-averaged squared error per node".into(),
        x_label: "node".into(),
        y_label: "avg_sq_err_i".into(),
        groups: variants.iter().map(|v| (v.label.clone(), v.per_node.clone())).collect(),
    };
    let rate = LineChart {
        title: "Transmission rate".into(),
        x_label: "t".into(),
        y_label: "fraction of nodes transmitting".into(),
        log_y: false,
        series: variants
            .iter()
            .enumerate()
            .map(|(k, v)| line(v.label.clone(), &v.t, &v.rate, k, false))
            .collect(),
    };
    let any_robust = variants
        .iter()
        .any(|v| v.theta.iter().chain(&v.theta_bar).any(|x| *x != 0.0));
    let theta = LineChart {
        title: "Risk sensitivity parameters".into(),
        x_label: "t".into(),
        y_label: "mean over nodes".into(),
        log_y: false,
        series: variants
            .iter()
            .enumerate()
            .filter(|(_, v)| !any_robust || v.theta.iter().chain(&v.theta_bar).any(|x| *x != 0.0))
            .flat_map(|(k, v)| {
                [
                    line(format!("{} theta", v.label), &v.t, &v.theta, k, false),
                    line(format!("{} theta_bar", v.label), &v.t, &v.theta_bar, k, true),
                ]
            })
            .collect(),
    };
    vec![
        (FIGURES[0], line_chart(&error)),
        (FIGURES[1], bar_chart(&per_node)),
        (FIGURES[2], line_chart(&rate)),
        (FIGURES[3], line_chart(&theta)),
    ]
}

/// Renders the figures into `staging` under `prefix`.
pub fn stage_figures(staging: &mut Staging, prefix: &str, variants: &[VariantSeries]) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for (name, svg) in figures(variants) {
        let rel = if prefix.is_empty() {
            name.to_string()
        } else {
            format!("{prefix}/{name}")
        };
        staging.write_bytes(&rel, svg.as_bytes())?;
        names.push(rel);
    }
    Ok(names)
}
