//! Command-line interface and the commands behind it.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use rdkf_core::dkf::{write_event_log, BarMatrix};
use rdkf_core::harness::{compare_variants, write_per_node, write_series, write_summary, Comparison, Experiment, ExperimentConfig};

use crate::config::{resolve, Overrides, RunConfig};
use crate::error::{CliError, Result};
use crate::manifest::{self, ManifestInfo, MANIFEST_FILE};
use crate::output::Staging;
use crate::plot;

#[derive(Debug, Parser)]
#[command(name = "rdkf", version, about = "Robust event-triggered distributed Kalman filter experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo run of one filter variant.
    Simulate(RunArgs),
    /// Paired Monte Carlo comparison of several variants on one world.
    Compare(RunArgs),
    /// Render SVG figures from the CSV outputs of a previous run.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Built-in configuration (paper, paper-fig1, smoke).
    #[arg(long)]
    pub preset: Option<String>,
    /// TOML config file layered over the preset; a previous manifest works too.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Filter variant (rdkf, dkf).
    #[arg(long)]
    pub filter: Option<String>,
    /// Divergence tolerance of the filter and budget of the world.
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Data-generating world (nominal, least-favorable).
    #[arg(long)]
    pub world: Option<String>,
    /// Tilt policy of the least-favorable world (saturating, filter-theta).
    #[arg(long)]
    pub tilt: Option<String>,
    /// Horizon in ticks.
    #[arg(long = "T", value_name = "T")]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of nodes; also sets the extra edge count to twice this unless given.
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub sensors: Option<usize>,
    #[arg(long)]
    pub extra_edges: Option<usize>,
    /// Matrix carried by the replicated prediction chain (deflated, literal).
    #[arg(long)]
    pub bar_matrix: Option<BarMatrix>,
    /// Also write the per-tick trigger log of run 0.
    #[arg(long)]
    pub event_log: bool,
    /// Also write the state and output trace of run 0.
    #[arg(long)]
    pub trace: bool,
    /// Also render the figures into `<out>/plots`.
    #[arg(long)]
    pub plot: bool,
    /// Output directory.
    #[arg(long, env = "RDKF_OUT", default_value = "results")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// Output directory of a run, a variant sub-directory, or a series.csv.
    pub input: PathBuf,
    /// Directory for the figures; defaults to `plots` next to the input.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    pub fn overrides(&self) -> Overrides {
        let extra_edges = self.extra_edges;
        Overrides {
            filter: self.filter.clone(),
            b: self.b,
            alpha: self.alpha,
            beta: self.beta,
            delta: self.delta,
            world: self.world.clone(),
            tilt: self.tilt.clone(),
            horizon: self.horizon,
            runs: self.runs,
            seed: self.seed,
            nodes: self.nodes,
            sensors: self.sensors,
            extra_edges,
            bar_matrix: self.bar_matrix,
            event_log: self.event_log,
            trace: self.trace,
        }
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        resolve(self.preset.as_deref(), self.config.as_deref(), &self.overrides())
    }
}

pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    match &cli.command {
        Command::Simulate(args) => {
            let cfg = args.resolve()?;
            execute("simulate", &cfg, vec![cfg.filter.clone()], &args.out, args.plot)
        }
        Command::Compare(args) => {
            let mut cfg = args.resolve()?;
            cfg.compare = cfg.compare_filters();
            let filters = cfg.compare.clone();
            execute("compare", &cfg, filters, &args.out, args.plot)
        }
        Command::Plot(args) => plot_command(&args.input, args.out.as_deref()),
    }
}

fn layout(cfg: &RunConfig, labels: &[String], plots: bool) -> Vec<String> {
    let mut files = vec![MANIFEST_FILE.to_string(), "summary.csv".to_string()];
    if cfg.outputs.trace {
        files.push("trajectory.csv".into());
    }
    for label in labels {
        files.push(format!("{label}/series.csv"));
        files.push(format!("{label}/per_node.csv"));
        if cfg.outputs.event_log {
            files.push(format!("{label}/events.csv"));
        }
    }
    if plots {
        files.extend(plot::FIGURES.iter().map(|f| format!("plots/{f}")));
    }
    files
}

fn csv_body<F>(path: &str, write: F) -> impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> Result<()>
where
    F: FnOnce(&mut std::io::BufWriter<std::fs::File>) -> rdkf_core::Result<()>,
{
    let path = path.to_string();
    move |w| {
        write(w).map_err(|e| CliError::Input {
            path: PathBuf::from(path),
            message: e.to_string(),
        })
    }
}

/// Runs `filters` on the configured world and writes every artifact atomically.
pub fn execute(command: &str, cfg: &RunConfig, filters: Vec<rdkf_core::harness::FilterConfig>, out: &Path, plots: bool) -> Result<Vec<PathBuf>> {
    let experiments: Vec<ExperimentConfig> = filters.iter().map(|f| cfg.experiment(f)).collect();
    let labels: Vec<String> = filters.iter().map(|f| f.label()).collect();
    let mut staging = Staging::new(out)?;
    let info = ManifestInfo::new(command, layout(cfg, &labels, plots));
    staging.write_bytes(MANIFEST_FILE, manifest::render(cfg, info)?.as_bytes())?;

    let Comparison { rows, results } = compare_variants(&experiments)?;
    staging.write("summary.csv", csv_body("summary.csv", |w| write_summary(&rows, w)))?;
    for result in &results {
        let dir = &result.label;
        let one = std::slice::from_ref(result);
        let rel = format!("{dir}/series.csv");
        staging.write(&rel, csv_body(&rel, |w| write_series(one, w)))?;
        let rel = format!("{dir}/per_node.csv");
        staging.write(&rel, csv_body(&rel, |w| write_per_node(one, w)))?;
    }
    if cfg.outputs.event_log || cfg.outputs.trace {
        for (k, exp_cfg) in experiments.iter().enumerate() {
            let experiment = Experiment::prepare(exp_cfg)?;
            if cfg.outputs.trace && k == 0 {
                let trajectory = experiment.trajectory(0)?;
                staging.write("trajectory.csv", csv_body("trajectory.csv", |w| trajectory.write_csv(w)))?;
            }
            if cfg.outputs.event_log {
                let (_, events) = experiment.run_logged(0)?;
                let rel = format!("{}/events.csv", labels[k]);
                staging.write(&rel, csv_body(&rel, |w| write_event_log(&events, w)))?;
            }
        }
    }
    if plots {
        let variants: Vec<plot::VariantSeries> = results
            .iter()
            .map(|r| {
                let mut series = plot::VariantSeries {
                    label: r.label.clone(),
                    per_node: r.mean.per_node.clone(),
                    ..Default::default()
                };
                for t in 0..r.mean.avg_sq_err.len() {
                    series.t.push(t as f64);
                    series.avg_sq_err.push(r.mean.avg_sq_err[t]);
                    series.rate.push(r.mean.rate[t]);
                    series.theta.push(r.mean.theta[t]);
                    series.theta_bar.push(r.mean.theta_bar[t]);
                }
                series
            })
            .collect();
        plot::stage_figures(&mut staging, "plots", &variants)?;
    }
    staging.commit()
}

pub fn plot_command(input: &Path, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let variants = plot::load(input)?;
    let out = match out {
        Some(dir) => dir.to_path_buf(),
        None => {
            let base = if input.is_dir() { input } else { input.parent().unwrap_or(Path::new(".")) };
            base.join("plots")
        }
    };
    let mut staging = Staging::new(&out)?;
    plot::stage_figures(&mut staging, "", &variants)?;
    staging.commit()
}
