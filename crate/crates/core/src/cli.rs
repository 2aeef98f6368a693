//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::csvio::{self, CsvError};
use crate::ecology::{
    build_sensitivity_samples, holdout_rms, integrate, ClassifyConfig, Classifier, EcologyConfig,
    GridFailure, HoldoutReport, ParamFile, SensitivityScan, SurfaceModel, Trend,
};
use crate::error::Error;
use crate::geometry::{point_in_hull, Point2};
use crate::pum::{build_pum, PumConfig};
use crate::spatial::bench::{run_benchmark, Structure};
use crate::spatial::MIN_POINTS;

const EXIT_CODES: &str = "\
Exit status:
  0  success
  1  other failure (I/O, ill-conditioned patch, ...)
  2  malformed input (CSV cell, parameter file, flag value)
  3  data sites not covered by any patch
  4  feeding rates a and/or b missing from the parameter file
  5  numerical blow-up during integration
  6  no grid point could be bracketed
Environment: PUMI_THREADS caps the number of worker threads.";

#[derive(Debug, Parser)]
#[command(name = "pumi", version, about = "Partition-of-unity interpolation and extinction-boundary surfaces", after_help = EXIT_CODES)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Interpolate scattered x,y,f data on a grid or at query points.
    Interpolate(InterpolateArgs),
    /// Time block, kd-tree and brute-force range queries.
    Benchmark(BenchmarkArgs),
    /// Integrate the population model and write t,H,G,T.
    Simulate(SimulateArgs),
    /// Bisect the extinction boundary over an (e, alpha) grid and interpolate it.
    Surface(SurfaceArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Kernel shape parameter (default 0.05 / patch radius).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Structure used to gather patch sites.
    #[arg(long, default_value = "block")]
    pub structure: Structure,
}

impl ModelArgs {
    fn config(&self) -> PumConfig {
        PumConfig {
            epsilon: self.epsilon,
            structure: self.structure,
            ..PumConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct InterpolateArgs {
    /// CSV with header x,y,f.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Evaluation grid, `N` or `NxM`, over the bounding rectangle (in-hull nodes only).
    #[arg(long, default_value = "40")]
    pub grid: String,
    /// CSV with header x,y (or x,y,f) of query points; replaces the grid.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Comma-separated site counts.
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
    /// Timing repetitions; the fastest is kept.
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    /// Structures to time.
    #[arg(long, value_delimiter = ',', default_value = "block,kdtree,brute")]
    pub structure: Vec<Structure>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON parameter file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Time step in days (overrides the file).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Horizon in days (overrides the file).
    #[arg(long)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    /// JSON parameter file; its mu is ignored, e and alpha are replaced by the grid.
    #[arg(long)]
    pub input: PathBuf,
    /// Prefix of the three output files.
    #[arg(long)]
    pub output: String,
    /// Sample grid `NExNALPHA`.
    #[arg(long, default_value = "10x11")]
    pub grid: String,
    #[arg(long, default_value = "0.55:0.65")]
    pub e_range: String,
    #[arg(long, default_value = "18:22")]
    pub alpha_range: String,
    /// Scanned mortality interval `LO:HI`.
    #[arg(long, default_value = "0.022:0.04")]
    pub mu_range: String,
    /// Steps of the downward mu march that looks for a bracket.
    #[arg(long, default_value_t = 200)]
    pub bracket_steps: usize,
    /// Surface evaluation grid, `N` or `NxM`.
    #[arg(long, default_value = "40")]
    pub eval_grid: String,
    /// Time step in days for classification (default from the file).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Classification horizon in days.
    #[arg(long, default_value_t = 36_500.0)]
    pub horizon: f64,
    /// Seed of the leave-20%-out split.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Trend removed before interpolating the samples: linear or none.
    #[arg(long, default_value = "linear", value_parser = parse_trend)]
    pub trend: Trend,
    #[command(flatten)]
    pub model: ModelArgs,
}

fn parse_trend(s: &str) -> std::result::Result<Trend, String> {
    match s {
        "linear" => Ok(Trend::Linear),
        "none" => Ok(Trend::None),
        _ => Err(format!("unknown trend '{s}' (expected linear or none)")),
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn malformed(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UncoveredSites(_) => 3,
            Error::MissingParameters(_) => 4,
            Error::NumericalBlowup { .. } => 5,
            Error::EmptyPointSet
            | Error::NonFinite(_)
            | Error::TooFewPoints { .. }
            | Error::DegenerateGeometry(_)
            | Error::DuplicateSites(..)
            | Error::DimensionMismatch { .. }
            | Error::InvalidShape(_)
            | Error::InvalidParameter(_)
            | Error::InvalidBracket(_) => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<CsvError> for CliError {
    fn from(e: CsvError) -> Self {
        let code = match e {
            CsvError::Malformed { .. } => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `N` or `NxM`.
pub fn parse_grid(s: &str) -> CliResult<(usize, usize)> {
    let bad = || CliError::malformed(format!("grid '{s}' is not N or NxM"));
    let parts: Vec<&str> = s.split('x').collect();
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
        .collect::<CliResult<_>>()?;
    match nums.as_slice() {
        [n] if *n > 0 => Ok((*n, *n)),
        [n, m] if *n > 0 && *m > 0 => Ok((*n, *m)),
        _ => Err(bad()),
    }
}

/// Parses `LO:HI` with `LO < HI`.
pub fn parse_range(s: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::malformed(format!("range '{s}' is not LO:HI"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError {
        code: 1,
        message: e.to_string(),
    })?;
    std::fs::write(path, text + "\n").map_err(|e| CliError {
        code: 1,
        message: format!("{}: {e}", path.display()),
    })
}

fn load_params(path: &Path) -> CliResult<EcologyConfig> {
    Ok(ParamFile::read(path)?.resolve()?)
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Interpolate(a) => interpolate(&a),
        Command::Benchmark(a) => benchmark(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Surface(a) => surface(&a),
    }
}

fn lin(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if n <= 1 {
        0.5 * (lo + hi)
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

fn interpolate(a: &InterpolateArgs) -> CliResult<()> {
    let (nx, ny) = parse_grid(&a.grid)?;
    let data = csvio::read_points_file(&a.input)?;
    let queries = a.queries.as_deref().map(csvio::read_queries_file).transpose()?;
    let model = build_pum(crate::pum::ScatteredData::new(data.sites, data.values)?, &a.model.config())?;
    let points: Vec<Point2> = match queries {
        Some(q) => q,
        None => {
            let r = model.rect();
            (0..ny)
                .flat_map(|j| {
                    (0..nx).map(move |i| {
                        Point2::new(
                            lin(r.min_x, r.max_x, nx, i),
                            lin(r.min_y, r.max_y, ny, j),
                        )
                    })
                })
                .filter(|p| point_in_hull(*p, model.hull()))
                .collect()
        }
    };
    let batch = model.eval_batch(&points);
    for (i, err) in &batch.failures {
        log::warn!("query {i} skipped: {err}");
    }
    let rows: Vec<Vec<f64>> = points
        .iter()
        .zip(&batch.values)
        .filter_map(|(p, v)| v.map(|v| vec![p.x, p.y, v]))
        .collect();
    csvio::write_table_file(&a.output, &["x", "y", "value"], &rows)?;
    log::info!("{} value(s) written to {}", rows.len(), a.output.display());
    Ok(())
}

fn benchmark(a: &BenchmarkArgs) -> CliResult<()> {
    if a.sizes.is_empty() || a.repeats == 0 {
        return Err(CliError::malformed("need at least one size and one repeat"));
    }
    let rows = run_benchmark(&a.sizes, a.seed, &a.structure, a.repeats)?;
    let mut w = csv::Writer::from_path(&a.output).map_err(|e| CliError::from(CsvError::from(e)))?;
    for r in &rows {
        w.serialize(r).map_err(|e| CliError::from(CsvError::from(e)))?;
    }
    w.flush().map_err(|e| CliError::from(CsvError::from(csv::Error::from(e))))?;
    Ok(())
}

fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let cfg = load_params(&a.input)?;
    let dt = a.dt.unwrap_or(cfg.dt);
    let horizon = a.horizon.unwrap_or(cfg.horizon);
    let tr = integrate(&cfg.initial_state, &cfg.params, horizon, dt)?;
    if tr.clamped_steps > 0 {
        log::warn!("{} step(s) clamped to nonnegative populations", tr.clamped_steps);
    }
    let rows: Vec<Vec<f64>> = tr
        .times
        .iter()
        .zip(&tr.states)
        .map(|(t, s)| vec![*t, s.h, s.g, s.t])
        .collect();
    csvio::write_table_file(&a.output, &["t", "H", "G", "T"], &rows)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SurfaceReport {
    grid_points: usize,
    samples: usize,
    failures: Vec<GridFailure>,
    mu_range: (f64, f64),
    e_range: (f64, f64),
    alpha_range: (f64, f64),
    trend: Trend,
    surface_built: bool,
    surface_note: Option<String>,
    surface_points: usize,
    holdout: Option<HoldoutReport>,
    holdout_rms_fraction_of_mu_range: Option<f64>,
}

fn surface(a: &SurfaceArgs) -> CliResult<()> {
    let (ne, nalpha) = parse_grid(&a.grid)?;
    let (eval_ne, eval_nalpha) = parse_grid(&a.eval_grid)?;
    let e_range = parse_range(&a.e_range)?;
    let alpha_range = parse_range(&a.alpha_range)?;
    let mu_range = parse_range(&a.mu_range)?;
    let cfg = load_params(&a.input)?;
    let grid = SensitivityScan::regular_grid(e_range, ne, alpha_range, nalpha);
    let mut scan = SensitivityScan::new(cfg.params, cfg.initial_state, grid, mu_range);
    scan.bracket_steps = a.bracket_steps;
    scan.classifier = Classifier {
        config: ClassifyConfig {
            horizon: a.horizon,
            dt: a.dt.unwrap_or(cfg.dt),
            ..ClassifyConfig::default()
        },
        ..Classifier::default()
    };
    let report = build_sensitivity_samples(&scan)?;

    let sample_rows: Vec<Vec<String>> = report
        .samples
        .iter()
        .map(|s| {
            vec![
                s.e.to_string(),
                s.alpha.to_string(),
                s.mu.to_string(),
                s.iterations.to_string(),
                s.bracket_width.to_string(),
            ]
        })
        .collect();
    csvio::write_records_file(
        Path::new(&format!("{}_samples.csv", a.output)),
        &["e", "alpha", "mu_star", "iterations", "bracket_width"],
        &sample_rows,
    )?;

    let mut out = SurfaceReport {
        grid_points: scan.grid.len(),
        samples: report.samples.len(),
        failures: report.failures.clone(),
        mu_range,
        e_range,
        alpha_range,
        trend: a.trend,
        surface_built: false,
        surface_note: None,
        surface_points: 0,
        holdout: None,
        holdout_rms_fraction_of_mu_range: None,
    };
    let report_path = format!("{}_report.json", a.output);
    if report.samples.is_empty() {
        write_json(Path::new(&report_path), &out)?;
        return Err(CliError {
            code: 6,
            message: format!("all {} grid point(s) failed to bracket the boundary", scan.grid.len()),
        });
    }
    if report.samples.len() < MIN_POINTS {
        out.surface_note = Some(format!(
            "{} sample(s) are too few for a surface (need {MIN_POINTS})",
            report.samples.len()
        ));
        log::warn!("{}", out.surface_note.as_deref().unwrap_or_default());
    } else {
        let config = a.model.config();
        let model = SurfaceModel::fit(&report.samples, &config, a.trend)?;
        let rows: Vec<Vec<f64>> = model
            .eval_grid(eval_ne, eval_nalpha)?
            .into_iter()
            .map(|(e, alpha, mu)| vec![e, alpha, mu])
            .collect();
        csvio::write_table_file(
            Path::new(&format!("{}_surface.csv", a.output)),
            &["e", "alpha", "mu_interpolated"],
            &rows,
        )?;
        out.surface_built = true;
        out.surface_points = rows.len();
        match holdout_rms(&report.samples, 0.2, a.seed, &config, a.trend) {
            Ok(h) => {
                out.holdout_rms_fraction_of_mu_range = Some(h.rms / (mu_range.1 - mu_range.0));
                out.holdout = Some(h);
            }
            Err(e) => {
                log::warn!("holdout skipped: {e}");
                out.surface_note = Some(format!("holdout skipped: {e}"));
            }
        }
    }
    write_json(Path::new(&report_path), &out)?;
    Ok(())
}

/// Sizes the global rayon pool from `PUMI_THREADS` when set.
pub fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("PUMI_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::malformed(format!("PUMI_THREADS = '{v}' is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError {
                code: 1,
                message: e.to_string(),
            })?;
    }
    Ok(())
}
