//! `splinefit analyze | fit | synth`.
//!
//! Settings come from flags, then from an optional TOML file given with
//! `--config`, then from built-in defaults. Exit codes: 0 success (or
//! certified full rank for `analyze`), 1 any error, 2 certified deficient,
//! 3 unknown.

mod csvio;
mod json;

use std::f64::consts::PI;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::design::{Model, SplineBasis};
use crate::fitter::{model_values, FitOptions, FitResult, Fitter, GridConfig, Signal};
use crate::prototype::{sample, PrototypeFn};
use crate::singularity::{analyze_matrix, SingularityVerdict, VerdictStatus};
use crate::spline::{SplineSpec, TimeGrid, TimeMap};
use crate::Tolerances;

pub use csvio::{parse_signal, CsvError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_DEFICIENT: i32 = 2;
pub const EXIT_UNKNOWN: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "splinefit",
    version,
    about = "Spline × prototype signal fitting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Screen the design matrix at one (omega, tau) for singularity.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Report the sufficient conditions only, without a numeric rank fallback.
        #[arg(long)]
        theorems_only: bool,
        /// Write the assembled matrix, row-major, to this file.
        #[arg(long, value_name = "PATH")]
        dump_matrix: Option<PathBuf>,
    },
    /// Fit a signal at one cell or over an (omega, tau) grid.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Write a synthetic signal from given spline coefficients.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        /// Coefficients of the modulated spline.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        coeffs: Option<Vec<f64>>,
        /// Coefficients of the shift spline (Model 2).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        coeffs2: Option<Vec<f64>>,
        /// Draw coefficients uniformly from [-1, 1] using --seed.
        #[arg(long)]
        random_coeffs: bool,
        /// Amplitude of uniform noise added to every sample.
        #[arg(long)]
        noise: Option<f64>,
    },
}

#[derive(Debug, Args, Default)]
struct CommonArgs {
    /// Signal CSV with header "t,y".
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// TOML file with any of the long options as keys (dashes as underscores).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (fit, analyze) or CSV file (synth).
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    #[arg(long, value_parser = ["1", "2"])]
    model: Option<String>,
    #[arg(long)]
    degree: Option<usize>,
    /// Number of equidistant intervals over the signal's time span.
    #[arg(long, conflicts_with = "knots")]
    intervals: Option<usize>,
    /// Explicit knots, spanning the first to the last sample time.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    knots: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "omega_range")]
    omega: Option<String>,
    /// START:END:STEP, inclusive; "pi" is understood, e.g. 0:2pi:pi/8.
    #[arg(long, value_name = "W0:WF:STEP")]
    omega_range: Option<String>,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "tau_range")]
    tau: Option<String>,
    #[arg(long, value_name = "T0:TF:STEP")]
    tau_range: Option<String>,
    #[arg(long)]
    eps_zero: Option<f64>,
    #[arg(long)]
    eps_rank: Option<f64>,
    /// Work in raw time instead of mapping the signal span onto [0, 1].
    #[arg(long)]
    no_normalize: bool,
    /// Evaluate grid cells concurrently.
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Synthetic grid size when no --input is given.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    t_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_end: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    model: Option<u8>,
    degree: Option<usize>,
    intervals: Option<usize>,
    knots: Option<Vec<f64>>,
    omega: Option<Scalar>,
    omega_range: Option<String>,
    tau: Option<Scalar>,
    tau_range: Option<String>,
    eps_zero: Option<f64>,
    eps_rank: Option<f64>,
    normalize: Option<bool>,
    parallel: Option<bool>,
    seed: Option<u64>,
    samples: Option<usize>,
    t_start: Option<f64>,
    t_end: Option<f64>,
    coeffs: Option<Vec<f64>>,
    coeffs2: Option<Vec<f64>>,
    random_coeffs: Option<bool>,
    noise: Option<f64>,
    theorems_only: Option<bool>,
}

/// A number or an expression such as `"pi/8"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Number(f64),
    Text(String),
}

impl Scalar {
    fn value(&self) -> Result<f64, String> {
        match self {
            Scalar::Number(v) => Ok(*v),
            Scalar::Text(s) => parse_scalar(s),
        }
    }
}

/// Parses `1.5`, `pi`, `2pi`, `2*pi`, `pi/8`, `-3pi/4`.
pub fn parse_scalar(text: &str) -> Result<f64, String> {
    let s = text.trim().replace('π', "pi");
    let bad = || format!("invalid number \"{text}\"");
    let Some((coef, rest)) = s.split_once("pi") else {
        return s.parse::<f64>().map_err(|_| bad());
    };
    let coef = coef.trim().trim_end_matches('*').trim();
    let c = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    let rest = rest.trim();
    let d = if rest.is_empty() {
        1.0
    } else {
        let d = rest.strip_prefix('/').ok_or_else(bad)?;
        d.trim().parse::<f64>().map_err(|_| bad())?
    };
    let v = c * PI / d;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

/// `START:END:STEP`.
pub fn parse_range(text: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("range \"{text}\" must look like START:END:STEP"));
    }
    Ok((
        parse_scalar(parts[0])?,
        parse_scalar(parts[1])?,
        parse_scalar(parts[2])?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Axis {
    Fixed(f64),
    Range(f64, f64, f64),
}

impl Axis {
    fn bounds(self) -> (f64, f64, f64) {
        match self {
            Axis::Fixed(v) => (v, v, 1.0),
            Axis::Range(a, b, s) => (a, b, s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Knots {
    Intervals(usize),
    Explicit(Vec<f64>),
}

/// Flags, config file and defaults merged.
#[derive(Debug, Clone)]
struct Settings {
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    model: Model,
    degree: Option<usize>,
    knots: Option<Knots>,
    omega: Option<Axis>,
    tau: Option<Axis>,
    tolerances: Tolerances,
    normalize: bool,
    parallel: bool,
    seed: u64,
    samples: Option<usize>,
    t_start: Option<f64>,
    t_end: Option<f64>,
    coeffs: Option<Vec<f64>>,
    coeffs2: Option<Vec<f64>>,
    random_coeffs: bool,
    noise: f64,
    theorems_only: bool,
}

fn axis(
    fixed_flag: Option<&str>,
    range_flag: Option<&str>,
    fixed_cfg: Option<&Scalar>,
    range_cfg: Option<&str>,
    name: &str,
) -> Result<Option<Axis>, String> {
    // a flag for the axis overrides anything the file says about it
    let (fixed, range) = if fixed_flag.is_some() || range_flag.is_some() {
        (fixed_flag.map(parse_scalar).transpose()?, range_flag)
    } else {
        (fixed_cfg.map(Scalar::value).transpose()?, range_cfg)
    };
    match (fixed, range) {
        (Some(_), Some(_)) => Err(format!("give either {name} or {name}_range, not both")),
        (Some(v), None) => Ok(Some(Axis::Fixed(v))),
        (None, Some(r)) => {
            let (a, b, s) = parse_range(r)?;
            Ok(Some(Axis::Range(a, b, s)))
        }
        (None, None) => Ok(None),
    }
}

impl Settings {
    fn resolve(args: &CommonArgs, extra: ConfigFile) -> Result<Self, String> {
        let cfg = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
                toml::from_str::<ConfigFile>(&text)
                    .map_err(|e| format!("invalid config {}: {e}", path.display()))?
            }
            None => ConfigFile::default(),
        };
        let model = match args.model.as_deref() {
            Some("2") => 2,
            Some(_) => 1,
            None => cfg.model.unwrap_or(1),
        };
        let model =
            Model::try_from(model).map_err(|_| format!("model must be 1 or 2, got {model}"))?;
        let knots = match (&args.intervals, &args.knots) {
            (Some(n), _) => Some(Knots::Intervals(*n)),
            (_, Some(k)) => Some(Knots::Explicit(k.clone())),
            (None, None) => match (cfg.intervals, cfg.knots) {
                (Some(_), Some(_)) => {
                    return Err("give either intervals or knots, not both".into());
                }
                (Some(n), None) => Some(Knots::Intervals(n)),
                (None, Some(k)) => Some(Knots::Explicit(k)),
                (None, None) => None,
            },
        };
        let defaults = Tolerances::default();
        let tolerances = Tolerances {
            eps_zero: args.eps_zero.or(cfg.eps_zero).unwrap_or(defaults.eps_zero),
            eps_rank: args.eps_rank.or(cfg.eps_rank).unwrap_or(defaults.eps_rank),
            certify: true,
        };
        if !(tolerances.eps_zero >= 0.0 && tolerances.eps_rank > 0.0) {
            return Err("eps_zero must be ≥ 0 and eps_rank > 0".into());
        }
        Ok(Settings {
            input: args.input.clone().or(cfg.input),
            output: args.output.clone().or(cfg.output),
            model,
            degree: args.degree.or(cfg.degree),
            knots,
            omega: axis(
                args.omega.as_deref(),
                args.omega_range.as_deref(),
                cfg.omega.as_ref(),
                cfg.omega_range.as_deref(),
                "omega",
            )?,
            tau: axis(
                args.tau.as_deref(),
                args.tau_range.as_deref(),
                cfg.tau.as_ref(),
                cfg.tau_range.as_deref(),
                "tau",
            )?,
            tolerances,
            normalize: !args.no_normalize && cfg.normalize.unwrap_or(true),
            parallel: args.parallel || cfg.parallel.unwrap_or(false),
            seed: args.seed.or(cfg.seed).unwrap_or(0),
            samples: args.samples.or(cfg.samples),
            t_start: args.t_start.or(cfg.t_start),
            t_end: args.t_end.or(cfg.t_end),
            coeffs: extra.coeffs.or(cfg.coeffs),
            coeffs2: extra.coeffs2.or(cfg.coeffs2),
            random_coeffs: extra.random_coeffs.unwrap_or(false)
                || cfg.random_coeffs.unwrap_or(false),
            noise: extra.noise.or(cfg.noise).unwrap_or(0.0),
            theorems_only: extra.theorems_only.unwrap_or(false)
                || cfg.theorems_only.unwrap_or(false),
        })
    }

    fn spec(&self, grid: &TimeGrid) -> Result<SplineSpec, String> {
        let degree = self.degree.ok_or("missing --degree")?;
        let spec = match &self.knots {
            Some(Knots::Intervals(n)) => {
                SplineSpec::equidistant(degree, *n, grid.first(), grid.last())
            }
            Some(Knots::Explicit(k)) => SplineSpec::new(degree, k.clone()),
            None => return Err("missing --intervals or --knots".into()),
        }
        .map_err(|e| e.to_string())?;
        spec.check_bound(grid).map_err(|e| e.to_string())?;
        Ok(spec)
    }

    fn single_cell(&self) -> Result<(f64, f64), String> {
        match (self.omega, self.tau) {
            (Some(Axis::Fixed(w)), Some(Axis::Fixed(t))) => Ok((w, t)),
            (Some(Axis::Fixed(w)), None) => Ok((w, 0.0)),
            (None, _) => Err("missing --omega".into()),
            _ => Err("this command needs a single --omega/--tau, not a range".into()),
        }
    }

    fn grid_config(&self) -> GridConfig {
        let (w0, w1, ws) = self.omega.unwrap_or(Axis::Range(1.0, 16.0, 1.0)).bounds();
        let (t0, t1, ts) = self
            .tau
            .unwrap_or(Axis::Range(0.0, 2.0 * PI, PI / 8.0))
            .bounds();
        GridConfig {
            omega_start: w0,
            omega_end: w1,
            omega_step: ws,
            tau_start: t0,
            tau_end: t1,
            tau_step: ts,
        }
    }

    fn is_sweep(&self) -> bool {
        !matches!(
            (self.omega, self.tau),
            (Some(Axis::Fixed(_)), Some(Axis::Fixed(_)))
        )
    }

    fn time_map(&self, grid: &TimeGrid) -> TimeMap {
        if self.normalize {
            TimeMap::normalizing(grid)
        } else {
            TimeMap::IDENTITY
        }
    }
}

struct LoadedInput {
    grid: TimeGrid,
    values: Option<Vec<f64>>,
    path: Option<PathBuf>,
    digest: Option<String>,
}

fn load_input(settings: &Settings, require_values: bool) -> Result<LoadedInput, String> {
    if let Some(path) = &settings.input {
        let bytes =
            std::fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let (t, y) = parse_signal(&bytes).map_err(|e| format!("{}: {e}", path.display()))?;
        let grid = TimeGrid::new(t).map_err(|e| e.to_string())?;
        return Ok(LoadedInput {
            grid,
            values: Some(y),
            path: Some(path.clone()),
            digest: Some(hex::encode(Sha256::digest(&bytes))),
        });
    }
    if require_values {
        return Err("missing --input".into());
    }
    let grid = synthetic_grid(settings)?;
    Ok(LoadedInput {
        grid,
        values: None,
        path: None,
        digest: None,
    })
}

fn synthetic_grid(settings: &Settings) -> Result<TimeGrid, String> {
    let n = settings
        .samples
        .ok_or("missing --input (or --samples for a synthetic grid)")?;
    let start = settings.t_start.unwrap_or(0.0);
    let end = settings
        .t_end
        .ok_or("missing --t-end for the synthetic grid")?;
    TimeGrid::uniform(start, end, n).map_err(|e| e.to_string())
}

fn output_dir(settings: &Settings) -> Result<PathBuf, String> {
    let dir = settings
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| format!("cannot create output directory {}: {e}", dir.display()))?;
    Ok(dir)
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn report_header(
    command: &str,
    settings: &Settings,
    input: &LoadedInput,
    spec: &SplineSpec,
) -> Value {
    json!({
        "tool": "splinefit",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "timestamp": timestamp(),
        "input": {
            "path": input.path.as_ref().map(|p| p.display().to_string()),
            "sha256": input.digest,
            "samples": input.grid.len(),
            "t_first": input.grid.first(),
            "t_last": input.grid.last(),
        },
        "config": {
            "model": settings.model,
            "degree": spec.degree(),
            "knots": spec.knots(),
            "eps_zero": settings.tolerances.eps_zero,
            "eps_rank": settings.tolerances.eps_rank,
            "normalize": settings.normalize,
        },
    })
}

fn verdict_code(status: &VerdictStatus) -> i32 {
    match status {
        VerdictStatus::CertifiedFullRank { .. } => EXIT_OK,
        VerdictStatus::CertifiedDeficient { .. } => EXIT_DEFICIENT,
        VerdictStatus::Unknown { .. } => EXIT_UNKNOWN,
    }
}

fn describe(status: &VerdictStatus) -> String {
    let by = |c: &crate::singularity::Certifier| match c {
        crate::singularity::Certifier::Theorem1 => "counting condition (Model 1)",
        crate::singularity::Certifier::Theorem2 => "elimination condition (Model 2)",
        crate::singularity::Certifier::Numeric => "numeric rank",
    };
    match status {
        VerdictStatus::CertifiedFullRank { by: c } => format!("certified full rank by {}", by(c)),
        VerdictStatus::CertifiedDeficient { by: c, reason } => {
            format!("certified rank deficient by {} ({reason})", by(c))
        }
        VerdictStatus::Unknown { reason } => format!("unknown ({reason})"),
    }
}

fn print_verdict(verdict: &SingularityVerdict) {
    println!(
        "{:>4} {:>8} {:>8} {:>9} {:>8}",
        "k", "N_k", "Z_k", "required", "margin"
    );
    for d in &verdict.per_interval {
        let note = d
            .note
            .as_deref()
            .map(|n| format!("  {n}"))
            .unwrap_or_default();
        println!(
            "{:>4} {:>8} {:>8} {:>9} {:>8}{note}",
            d.k, d.n_k, d.z_k, d.required, d.margin
        );
    }
    if let Some(r) = verdict.numeric_rank {
        println!("numeric rank: {r} of {} columns", verdict.columns);
    }
    println!("verdict: {}", describe(&verdict.status));
}

fn cmd_analyze(settings: &Settings, dump: Option<&Path>) -> Result<i32, String> {
    let input = load_input(settings, false)?;
    let spec = settings.spec(&input.grid)?;
    let (omega, tau) = settings.single_cell()?;
    let tol = Tolerances {
        certify: !settings.theorems_only,
        ..settings.tolerances
    };
    let basis = SplineBasis::new(&spec, &input.grid, settings.time_map(&input.grid))
        .map_err(|e| e.to_string())?;
    let samples =
        sample(&PrototypeFn::sinusoid(omega, tau), &input.grid).map_err(|e| e.to_string())?;
    let dm = basis
        .build(settings.model, &samples)
        .map_err(|e| e.to_string())?;
    let verdict = analyze_matrix(&dm, &spec, basis.assignment(), &samples, &tol);
    if let Some(path) = dump {
        write_file(path, &dm.dump())?;
    }
    print_verdict(&verdict);
    if settings.output.is_some() {
        let dir = output_dir(settings)?;
        let mut report = report_header("analyze", settings, &input, &spec);
        report["omega"] = json!(omega);
        report["tau"] = json!(tau);
        report["verdict"] = serde_json::to_value(&verdict).map_err(|e| e.to_string())?;
        write_file(&dir.join("report.json"), &json::to_string(&report))?;
    }
    Ok(verdict_code(&verdict.status))
}

fn fit_summary(fit: &FitResult) -> Value {
    json!({
        "omega": fit.omega,
        "tau": fit.tau,
        "sse": fit.sse,
        "method": fit.method().as_str(),
        "fallback": fit.solution.fallback,
        "condition_estimate": fit.solution.condition_estimate,
        "rank": fit.solution.rank,
        "verdict": fit.verdict,
    })
}

fn cmd_fit(settings: &Settings) -> Result<i32, String> {
    let input = load_input(settings, true)?;
    let spec = settings.spec(&input.grid)?;
    let values = input.values.clone().expect("values loaded");
    let signal = Signal::new(input.grid.clone(), values.clone()).map_err(|e| e.to_string())?;
    let options = FitOptions {
        tolerances: settings.tolerances,
        normalize: settings.normalize,
        parallel: settings.parallel,
        ..FitOptions::default()
    };
    let fitter = Fitter::new(settings.model, signal, &spec, options).map_err(|e| e.to_string())?;
    let cfg = settings.grid_config();
    let result = fitter.grid_search(&cfg).map_err(|e| e.to_string())?;
    let best = &result.best;
    let dir = output_dir(settings)?;

    let mut report = report_header("fit", settings, &input, &spec);
    report["best"] = fit_summary(best);
    report["normalization"] = json!({
        "origin": best.normalization.origin,
        "scale": best.normalization.scale,
    });
    report["coefficients"] = json!({
        "modulated": best.modulated_coeffs(),
        "shift": best.shift_coeffs(),
    });
    report["grid"] = json!({
        "omega": [cfg.omega_start, cfg.omega_end, cfg.omega_step],
        "tau": [cfg.tau_start, cfg.tau_end, cfg.tau_step],
        "cells": result.table.len(),
        "best_index": result.best_index,
        "ties": result.ties.iter().map(|&i| {
            let c = &result.table[i];
            json!({ "omega": c.omega, "tau": c.tau, "sse": c.sse })
        }).collect::<Vec<_>>(),
    });
    write_file(&dir.join("report.json"), &json::to_string(&report))?;

    let fitted = best.predict(input.grid.times());
    let rows: Vec<Vec<String>> = input
        .grid
        .times()
        .iter()
        .zip(&values)
        .zip(&fitted)
        .map(|((&t, &y), &f)| {
            vec![
                csvio::num(t),
                csvio::num(y),
                csvio::num(f),
                csvio::num(y - f),
            ]
        })
        .collect();
    csvio::write_table(
        &dir.join("fit.csv"),
        &["t", "y", "model_value", "residual"],
        &rows,
    )
    .map_err(|e| format!("cannot write fit.csv: {e}"))?;

    if settings.is_sweep() {
        let rows: Vec<Vec<String>> = result
            .table
            .iter()
            .map(|c| {
                vec![
                    csvio::num(c.omega),
                    csvio::num(c.tau),
                    csvio::num(c.sse),
                    c.method.as_str().to_string(),
                ]
            })
            .collect();
        csvio::write_table(
            &dir.join("grid.csv"),
            &["omega", "tau", "sse", "solver_method"],
            &rows,
        )
        .map_err(|e| format!("cannot write grid.csv: {e}"))?;
    }

    println!(
        "best omega={} tau={} sse={} method={}",
        csvio::num(best.omega),
        csvio::num(best.tau),
        csvio::num(best.sse),
        best.method().as_str()
    );
    if !result.ties.is_empty() {
        println!(
            "{} other cell(s) tie with the best within tolerance",
            result.ties.len()
        );
    }
    Ok(EXIT_OK)
}

fn cmd_synth(settings: &Settings) -> Result<i32, String> {
    let grid = synthetic_grid(settings)?;
    let spec = settings.spec(&grid)?;
    let (omega, tau) = settings.single_cell()?;
    let dim = spec.basis_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut draw = |given: &Option<Vec<f64>>, name: &str| -> Result<Vec<f64>, String> {
        match given {
            Some(c) if c.len() == dim => Ok(c.clone()),
            Some(c) => Err(format!("{name} needs {dim} values, got {}", c.len())),
            None if settings.random_coeffs => {
                Ok((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            }
            None => Err(format!("missing --{name} (or --random-coeffs)")),
        }
    };
    let x1 = draw(&settings.coeffs, "coeffs")?;
    let x2 = match settings.model {
        Model::One => None,
        Model::Two => Some(draw(&settings.coeffs2, "coeffs2")?),
    };
    let mut y = model_values(
        &spec,
        settings.time_map(&grid),
        omega,
        tau,
        &x1,
        x2.as_deref(),
        grid.times(),
    );
    if settings.noise > 0.0 {
        for v in &mut y {
            *v += rng.random_range(-settings.noise..=settings.noise);
        }
    }
    let rows: Vec<Vec<String>> = grid
        .times()
        .iter()
        .zip(&y)
        .map(|(&t, &v)| vec![csvio::num(t), csvio::num(v)])
        .collect();
    match &settings.output {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)
                    .map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
            }
            csvio::write_table(path, &["t", "y"], &rows)
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        }
        None => {
            println!("t,y");
            for r in rows {
                println!("{}", r.join(","));
            }
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors must not collide with the analyze verdict codes
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::Analyze {
            common,
            theorems_only,
            dump_matrix,
        } => Settings::resolve(
            common,
            ConfigFile {
                theorems_only: Some(*theorems_only),
                ..ConfigFile::default()
            },
        )
        .and_then(|s| cmd_analyze(&s, dump_matrix.as_deref())),
        Command::Fit { common } => {
            Settings::resolve(common, ConfigFile::default()).and_then(|s| cmd_fit(&s))
        }
        Command::Synth {
            common,
            coeffs,
            coeffs2,
            random_coeffs,
            noise,
        } => Settings::resolve(
            common,
            ConfigFile {
                coeffs: coeffs.clone(),
                coeffs2: coeffs2.clone(),
                random_coeffs: Some(*random_coeffs),
                noise: *noise,
                ..ConfigFile::default()
            },
        )
        .and_then(|s| cmd_synth(&s)),
    };
    match outcome {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_ERROR
        }
    }
}
