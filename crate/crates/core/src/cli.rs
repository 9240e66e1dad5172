//! Command-line front end.
//!
//! Every run writes one CSV (to `--out` or stdout) and one JSON manifest
//! (to `<out>.manifest.json`, or a single line on stderr when the CSV goes
//! to stdout). Numerical failures exit with status 1 and a one-line JSON
//! error on stderr; usage errors exit with status 2.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::classifier::{run_benchmark, BenchmarkConfig, Subset, DEFAULT_K, DEFAULT_TEST_SIZE};
use crate::error::{Error, Result};
use crate::identifiability::{collinearity_scan, ScanConfig};
use crate::kernel::ReducedParams;
use crate::kriging::kriging_weights;
use crate::sensitivity::{run_study, Omega2Mode, Response, StudyConfig, StudyGrid, DEFAULT_BASE_COUNT};

pub const THREADS_ENV: &str = "KRIGESENSE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "krigesense", version, about = "Matérn kriging weight studies", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Kriging weights on the 20-point (1-D) or 16-point (2-D) grid.
    Weights(WeightsArgs),
    /// Collinearity index over a (ν, ρ) grid.
    Collinearity(CollinearityArgs),
    /// Total-effect Sobol indices for one study row.
    Sobol(SobolArgs),
    /// Leave-one-out grid-search classification benchmark.
    ClassifyBench(BenchArgs),
}

#[derive(Debug, Args, Serialize)]
struct WeightsArgs {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    dim: u8,
    #[arg(long)]
    rho: f64,
    #[arg(long)]
    nu: f64,
    #[arg(long, default_value_t = 0.001)]
    omega2: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CollinearityArgs {
    #[arg(long, default_value_t = 100)]
    resolution: usize,
    #[arg(long, default_value_t = 0.001)]
    omega2: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ResponseArg {
    Weights,
    Variance,
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(untagged)]
enum Omega2Arg {
    Fixed(f64),
    Vary(&'static str),
}

fn parse_omega2(s: &str) -> std::result::Result<Omega2Arg, String> {
    if s == "vary" {
        return Ok(Omega2Arg::Vary("vary"));
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(Omega2Arg::Fixed(v)),
        _ => Err(format!("expected a nonnegative number or 'vary', got '{s}'")),
    }
}

#[derive(Debug, Args, Serialize)]
struct SobolArgs {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    dim: u8,
    #[arg(long, value_enum, default_value_t = ResponseArg::Weights)]
    response: ResponseArg,
    /// Fixed nugget ratio, or `vary` to treat it as an input.
    #[arg(long, default_value = "vary", value_parser = parse_omega2)]
    omega2: Omega2Arg,
    /// Base sample size.
    #[arg(long, default_value_t = DEFAULT_BASE_COUNT)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SubsetArg {
    Nu,
    NuRho,
    All,
    Compare,
}

#[derive(Debug, Args, Serialize)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "200,400,800")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, value_enum, default_value_t = SubsetArg::Compare)]
    subset: SubsetArg,
    #[arg(long, default_value_t = DEFAULT_TEST_SIZE)]
    test_size: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    command: String,
    flags: serde_json::Value,
    seed: Option<u64>,
    version: String,
    threads: usize,
    started: String,
    finished: String,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct Weight1 {
    location: f64,
    weight: f64,
}

#[derive(Serialize)]
struct Weight2 {
    location_x: f64,
    location_y: f64,
    weight: f64,
}

#[derive(Serialize)]
struct GammaRow {
    nu: f64,
    rho: f64,
    gamma_correlation: Option<f64>,
    gamma_weights: Option<f64>,
    band_correlation: Option<&'static str>,
    band_weights: Option<&'static str>,
}

#[derive(Serialize)]
struct SobolRow<'a> {
    input: &'a str,
    total_index: f64,
    percent_share: f64,
    bootstrap_halfwidth: f64,
}

#[derive(Serialize)]
struct BenchRow {
    subset: &'static str,
    train_size: usize,
    iteration: usize,
    accuracy: f64,
    wall_time_s: f64,
    evaluations: usize,
}

fn write_csv<T: Serialize>(out: Option<&Path>, rows: &[T]) -> Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn threads_from_env() -> std::result::Result<Option<usize>, String> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(format!("{THREADS_ENV} must be a positive integer, got '{v}'")),
        },
    }
}

fn run_weights(a: &WeightsArgs) -> Result<()> {
    let grid = StudyGrid::new(a.dim as usize)?;
    let params = ReducedParams::new(a.rho, a.nu, a.omega2)?;
    let w = kriging_weights(&grid.train, &grid.pred, params)?.weights;
    let out = a.out.as_deref();
    if a.dim == 1 {
        let rows: Vec<Weight1> = w
            .iter()
            .enumerate()
            .map(|(i, &weight)| Weight1 {
                location: grid.train.point(i)[0],
                weight,
            })
            .collect();
        write_csv(out, &rows)
    } else {
        let rows: Vec<Weight2> = w
            .iter()
            .enumerate()
            .map(|(i, &weight)| Weight2 {
                location_x: grid.train.point(i)[0],
                location_y: grid.train.point(i)[1],
                weight,
            })
            .collect();
        write_csv(out, &rows)
    }
}

fn run_collinearity(a: &CollinearityArgs) -> Result<()> {
    let config = ScanConfig {
        resolution: a.resolution,
        omega2: a.omega2,
        ..ScanConfig::default()
    };
    let report = collinearity_scan(&config)?;
    let rows: Vec<GammaRow> = report
        .cells
        .iter()
        .map(|c| GammaRow {
            nu: c.nu,
            rho: c.rho,
            gamma_correlation: c.gamma_correlation,
            gamma_weights: c.gamma_weights,
            band_correlation: c.band_correlation().map(|b| b.as_str()),
            band_weights: c.band_weights().map(|b| b.as_str()),
        })
        .collect();
    write_csv(a.out.as_deref(), &rows)
}

fn run_sobol(a: &SobolArgs) -> Result<()> {
    let response = match a.response {
        ResponseArg::Weights => Response::Weights,
        ResponseArg::Variance => Response::PredictionVariance,
    };
    let mode = match a.omega2 {
        Omega2Arg::Fixed(w) => Omega2Mode::Fixed(w),
        Omega2Arg::Vary(_) => Omega2Mode::Varying,
    };
    let result = run_study(&StudyConfig::new(a.dim as usize, response, mode, a.n, a.seed))?;
    let rows: Vec<SobolRow> = result
        .inputs
        .iter()
        .map(|e| SobolRow {
            input: &e.name,
            total_index: e.total_index,
            percent_share: e.percent_share,
            bootstrap_halfwidth: e.bootstrap_halfwidth,
        })
        .collect();
    write_csv(a.out.as_deref(), &rows)
}

fn run_bench(a: &BenchArgs) -> Result<()> {
    let mut config = BenchmarkConfig::new(a.sizes.clone(), a.iters, a.seed);
    config.k = a.k;
    config.test_size = a.test_size;
    config.subsets = match a.subset {
        SubsetArg::Nu => vec![Subset::NuOnly],
        SubsetArg::NuRho => vec![Subset::NuRho],
        SubsetArg::All => vec![Subset::All],
        SubsetArg::Compare => Subset::ALL.to_vec(),
    };
    let trials = run_benchmark(&config)?;
    let rows: Vec<BenchRow> = trials
        .iter()
        .map(|t| BenchRow {
            subset: t.subset.as_str(),
            train_size: t.train_size,
            iteration: t.iteration,
            accuracy: t.accuracy,
            wall_time_s: t.wall_time,
            evaluations: t.evaluations,
        })
        .collect();
    write_csv(a.out.as_deref(), &rows)
}

fn error_line(e: &Error) -> String {
    serde_json::json!({ "error": e.kind(), "message": e.to_string() }).to_string()
}

/// Parses `args` (including the program name) and runs one subcommand.
/// Returns the process exit status.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("{}", error_line(&Error::Config(msg)));
            return 2;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{}", error_line(&Error::Config(e.to_string())));
            return 1;
        }
    };

    let started = now();
    let (name, flags, seed, out, outcome) = pool.install(|| match &cli.command {
        Command::Weights(a) => ("weights", serde_json::to_value(a), None, a.out.clone(), run_weights(a)),
        Command::Collinearity(a) => (
            "collinearity",
            serde_json::to_value(a),
            None,
            a.out.clone(),
            run_collinearity(a),
        ),
        Command::Sobol(a) => ("sobol", serde_json::to_value(a), Some(a.seed), a.out.clone(), run_sobol(a)),
        Command::ClassifyBench(a) => (
            "classify-bench",
            serde_json::to_value(a),
            Some(a.seed),
            a.out.clone(),
            run_bench(a),
        ),
    });
    if let Err(e) = outcome {
        eprintln!("{}", error_line(&e));
        return 1;
    }
    let manifest = RunManifest {
        command: name.into(),
        flags: flags.unwrap_or(serde_json::Value::Null),
        seed,
        version: env!("CARGO_PKG_VERSION").into(),
        threads: pool.current_num_threads(),
        started,
        finished: now(),
        outputs: out.iter().map(|p| p.display().to_string()).collect(),
    };
    let written = match &out {
        Some(p) => {
            let mut path = p.clone().into_os_string();
            path.push(".manifest.json");
            serde_json::to_string_pretty(&manifest)
                .map_err(|e| Error::Io(e.to_string()))
                .and_then(|s| std::fs::write(&path, s + "\n").map_err(Error::from))
        }
        None => serde_json::to_string(&manifest)
            .map(|s| eprintln!("{s}"))
            .map_err(|e| Error::Io(e.to_string())),
    };
    match written {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            1
        }
    }
}
