//! `freerg`: runs the free-CLT contraction and density experiments and
//! exposes the individual operations for scripting.
//!
//! Exit codes: 0 success, 1 numerical failure or failed check, 2 bad input.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use freerg_core::AxisSign;

use crate::commands::DistanceRequest;
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::read_measure;

#[derive(Parser)]
#[command(name = "freerg", version, about = "Free-probability renormalization experiments")]
struct Cli {
    /// JSON experiment manifest; flags override its fields.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distances d(T^n mu, rho) with contraction ratios, as CSV.
    CltRun(RunArgs),
    /// Densities of T^n mu next to the semicircle, one CSV per n.
    DensityRun(RunArgs),
    /// R-transform distance between two measures, as JSON.
    Distance(DistanceArgs),
    /// Moments and free cumulants of a measure.
    Cumulants(OrderArgs),
    /// Moments and free cumulants of the free convolution of two measures.
    Convolve(ConvolveArgs),
}

#[derive(Args, Default)]
struct GridArgs {
    #[arg(long)]
    ymin: Option<f64>,
    #[arg(long)]
    ymax: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// `lower` (z = -iy) or `upper` (z = +iy).
    #[arg(long)]
    axis_sign: Option<AxisSign>,
}

#[derive(Args)]
struct RunArgs {
    /// Seed measure, inline JSON or a path.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    n_max: Option<u32>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Density evaluation points as `lo,hi,points`.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    xs: Option<Vec<f64>>,
    /// Stieltjes smoothing schedule as `e1,e2` with e1 > e2 > 0.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    eps: Option<Vec<f64>>,
    /// Half-width of the window for density sup-gaps.
    #[arg(long)]
    gap_window: Option<f64>,
}

#[derive(Args)]
struct DistanceArgs {
    a: String,
    b: String,
    #[command(flatten)]
    grid: GridArgs,
    /// Allow laws outside Q3.
    #[arg(long)]
    extended: bool,
    /// Also write the residual curve `y,residual` here.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct OrderArgs {
    spec: String,
    #[arg(long, default_value_t = 6)]
    order: usize,
}

#[derive(Args)]
struct ConvolveArgs {
    a: String,
    b: String,
    #[arg(long, default_value_t = 6)]
    order: usize,
}

fn base_config(path: Option<&PathBuf>) -> Result<ExperimentConfig, CliError> {
    path.map_or_else(|| Ok(ExperimentConfig::default()), |p| ExperimentConfig::load(p))
}

fn apply_grid(cfg: &mut ExperimentConfig, g: &GridArgs) {
    if let Some(v) = g.ymin {
        cfg.grid.y_min = v;
    }
    if let Some(v) = g.ymax {
        cfg.grid.y_max = v;
    }
    if let Some(v) = g.points {
        cfg.grid.points = v;
    }
    if let Some(v) = g.axis_sign {
        cfg.grid.axis = v;
    }
}

fn run_config(path: Option<&PathBuf>, args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = base_config(path)?;
    if let Some(seed) = &args.seed {
        cfg.seed_measure = Some(read_measure(seed)?);
    }
    if let Some(n) = args.n_max {
        cfg.n_max = n;
    }
    apply_grid(&mut cfg, &args.grid);
    if let Some(dir) = &args.output_dir {
        cfg.output_dir = Some(dir.clone());
    }
    if let Some(xs) = &args.xs {
        if xs[2].fract() != 0.0 || xs[2] < 0.0 {
            return Err(CliError::Input(format!("--xs point count must be a whole number, got {}", xs[2])));
        }
        cfg.density_xs = config::XsSpec { lo: xs[0], hi: xs[1], points: xs[2] as usize };
    }
    if let Some(eps) = &args.eps {
        cfg.eps_schedule = [eps[0], eps[1]];
    }
    if let Some(w) = args.gap_window {
        cfg.gap_window = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("FREERG_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("FREERG_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Input(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> Result<i32, CliError> {
    configure_threads()?;
    let config = cli.config.as_ref();
    match &cli.command {
        Command::CltRun(args) => commands::clt_run(&run_config(config, args)?),
        Command::DensityRun(args) => commands::density_run(&run_config(config, args)?),
        Command::Distance(args) => {
            let mut cfg = base_config(config)?;
            apply_grid(&mut cfg, &args.grid);
            cfg.grid.validate()?;
            let (a, b) = (read_measure(&args.a)?, read_measure(&args.b)?);
            commands::distance_cmd(&DistanceRequest {
                a: &a,
                b: &b,
                grid: cfg.grid,
                extended: args.extended,
                csv: args.csv.as_deref(),
            })
        }
        Command::Cumulants(args) => {
            print!("{}", commands::cumulants_cmd(&read_measure(&args.spec)?, args.order)?);
            Ok(0)
        }
        Command::Convolve(args) => {
            let (a, b) = (read_measure(&args.a)?, read_measure(&args.b)?);
            print!("{}", commands::convolve_cmd(&a, &b, args.order)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("freerg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
