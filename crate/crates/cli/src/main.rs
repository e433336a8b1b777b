use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use olin_cli::csv_io::{write_slope_points, write_sweep, write_trajectories};
use olin_cli::error::CliError;
use olin_cli::{run_slope, run_t0_sweep, run_trajectory, ExperimentConfig, RunOptions};

#[derive(Parser)]
#[command(name = "olin", version, about = "Simulate online sparse regression and record error trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-checkpoint rows for every seed, algorithm and t0.
    Run(Common),
    /// Mean and sd of the final MSE for each t0.
    SweepT0(Common),
    /// Log-log slope of the seed-averaged l1 error.
    Slope(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV; overrides `output` in the config. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Omit the timestamp line and write wall_ms as 0, for byte-identical reruns.
    #[arg(long)]
    no_timestamp: bool,
}

struct Prepared {
    config: ExperimentConfig,
    opts: RunOptions,
    out: Option<PathBuf>,
    stamp: Option<String>,
}

fn prepare(args: &Common) -> Result<Prepared, CliError> {
    let config = ExperimentConfig::from_path(&args.config)?;
    let out = args.out.clone().or_else(|| config.output.clone());
    let stamp = (!args.no_timestamp).then(|| {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        format!("unix_time={secs}")
    });
    Ok(Prepared {
        config,
        opts: RunOptions {
            workers: args.workers,
            wall_clock: !args.no_timestamp,
        },
        out,
        stamp,
    })
}

fn with_output(out: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<(), CliError>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let io_err = |source| CliError::Io {
                path: path.to_path_buf(),
                source,
            };
            let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
            f(&mut w)?;
            w.flush().map_err(io_err)
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let p = prepare(&args)?;
            let records = run_trajectory(&p.config, p.opts)?;
            with_output(p.out.as_deref(), |w| write_trajectories(w, &records, p.stamp.as_deref()))
        }
        Command::SweepT0(args) => {
            let p = prepare(&args)?;
            let rows = run_t0_sweep(&p.config, p.opts)?;
            with_output(p.out.as_deref(), |w| write_sweep(w, &rows, p.stamp.as_deref()))
        }
        Command::Slope(args) => {
            let p = prepare(&args)?;
            let (reports, points) = run_slope(&p.config, p.opts)?;
            for r in &reports {
                eprintln!(
                    "slope algorithm={} t0={} window=[{}, {}] slope={:.4}",
                    r.algorithm, r.t0, r.t_min, r.t_max, r.slope
                );
            }
            with_output(p.out.as_deref(), |w| write_slope_points(w, &points, p.stamp.as_deref()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
