//! `pseudomode`: run the pseudomode protocols from experiment presets.

mod commands;
mod output;

use clap::{ArgAction, Args, Parser, Subcommand};
use pseudomode_core::{Error, ErrorKind};
use std::path::PathBuf;
use std::process::ExitCode;

/// Default output directory when `--out-dir` is absent.
pub const OUT_DIR_ENV: &str = "PSEUDOMODE_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "pseudomode", version, about = "Pseudomode simulation, mitigation and restructuring of Brownian baths")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads for trajectory fan-out (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Built-in preset name (mitigation ... direct) or path to a preset file.
    #[arg(long)]
    pub preset: String,

    /// Output directory; falls back to $PSEUDOMODE_OUT_DIR, the preset's
    /// `[output] dir`, then `runs/<preset>-<command>`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,

    /// Replace a non-empty output directory.
    #[arg(long)]
    pub overwrite: bool,

    /// Seed override. Repeating the flag keeps the last value.
    #[arg(long, action = ArgAction::Append)]
    pub seed: Vec<u64>,

    /// Trajectory count override.
    #[arg(long)]
    pub traj: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate the bath correlation function C(t).
    Correlation {
        /// Preset whose [bath] section is used.
        #[arg(long)]
        bath: String,
        #[arg(long, default_value_t = 10.0)]
        tmax: f64,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
        /// total, quantum or classical
        #[arg(long, default_value = "total")]
        part: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate a bath spectrum.
    Spectrum {
        #[arg(long)]
        bath: String,
        #[arg(long, default_value_t = 3.0)]
        wmax: f64,
        #[arg(long, default_value_t = 0.01)]
        dw: f64,
        /// classical, quantum or total
        #[arg(long, default_value = "classical")]
        kind: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the Lambda sweep of a preset and write the sweep table.
    Sweep(RunArgs),
    /// Re-fit a sweep table and continue it to the critical point.
    Reconstruct {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "M")]
        order: usize,
        /// Noise level attached to the stability bound.
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mitigation: sweep, reconstruction and comparison with free dynamics.
    Mitigate(RunArgs),
    /// Simulation of the preset bath (simulate or direct presets).
    Simulate(RunArgs),
    /// Restructuring of the preset bath to its target temperature.
    Restructure(RunArgs),
    /// Gate fidelity against gate time.
    Gate(RunArgs),
    /// Reconstruction error against polynomial order.
    Errstudy {
        #[command(flatten)]
        run: RunArgs,
        /// Injected noise level (default: the preset's).
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Error bounds for continuing an N+1 point equispaced fit to the critical point.
    Bounds {
        #[arg(long = "N")]
        n: usize,
        #[arg(long = "M")]
        m: usize,
        #[arg(long, default_value_t = 1e-5)]
        sigma: f64,
        /// Bound Q_rho on the data inside the Bernstein ellipse, enables the bias bound.
        #[arg(long)]
        q: Option<f64>,
    },
    /// Re-run a previous run from its manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        overwrite: bool,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Numeric => 3,
        ErrorKind::Io => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
