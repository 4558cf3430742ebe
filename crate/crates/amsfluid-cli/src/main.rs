//! amsfluid: exact, asymptotic and simulated steady state of the fluid
//! queue fed by N on/off sources.

use std::path::PathBuf;
use std::process::ExitCode;

use amsfluid::error::Error;
use amsfluid::saddle::{LayerWidths, RegionTag};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};

mod commands;
mod grid;
mod output;
mod params;

use output::Format;
use params::ParamArgs;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(Error),
    Io(std::io::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "amsfluid", version, about = "Steady state of the fluid queue fed by N exponential on/off sources")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file (a directory for `tables`); stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct WidthArgs {
    /// Transition-layer half width in standard deviations
    #[arg(long, default_value_t = 3.0)]
    pub transition_width: f64,
    /// Boundary strip width in units of 1/N
    #[arg(long, default_value_t = 1.0)]
    pub strip_width: f64,
    /// Extent of the corner at (x, k) = (0, c) in chi = xN
    #[arg(long, default_value_t = 3.0)]
    pub corner_chi: f64,
}

impl WidthArgs {
    pub fn widths(&self) -> LayerWidths {
        LayerWidths { transition: self.transition_width, strip: self.strip_width, corner_chi: self.corner_chi }
    }
}

#[derive(Debug, Subcommand)]
#[command(rename_all = "kebab-case")]
pub enum Cmd {
    /// Print the derived model constants
    Params {
        #[command(flatten)]
        common: Common,
    },
    /// Exact F_k(x) and f_k(x) from the spectral solution
    Exact {
        #[command(flatten)]
        common: Common,
        /// States: all, a..b, or a comma list
        #[arg(long, default_value = "all")]
        k: String,
        /// Buffer levels: comma list or start:stop:count
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        x: String,
    },
    /// Region-wise asymptotic approximation next to the exact value
    Asymptotic {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "all")]
        k: String,
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        x: String,
        /// Force one region's formula instead of classifying each point
        #[arg(long)]
        region: Option<RegionTag>,
        #[command(flatten)]
        widths: WidthArgs,
    },
    /// The curves Y0, Y1, Y* and Y2 over z
    Curves {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "0.01:0.99:99", allow_hyphen_values = true)]
        z: String,
    },
    /// Region of each (y, z) on a grid
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[command(flatten)]
        widths: WidthArgs,
    },
    /// Tabulate the saddle-point kernel functions over (theta, z)
    KernelDump {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
        #[arg(long, default_value = "0.5", allow_hyphen_values = true)]
        z: String,
    },
    /// Limit law of sources given the buffer, or of the buffer given sources
    Conditional {
        #[command(flatten)]
        common: Common,
        /// buffer=X or sources=K
        #[arg(long)]
        given: String,
        /// Points on the density curve
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[command(flatten)]
        widths: WidthArgs,
    },
    /// Monte Carlo estimate of P[Z=k, X<=x] with confidence intervals
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Simulated time per replication
        #[arg(long)]
        horizon: f64,
        #[arg(long, default_value_t = 32)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "0,0.5,1,2,5")]
        x_grid: String,
        /// Discarded start of each replication (default 5% of the horizon)
        #[arg(long)]
        warmup: Option<f64>,
        #[arg(long, default_value_t = 0.99)]
        confidence: f64,
        /// Add the exact value, z-score and coverage to every cell
        #[arg(long)]
        compare_exact: bool,
        /// Exact values below this are reported but not scored
        #[arg(long, default_value_t = 1e-12)]
        tail_cutoff: f64,
    },
    /// Comparison tables at one buffer level plus x- and k-sweeps for plotting
    Tables {
        #[command(flatten)]
        common: Common,
        /// Buffer level of the comparison tables
        #[arg(long, default_value_t = 1.0)]
        x: f64,
        /// Largest x of the fixed-k sweeps
        #[arg(long, default_value_t = 10.0)]
        x_max: f64,
        /// Points per fixed-k sweep
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Params { .. } => "params",
            Cmd::Exact { .. } => "exact",
            Cmd::Asymptotic { .. } => "asymptotic",
            Cmd::Curves { .. } => "curves",
            Cmd::Classify { .. } => "classify",
            Cmd::KernelDump { .. } => "kernel-dump",
            Cmd::Conditional { .. } => "conditional",
            Cmd::Simulate { .. } => "simulate",
            Cmd::Tables { .. } => "tables",
        }
    }
}

fn usage_exit(sub: &str, msg: &str) -> ! {
    let mut cmd = Cli::command();
    cmd.build();
    match cmd.find_subcommand_mut(sub) {
        Some(s) => s.error(ErrorKind::MissingRequiredArgument, msg).exit(),
        None => cmd.error(ErrorKind::InvalidValue, msg).exit(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => usage_exit(name, &msg),
        Err(CliError::Numeric(e)) => {
            eprintln!("error: {}: {}", e.reason.code(), e.detail);
            ExitCode::from(1)
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: IO: {e}");
            ExitCode::from(1)
        }
    }
}
