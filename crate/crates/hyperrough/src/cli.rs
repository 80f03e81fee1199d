use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{self, Command};
use crate::config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "hyperrough", version, about = "Hyper-rough square-root process experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArg,
    /// key = value configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed; path i uses stream i of it
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Comma-separated Hurst ladder, e.g. --H=-0.05,-0.49
    #[arg(long = "H", global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub hurst: Option<Vec<f64>>,
    /// Number of time steps
    #[arg(long = "N", global = true)]
    pub steps: Option<usize>,
    /// Monte Carlo paths per process
    #[arg(long, global = true)]
    pub paths: Option<u64>,
    /// Comma-separated u values of the characteristic-function grid
    #[arg(long = "u-grid", global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub u_grid: Option<Vec<f64>>,
    /// Comma-separated v values of the characteristic-function grid
    #[arg(long = "v-grid", global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub v_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum CommandArg {
    /// One coupled path per Hurst index plus the limit: t,X,M,residual
    Simulate,
    /// KS distances, CF errors, moment checks and residual statistics (JSON)
    Converge,
    /// Empirical, Riccati and limit characteristic functions on the (u,v) grid
    Cf,
    /// Histograms of X_T and M_T with the limiting densities
    Density,
    /// Riccati solver diagnostics (JSON)
    RiccatiCheck,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Simulate => Command::Simulate,
            CommandArg::Converge => Command::Converge,
            CommandArg::Cf => Command::Cf,
            CommandArg::Density => Command::Density,
            CommandArg::RiccatiCheck => Command::RiccatiCheck,
        }
    }
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            hurst: self.hurst.clone(),
            steps: self.steps,
            paths: self.paths,
            u_grid: self.u_grid.clone(),
            v_grid: self.v_grid.clone(),
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = RunConfig::resolve(cli.config.as_deref(), &cli.overrides())
        .and_then(|cfg| commands::run(cli.command.into(), &cfg));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("hyperrough: {e}");
            e.exit_code()
        }
    }
}

