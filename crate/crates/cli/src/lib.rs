//! Command-line driver: reads a TOML run description, runs one of the
//! subcommands and writes CSV tables.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{RunOptions, Status};
pub use config::{parse_config, parse_str, SimulationSpec, Violation};
pub use error::CliError;
pub use output::{config_from_header, SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(name = "hystdiff", version, about = "Implicit time stepping for diffusion with hysteresis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the time stepper and write the trace.
    Simulate(Common),
    /// Solve the stationary problem.
    Stationary(Common),
    /// Run and check the energy estimates; exits 1 if one fails.
    Verify(Common),
    /// Run two configurations and compare them in L1.
    Stability {
        #[command(flatten)]
        common: Common,
        /// Second configuration; defaults to the first.
        #[arg(long, value_name = "PATH")]
        second: Option<PathBuf>,
    },
    /// Long run, stationary solve and convergence probe.
    Longtime(Common),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Write every N-th node to trace tables.
    #[arg(long, value_name = "N")]
    stride: Option<usize>,
    /// Worker threads for paired runs.
    #[arg(long, value_name = "N", default_value_t = 1)]
    workers: usize,
    /// Seed for sampled self-checks.
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            out: self.out.clone(),
            stride: self.stride,
            workers: self.workers,
            seed: self.seed,
        }
    }
}

fn dispatch(command: Command) -> Result<Status, CliError> {
    match command {
        Command::Simulate(c) => commands::simulate(&parse_config(&c.config)?, &c.options()),
        Command::Stationary(c) => commands::stationary(&parse_config(&c.config)?, &c.options()),
        Command::Verify(c) => commands::verify(&parse_config(&c.config)?, &c.options()),
        Command::Longtime(c) => commands::longtime(&parse_config(&c.config)?, &c.options()),
        Command::Stability { common, second } => {
            let first = parse_config(&common.config)?;
            let other = match second {
                Some(p) => parse_config(&p)?,
                None => first.clone(),
            };
            commands::stability(&first, &other, &common.options())
        }
    }
}

/// Writes error records as CSV (`kind,path,message`) on standard error.
fn report_error(err: &CliError) {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(["kind", "path", "message"]);
    for (kind, path, message) in err.records() {
        let _ = w.write_record([kind, path, message]);
    }
    if let Ok(bytes) = w.into_inner() {
        let _ = std::io::stderr().write_all(&bytes);
    }
}

/// Runs the program on `args` (program name first) and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let err = CliError::Usage(e.kind().to_string());
            report_error(&err);
            let _ = e.print();
            return err.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(status) => status.exit_code(),
        Err(e) => {
            report_error(&e);
            e.exit_code()
        }
    }
}
