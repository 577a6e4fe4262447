//! Command-line driver: configuration, experiment orchestration and CSV
//! output.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numeric
//! failure, 4 a `--check` threshold was not met.

pub mod commands;
pub mod config;
pub mod studies;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{fmt_f64, Outcome};
pub use config::RunConfig;

use crate::error::Error;

/// Environment variable holding the default thread cap.
pub const THREADS_ENV: &str = "QBKIX_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "qbkix", version, about = "Boundary integral experiments with QBKIX quadrature")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Error and iterations against panel count.
    Convergence(Common),
    /// Operator spectra and GMRES residual histories.
    Spectrum(Common),
    /// Singular values of the check-from-proxy matrix.
    Singvals(Common),
    /// Solve and evaluate the error on a grid.
    Field(Common),
    /// Solve on a domain with corners.
    Corner(Common),
    /// Recommended expansion parameters for a target accuracy.
    Params(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML configuration file.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set gmres.tol=1e-12`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory (overrides `output` in the configuration).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to $QBKIX_THREADS, then all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Exit with status 4 when the run misses its acceptance threshold.
    #[arg(long)]
    pub check: bool,
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Convergence(c) => ("convergence", c),
            Command::Spectrum(c) => ("spectrum", c),
            Command::Singvals(c) => ("singvals", c),
            Command::Field(c) => ("field", c),
            Command::Corner(c) => ("corner", c),
            Command::Params(c) => ("params", c),
        }
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::UnsupportedFamily { .. } | Error::SizeGuard { .. } => EXIT_CONFIG,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_NUMERIC,
    }
}

/// Loads the configuration of a subcommand: file, then overrides, then flags.
pub fn load_config(name: &str, common: &Common) -> crate::Result<RunConfig> {
    let text = match &common.config {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut cfg = RunConfig::from_toml(&text, &common.overrides)?;
    cfg.experiment = name.to_string();
    if let Some(o) = &common.out {
        cfg.output = o.clone();
    }
    Ok(cfg)
}

fn thread_cap(flag: Option<usize>) -> crate::Result<Option<usize>> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| Error::Config(format!("{THREADS_ENV}={v} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

/// Runs one subcommand with a loaded configuration.
pub fn execute(name: &str, cfg: &RunConfig) -> crate::Result<Outcome> {
    fs::create_dir_all(&cfg.output)?;
    let dir = cfg.output.as_path();
    let mut out = match name {
        "convergence" => commands::cmd_convergence(cfg, dir)?,
        "spectrum" => commands::cmd_spectrum(cfg, dir)?,
        "singvals" => commands::cmd_singvals(cfg, dir)?,
        "field" => commands::cmd_field(cfg, dir)?,
        "corner" => commands::cmd_corner(cfg, dir)?,
        "params" => commands::cmd_params(cfg, dir)?,
        other => return Err(Error::Config(format!("unknown experiment `{other}`"))),
    };
    commands::echo_config(cfg, dir, &mut out)?;
    Ok(out)
}

fn run_parsed(cli: Cli) -> i32 {
    let (name, common) = cli.command.parts();
    let cfg = match load_config(name, common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let threads = match thread_cap(common.threads) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    if let Some(n) = threads {
        // a pool that already exists keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(name, &cfg) {
        Ok(out) => {
            for l in &out.summary {
                println!("{l}");
            }
            for f in &out.files {
                println!("wrote {f}");
            }
            match (&out.check, common.check) {
                (Some(why), true) => {
                    eprintln!("check failed: {why}");
                    EXIT_CHECK
                }
                _ => EXIT_OK,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run_parsed(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
