//! `fabric`: experiment harness over the fabric numerical core.
//!
//! Exit codes: 0 on success, 2 for input problems (unreadable or invalid
//! configs and data), 3 for numeric failures (solves that cannot finish).
//! Log verbosity comes from the `FABRIC_LOG` environment variable
//! (`error`, `warn`, `info`, `debug`, `trace`).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fabric_cli::{bound, decay, pipeline, surgery, sweep, CliError};

#[derive(Parser)]
#[command(
    name = "fabric",
    about = "constrained cochain optimization, topology tracking, and delay-compensated control experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    mode: Mode,
}

#[derive(clap::Args)]
struct Common {
    /// JSON config; relative paths inside it resolve against its directory.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if absent.
    #[arg(long)]
    out: PathBuf,
    /// Seed for every random draw the mode makes.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Mode {
    /// Drive a scene sequence through solve, trace, and command synthesis.
    Run(Common),
    /// Persistence drift under diminishing-step noisy descent.
    #[command(name = "ph-decay")]
    PhDecay(Common),
    /// Phase margin vs latency for direct, smith, and ortsf compensation.
    #[command(name = "delay-sweep")]
    DelaySweep(Common),
    /// Cut thin high-curvature necks out of a graph.
    Surgery(Common),
    /// Audit a run report against the drift inequality.
    Bound(Common),
}

fn dispatch(mode: &Mode) -> Result<(), CliError> {
    match mode {
        Mode::Run(c) => pipeline::run(&c.config, &c.out, c.seed).map(|_| ()),
        Mode::PhDecay(c) => decay::run(&c.config, &c.out, c.seed).map(|_| ()),
        Mode::DelaySweep(c) => sweep::run(&c.config, &c.out, c.seed).map(|_| ()),
        Mode::Surgery(c) => surgery::run(&c.config, &c.out, c.seed).map(|_| ()),
        Mode::Bound(c) => bound::run(&c.config, &c.out, c.seed).map(|_| ()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FABRIC_LOG", "info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match dispatch(&cli.mode) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
