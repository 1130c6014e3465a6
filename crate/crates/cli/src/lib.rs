//! Experiment harness over the fabric numerical core.
//!
//! Five experiment modes, each driven by a JSON config and writing CSV
//! tables plus small JSON sidecars (axes descriptions, summaries) into an
//! output directory:
//!
//! | mode          | entry point              | outputs                                   |
//! |---------------|--------------------------|-------------------------------------------|
//! | `run`         | [`pipeline::run`]        | `run_report.csv`, `run_axes.json`         |
//! | `ph-decay`    | [`decay::run`]           | `decay.csv`, `decay_axes.json`, `fit.json` |
//! | `delay-sweep` | [`sweep::run`]           | `sweep.csv`, `sweep_axes.json`, `violations.json` |
//! | `surgery`     | [`surgery::run`]         | `surgery.json`, `curvature.csv`, `graph_after.json` |
//! | `bound`       | [`bound::run`]           | `bound.csv`, `bound_axes.json`, `bound_summary.json` |
//!
//! Paths inside a config file resolve relative to the config file's own
//! directory, so a config and its data travel together. All randomness is
//! drawn from a counter-based generator seeded with the `--seed` argument;
//! identical config and seed produce byte-identical outputs.

pub mod bound;
pub mod config;
pub mod decay;
pub mod ingest;
pub mod pipeline;
pub mod surgery;
pub mod sweep;
pub mod synth;
pub mod table;

/// Harness failure, split by whose fault it is.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The inputs were unusable: unreadable files, malformed JSON,
    /// out-of-range parameters, schema violations. Exit code 2.
    #[error("{0}")]
    Input(String),
    /// The inputs parsed but the computation could not be completed:
    /// solver divergence, infeasible constraint projection, missing
    /// crossover. Exit code 3.
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

/// Shorthand constructors so call sites stay on one line.
pub fn input_error(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

pub fn numeric_error(msg: impl Into<String>) -> CliError {
    CliError::Numeric(msg.into())
}

/// Creates the output directory and returns it, mapping failures to input
/// errors (a bad `--out` is the caller's to fix).
pub fn prepare_out_dir(out: &std::path::Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| input_error(format!("cannot create output directory {}: {e}", out.display())))
}

/// Writes a JSON value pretty-printed, with a trailing newline so the files
/// diff cleanly.
pub fn write_json(path: &std::path::Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| numeric_error(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| input_error(format!("cannot write {}: {e}", path.display())))
}
