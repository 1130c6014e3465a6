//! The `delay-sweep` mode: phase margin versus measurement latency for
//! three compensation schemes.
//!
//! * `direct` — the lead loop swallows the full dead time.
//! * `smith` — an idealized predictor with a perfect plant model and known
//!   delay: the margin stays at its delay-free value.
//! * `ortsf` — the synthesizer policy: direct below the threshold, a
//!   predictor that pays one residual sample above it.
//!
//! Cells are independent, so they are computed on worker threads and merged
//! in grid order; output bytes do not depend on the thread count.

use std::path::Path;

use fabric_core::control::{phase_margin, CommandSynthesizer};

use crate::config::{self, SweepCfg};
use crate::table::{fmt_f64, Table};
use crate::{input_error, numeric_error, prepare_out_dir, write_json, CliError};

fn margin_for(
    syn: &CommandSynthesizer,
    method: &str,
    delay: f64,
) -> Result<f64, CliError> {
    let model = match method {
        "direct" => syn.loop_model(delay),
        "smith" => syn.loop_model(0.0),
        "ortsf" => {
            if delay <= syn.config().delay_threshold {
                syn.loop_model(delay)
            } else {
                syn.loop_model(syn.config().sample_time)
            }
        }
        other => return Err(input_error(format!("unknown method \"{other}\""))),
    };
    phase_margin(&model)
        .map(|m| m.phase_margin_deg)
        .map_err(|e| numeric_error(format!("{method} at delay {delay}: {e}")))
}

pub struct SweepOutcome {
    pub table: Table,
    /// First delay at which each method drops below the safety margin.
    pub first_violation: Vec<(String, Option<f64>)>,
}

pub fn run(config_path: &Path, out: &Path, _seed: u64) -> Result<SweepOutcome, CliError> {
    let (cfg, _base): (SweepCfg, _) = config::load(config_path)?;
    cfg.validate()?;
    let delays = cfg.delays.values()?;
    prepare_out_dir(out)?;

    let plant = cfg.loop_cfg.plant()?;
    let syn = CommandSynthesizer::new(plant, cfg.loop_cfg.synthesizer())
        .map_err(|e| input_error(format!("loop: {e}")))?;

    let threads = if cfg.threads == 0 {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
            .min(delays.len().max(1))
    } else {
        cfg.threads.min(delays.len().max(1))
    };
    let chunk = delays.len().div_ceil(threads);

    // each worker fills disjoint row indices; the merge is by index, so the
    // output is identical regardless of scheduling
    let mut cells: Vec<Option<Vec<f64>>> = vec![None; delays.len()];
    let results: Vec<Result<Vec<(usize, Vec<f64>)>, CliError>> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (w, slice) in delays.chunks(chunk).enumerate() {
            let start = w * chunk;
            let syn_ref = &syn;
            let methods = &cfg.methods;
            handles.push(scope.spawn(move || {
                let mut rows = Vec::with_capacity(slice.len());
                for (j, &delay) in slice.iter().enumerate() {
                    let mut row = Vec::with_capacity(methods.len());
                    for m in methods {
                        row.push(margin_for(syn_ref, m, delay)?);
                    }
                    rows.push((start + j, row));
                }
                Ok(rows)
            }));
        }
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    for r in results {
        for (idx, row) in r? {
            cells[idx] = Some(row);
        }
    }

    let rows_f64: Vec<Vec<f64>> = cells
        .into_iter()
        .map(|c| c.expect("all cells computed"))
        .collect();

    let mut columns: Vec<String> = vec!["delay".to_string()];
    columns.extend(cfg.methods.iter().map(|m| format!("margin_{m}")));
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = Table::new(&column_refs);
    for (delay, row) in delays.iter().zip(rows_f64.iter()) {
        let mut cells_out = vec![fmt_f64(*delay)];
        cells_out.extend(row.iter().copied().map(fmt_f64));
        table.push(cells_out);
    }

    let mut first_violation: Vec<(String, Option<f64>)> = Vec::new();
    for (j, m) in cfg.methods.iter().enumerate() {
        let hit = delays
            .iter()
            .zip(rows_f64.iter())
            .find(|(_, row)| row[j] < cfg.phi_safe_deg)
            .map(|(delay, _)| *delay);
        first_violation.push((m.clone(), hit));
    }

    table.write(&out.join("sweep.csv"))?;
    write_json(
        &out.join("sweep_axes.json"),
        &serde_json::json!({
            "title": "phase margin vs latency",
            "x": {"column": "delay", "label": "measurement delay [s]"},
            "series": cfg.methods.iter().map(|m| serde_json::json!({
                "column": format!("margin_{m}"),
                "label": format!("{m} margin [deg]"),
            })).collect::<Vec<_>>(),
            "hline": {"value": cfg.phi_safe_deg, "label": "safety margin"},
        }),
    )?;
    write_json(
        &out.join("violations.json"),
        &serde_json::json!({
            "phi_safe_deg": cfg.phi_safe_deg,
            "first_violation": first_violation
                .iter()
                .map(|(m, d)| (m.clone(), serde_json::json!(d)))
                .collect::<serde_json::Map<String, serde_json::Value>>(),
        }),
    )?;
    Ok(SweepOutcome {
        table,
        first_violation,
    })
}
