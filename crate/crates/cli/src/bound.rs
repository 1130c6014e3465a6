//! The `bound` mode: audit a finished run against the drift inequality.
//!
//! For every step of a run report the observed drift
//!
//! ```text
//! lhs = d_ph + d_ms_sup + |command_delta|
//! ```
//!
//! is compared with the predicted ceiling
//!
//! ```text
//! rhs = sum_k alpha_k (C1_k + C2_k) kappa sqrt(loss)
//!     + L_ortsf sqrt(loss_context)
//!     + L_context delta
//!     + q(eps_conf) sqrt(2 sigma^2)        q = standard normal quantile
//! ```
//!
//! where `loss` proxies the curvature scale of the step and
//! `loss_context` the unmet context. Every constant must be supplied; the
//! error lists all missing names at once. Rows whose inputs are missing
//! (recorded per-step failures) are marked unsatisfied, never skipped.

use std::path::Path;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::config::{self, BoundCfg, BoundConstants};
use crate::table::{fmt_bool, fmt_f64, Table};
use crate::{input_error, prepare_out_dir, write_json, CliError};

/// Comparison slack absorbing CSV round-trip and accumulation noise.
pub const BOUND_TOLERANCE: f64 = 1e-12;

pub struct BoundOutcome {
    pub table: Table,
    pub steps: usize,
    pub satisfied_steps: usize,
    pub all_satisfied: bool,
}

struct Constants {
    alpha: [f64; 2],
    c1: [f64; 2],
    c2: [f64; 2],
    kappa: f64,
    l_ortsf: f64,
    l_context: f64,
    eps_conf: f64,
    sigma: f64,
    delta: Option<f64>,
}

fn check_constants(c: &BoundConstants) -> Result<Constants, CliError> {
    let mut missing = Vec::new();
    if c.alpha.is_none() {
        missing.push("alpha");
    }
    if c.c1.is_none() {
        missing.push("c1");
    }
    if c.c2.is_none() {
        missing.push("c2");
    }
    if c.kappa.is_none() {
        missing.push("kappa");
    }
    if c.l_ortsf.is_none() {
        missing.push("l_ortsf");
    }
    if c.l_context.is_none() {
        missing.push("l_context");
    }
    if c.eps_conf.is_none() {
        missing.push("eps_conf");
    }
    if c.sigma.is_none() {
        missing.push("sigma");
    }
    if !missing.is_empty() {
        return Err(input_error(format!(
            "constants missing: {}",
            missing.join(", ")
        )));
    }
    let out = Constants {
        alpha: c.alpha.unwrap(),
        c1: c.c1.unwrap(),
        c2: c.c2.unwrap(),
        kappa: c.kappa.unwrap(),
        l_ortsf: c.l_ortsf.unwrap(),
        l_context: c.l_context.unwrap(),
        eps_conf: c.eps_conf.unwrap(),
        sigma: c.sigma.unwrap(),
        delta: c.delta,
    };
    for (name, v) in [
        ("alpha[0]", out.alpha[0]),
        ("alpha[1]", out.alpha[1]),
        ("c1[0]", out.c1[0]),
        ("c1[1]", out.c1[1]),
        ("c2[0]", out.c2[0]),
        ("c2[1]", out.c2[1]),
        ("kappa", out.kappa),
        ("l_ortsf", out.l_ortsf),
        ("l_context", out.l_context),
        ("sigma", out.sigma),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(input_error(format!(
                "constant {name} must be finite and non-negative, got {v}"
            )));
        }
    }
    if !(out.eps_conf > 0.0 && out.eps_conf < 1.0) {
        return Err(input_error(format!(
            "eps_conf must lie in (0, 1), got {}",
            out.eps_conf
        )));
    }
    if let Some(d) = out.delta {
        if !(d.is_finite() && d >= 0.0) {
            return Err(input_error(format!(
                "delta must be finite and non-negative, got {d}"
            )));
        }
    }
    Ok(out)
}

pub fn run(config_path: &Path, out: &Path, _seed: u64) -> Result<BoundOutcome, CliError> {
    let (cfg, base): (BoundCfg, _) = config::load(config_path)?;
    let consts = check_constants(&cfg.constants)?;
    let report_rel = cfg
        .run_report
        .as_ref()
        .ok_or_else(|| input_error("config missing \"run_report\""))?;
    let report = Table::read(&config::resolve(&base, report_rel))?;
    if report.is_empty() {
        return Err(input_error("run report has no rows"));
    }
    prepare_out_dir(out)?;

    let t = report.f64_column("t")?;
    let loss = report.f64_column("loss")?;
    let loss_context = report.f64_column("loss_context")?;
    let d_ph = report.f64_column("d_ph")?;
    let d_ms = report.f64_column("d_ms_sup")?;
    let delta_u = report.f64_column("command_delta")?;

    let delta = match consts.delta {
        Some(d) => d,
        None => {
            if t.len() >= 2 && (t[1] - t[0]).is_finite() && t[1] > t[0] {
                t[1] - t[0]
            } else {
                return Err(input_error(
                    "delta not given and the time column has no usable spacing",
                ));
            }
        }
    };

    // standard normal quantile of the confidence level; a tail mass of 1/2
    // or more asks for no confidence slack at all
    let quantile = Normal::standard()
        .inverse_cdf(1.0 - consts.eps_conf)
        .max(0.0);
    let conf_term = quantile * (2.0 * consts.sigma * consts.sigma).sqrt();
    let topo_scale: f64 = (0..2)
        .map(|k| consts.alpha[k] * (consts.c1[k] + consts.c2[k]))
        .sum();

    let mut table = Table::new(&[
        "t",
        "drift",
        "multiscale",
        "command_delta",
        "lhs",
        "rhs",
        "slack",
        "satisfied",
    ]);
    let mut satisfied_steps = 0usize;
    for k in 0..report.len() {
        let lhs = d_ph[k] + d_ms[k] + delta_u[k].abs();
        let rhs = topo_scale * consts.kappa * loss[k].max(0.0).sqrt()
            + consts.l_ortsf * loss_context[k].max(0.0).sqrt()
            + consts.l_context * delta
            + conf_term;
        // NaN from missing cells fails the comparison, which is the point
        let ok = lhs <= rhs + BOUND_TOLERANCE;
        if ok {
            satisfied_steps += 1;
        }
        table.push(vec![
            fmt_f64(t[k]),
            fmt_f64(d_ph[k]),
            fmt_f64(d_ms[k]),
            fmt_f64(delta_u[k].abs()),
            fmt_f64(lhs),
            fmt_f64(rhs),
            fmt_f64(rhs - lhs),
            fmt_bool(ok),
        ]);
    }

    let all = satisfied_steps == report.len();
    table.write(&out.join("bound.csv"))?;
    write_json(
        &out.join("bound_axes.json"),
        &serde_json::json!({
            "title": "drift bound audit",
            "x": {"column": "t", "label": "time [s]"},
            "series": [
                {"column": "lhs", "label": "observed drift"},
                {"column": "rhs", "label": "predicted ceiling"},
            ],
        }),
    )?;
    write_json(
        &out.join("bound_summary.json"),
        &serde_json::json!({
            "steps": report.len(),
            "satisfied_steps": satisfied_steps,
            "all_satisfied": all,
            "delta": delta,
            "confidence_quantile": quantile,
            "confidence_term": conf_term,
        }),
    )?;
    log::info!(
        "bound: {}/{} step(s) inside the ceiling",
        satisfied_steps,
        report.len()
    );
    Ok(BoundOutcome {
        table,
        steps: report.len(),
        satisfied_steps,
        all_satisfied: all,
    })
}
