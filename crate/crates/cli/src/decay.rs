//! The `ph-decay` mode: persistence drift under diminishing-step descent.
//!
//! A synthetic scene descends its loss with step `eta0 / sqrt(k)` and iid
//! Gaussian gradient noise. The filtration of every snapshot is compared
//! with its predecessor; under the diminishing schedule the drift follows
//! the step size, so the log-log decay slope should sit near -1/2. The fit
//! refuses to run on fewer than [`MIN_FIT_POINTS`] recorded points, and a
//! run whose drift is zero from the start is flagged instead of fitted.

use std::path::Path;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Uniform};

use fabric_core::semantics::{ConstraintMode, SceneOptimizer, SceneState, SemanticTensor};
use fabric_core::topology::{bottleneck_distance, filtration_values, persistence_diagram};
use fabric_core::WeightedGraph;

use crate::config::{self, DecayCfg};
use crate::table::{fmt_f64, Table};
use crate::{input_error, numeric_error, prepare_out_dir, write_json, CliError};

/// A slope fit needs at least this many drift samples.
pub const MIN_FIT_POINTS: usize = 50;
/// Drift below this is treated as exactly zero for fitting purposes.
pub const ZERO_DRIFT: f64 = 1e-15;

#[derive(Debug, Clone)]
pub struct DecayOutcome {
    pub table: Table,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub points_used: usize,
    pub final_d_ph: f64,
    pub converged_at_start: bool,
}

/// Random connected graph: a spanning tree plus a few chords.
fn random_graph(rng: &mut ChaCha12Rng, n: usize, extra: usize) -> WeightedGraph {
    use rand::Rng;
    let vertices: Vec<u64> = (1..=n as u64).collect();
    let mut edges: Vec<(u64, u64, f64)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for child in 2..=n as u64 {
        let parent = rng.random_range(1..child);
        seen.insert((parent, child));
        edges.push((parent, child, 1.0));
    }
    let mut attempts = 0;
    let mut added = 0;
    while added < extra && attempts < 50 * extra.max(1) {
        attempts += 1;
        let a = rng.random_range(1..=n as u64);
        let b = rng.random_range(1..=n as u64);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if seen.insert(key) {
            edges.push((key.0, key.1, 1.0));
            added += 1;
        }
    }
    WeightedGraph::new(&vertices, &edges).expect("tree plus chords is connected")
}

pub fn run(config_path: &Path, out: &Path, seed: u64) -> Result<DecayOutcome, CliError> {
    let (cfg, _base): (DecayCfg, _) = config::load(config_path)?;
    cfg.validate()?;
    let points = (cfg.steps + 1).saturating_sub(cfg.gap);
    if points < MIN_FIT_POINTS {
        return Err(input_error(format!(
            "steps = {} with gap = {} yields {} drift points; the fit needs at least {}",
            cfg.steps, cfg.gap, points, MIN_FIT_POINTS
        )));
    }
    prepare_out_dir(out)?;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let graph = random_graph(&mut rng, cfg.vertices, cfg.extra_edges);
    let coord = Uniform::new(0.0, 1.0).expect("fixed range");
    let tensors: Vec<SemanticTensor> = (0..cfg.vertices)
        .map(|_| {
            let p: Vec<f64> = (0..cfg.dim).map(|_| coord.sample(&mut rng)).collect();
            SemanticTensor::from_position(DVector::from_vec(p)).expect("dim checked positive")
        })
        .collect();
    let scene = SceneState::new(graph.clone(), cfg.dim, tensors)
        .map_err(|e| input_error(format!("synthetic scene: {e}")))?;
    let mut opt = SceneOptimizer::new(&scene, cfg.objective.to_core(), ConstraintMode::Penalty)
        .map_err(|e| input_error(format!("synthetic scene: {e}")))?;

    let noise_dist = Normal::new(0.0, cfg.sigma).map_err(|e| input_error(format!("sigma: {e}")))?;
    let dof = cfg.vertices * cfg.dim;
    let states_of = |s: &DVector<f64>| -> Vec<DVector<f64>> {
        (0..cfg.vertices)
            .map(|i| s.rows(i * cfg.dim, cfg.dim).clone_owned())
            .collect()
    };

    let filt = |s: &DVector<f64>| {
        filtration_values(&graph, &states_of(s), cfg.filtration.alpha, cfg.filtration.beta)
            .map_err(|e| numeric_error(format!("filtration: {e}")))
    };

    let mut table = Table::new(&["k", "eta", "movement", "d_ph"]);
    let mut history: Vec<(DVector<f64>, fabric_core::Filtration)> =
        vec![(opt.positions().clone_owned(), filt(opt.positions())?)];
    let mut drifts: Vec<(usize, f64)> = Vec::new();

    for k in 1..=cfg.steps {
        let eta = cfg.eta0 / (k as f64).sqrt();
        let noise = DVector::from_iterator(dof, (0..dof).map(|_| noise_dist.sample(&mut rng)));
        opt.step(eta, Some(&noise))
            .map_err(|e| numeric_error(format!("descent step {k}: {e}")))?;
        let s = opt.positions().clone_owned();
        let f = filt(&s)?;
        history.push((s, f));
        if k >= cfg.gap {
            let (s_prev, f_prev) = &history[k - cfg.gap];
            let movement = (&history[k].0 - s_prev).norm();
            let d0 = persistence_diagram(&graph, f_prev, 0)
                .and_then(|a| Ok((a, persistence_diagram(&graph, &history[k].1, 0)?)))
                .and_then(|(a, b)| bottleneck_distance(&a, &b));
            let d1 = persistence_diagram(&graph, f_prev, 1)
                .and_then(|a| Ok((a, persistence_diagram(&graph, &history[k].1, 1)?)))
                .and_then(|(a, b)| bottleneck_distance(&a, &b));
            let d_ph = match (d0, d1) {
                (Ok(a), Ok(b)) => cfg.alpha[0] * a + cfg.alpha[1] * b,
                (Err(e), _) | (_, Err(e)) => {
                    return Err(numeric_error(format!("drift at step {k}: {e}")))
                }
            };
            drifts.push((k, d_ph));
            table.push(vec![
                k.to_string(),
                fmt_f64(eta),
                fmt_f64(movement),
                fmt_f64(d_ph),
            ]);
        }
    }

    let final_d_ph = drifts.last().map(|(_, d)| *d).unwrap_or(0.0);
    let converged_at_start = drifts.iter().all(|(_, d)| *d < ZERO_DRIFT);

    // least-squares line through (ln k, ln d) past the burn-in
    let first_fit_k = ((cfg.steps as f64) * cfg.burn_in).ceil() as usize;
    let fit_pts: Vec<(f64, f64)> = drifts
        .iter()
        .filter(|(k, d)| *k >= first_fit_k.max(cfg.gap) && *d >= ZERO_DRIFT)
        .map(|(k, d)| ((*k as f64).ln(), d.ln()))
        .collect();
    let (slope, intercept) = if converged_at_start {
        log::warn!("drift is zero from the first snapshot; nothing to fit");
        (None, None)
    } else if fit_pts.len() < MIN_FIT_POINTS {
        return Err(input_error(format!(
            "only {} usable drift points after burn-in; the fit needs at least {}",
            fit_pts.len(),
            MIN_FIT_POINTS
        )));
    } else {
        let n = fit_pts.len() as f64;
        let sx: f64 = fit_pts.iter().map(|p| p.0).sum();
        let sy: f64 = fit_pts.iter().map(|p| p.1).sum();
        let sxx: f64 = fit_pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = fit_pts.iter().map(|p| p.0 * p.1).sum();
        let denom = n * sxx - sx * sx;
        if denom.abs() < 1e-12 {
            return Err(numeric_error("degenerate abscissa in the decay fit"));
        }
        let m = (n * sxy - sx * sy) / denom;
        (Some(m), Some((sy - m * sx) / n))
    };

    table.write(&out.join("decay.csv"))?;
    write_json(
        &out.join("decay_axes.json"),
        &serde_json::json!({
            "title": "persistence drift under diminishing steps",
            "x": {"column": "k", "label": "step", "scale": "log"},
            "series": [
                {"column": "d_ph", "label": "drift between snapshots", "scale": "log"},
                {"column": "eta", "label": "step size", "scale": "log"},
            ],
        }),
    )?;
    write_json(
        &out.join("fit.json"),
        &serde_json::json!({
            "slope": slope,
            "intercept": intercept,
            "points_used": fit_pts.len(),
            "final_d_ph": final_d_ph,
            "converged_at_start": converged_at_start,
            "steps": cfg.steps,
            "eta0": cfg.eta0,
            "sigma": cfg.sigma,
            "burn_in": cfg.burn_in,
            "gap": cfg.gap,
            "seed": seed,
        }),
    )?;
    Ok(DecayOutcome {
        table,
        slope,
        intercept,
        points_used: fit_pts.len(),
        final_d_ph,
        converged_at_start,
    })
}
