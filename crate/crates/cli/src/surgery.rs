//! The `surgery` mode: cut thin high-curvature necks out of a graph.
//!
//! The filtration comes either from explicit per-edge values (in the graph
//! file's canonical edge order) or from vertex states via the standard
//! separation-plus-curvature recipe. Outputs: the full action log, a
//! per-edge curvature table before and after, and the surgered graph.

use std::path::Path;

use nalgebra::DVector;

use fabric_core::topology::{forman_ricci, neck_surgery, SurgeryConfig, SurgeryEvent};
use fabric_core::{Filtration, WeightedGraph};

use crate::config::{self, SurgeryCfg};
use crate::table::{fmt_bool, fmt_f64, Table};
use crate::{input_error, numeric_error, prepare_out_dir, write_json, CliError};

pub struct SurgeryOutcome {
    pub log: fabric_core::SurgeryLog,
    pub after: WeightedGraph,
}

pub fn run(config_path: &Path, out: &Path, _seed: u64) -> Result<SurgeryOutcome, CliError> {
    let (cfg, base): (SurgeryCfg, _) = config::load(config_path)?;
    let graph_rel = cfg
        .graph
        .as_ref()
        .ok_or_else(|| input_error("config missing \"graph\""))?;
    let graph_path = config::resolve(&base, graph_rel);
    let text = std::fs::read_to_string(&graph_path)
        .map_err(|e| input_error(format!("cannot read graph {}: {e}", graph_path.display())))?;
    let graph = WeightedGraph::from_json_str(&text)
        .map_err(|e| input_error(format!("graph {}: {e}", graph_path.display())))?;
    prepare_out_dir(out)?;

    let filtration = match (&cfg.edge_values, &cfg.states) {
        (Some(values), _) => {
            if values.len() != graph.edge_count() {
                return Err(input_error(format!(
                    "edge_values has {} entries, the graph has {} edges",
                    values.len(),
                    graph.edge_count()
                )));
            }
            Filtration::new(DVector::from_vec(values.clone()))
                .map_err(|e| input_error(format!("edge_values: {e}")))?
        }
        (None, Some(states)) => {
            let vecs: Vec<DVector<f64>> = states
                .iter()
                .map(|s| DVector::from_vec(s.clone()))
                .collect();
            fabric_core::topology::filtration_values(
                &graph,
                &vecs,
                cfg.filtration.alpha,
                cfg.filtration.beta,
            )
            .map_err(|e| input_error(format!("states: {e}")))?
        }
        (None, None) => {
            return Err(input_error(
                "config needs \"edge_values\" or \"states\" to define the filtration",
            ))
        }
    };

    let surgery_cfg = SurgeryConfig {
        epsilon_neck: cfg.epsilon_neck,
        z_threshold: cfg.z_threshold,
    };
    let (after, log) = neck_surgery(&graph, &filtration, &surgery_cfg)
        .map_err(|e| numeric_error(format!("surgery: {e}")))?;

    // per-edge curvature before and after; removed edges keep an empty
    // "after" cell
    let ric_before = forman_ricci(&graph);
    let ric_after = forman_ricci(&after);
    let mut table = Table::new(&["u", "v", "filtration", "ric_before", "ric_after", "removed"]);
    for (k, e) in graph.edges().iter().enumerate() {
        let after_idx = after.edge_index(e.u, e.v);
        table.push(vec![
            e.u.to_string(),
            e.v.to_string(),
            fmt_f64(filtration.edge_values[k]),
            fmt_f64(ric_before[k]),
            after_idx.map(|j| fmt_f64(ric_after[j])).unwrap_or_default(),
            fmt_bool(after_idx.is_none()),
        ]);
    }

    let events: Vec<serde_json::Value> = log
        .events
        .iter()
        .map(|ev| match ev {
            SurgeryEvent::Removed { edge, cycle } => serde_json::json!({
                "action": "removed", "edge": [edge.0, edge.1], "cycle": cycle,
            }),
            SurgeryEvent::Restored { edge } => serde_json::json!({
                "action": "restored", "edge": [edge.0, edge.1],
            }),
            SurgeryEvent::Reverted { cycle, reason } => serde_json::json!({
                "action": "reverted", "cycle": cycle, "reason": reason,
            }),
        })
        .collect();
    write_json(
        &out.join("surgery.json"),
        &serde_json::json!({
            "cycles_examined": log.cycles_examined,
            "cycles_validated": log.cycles_validated,
            "events": events,
            "removed": log.removed.iter().map(|(u, v)| vec![*u, *v]).collect::<Vec<_>>(),
            "restored": log.restored.iter().map(|(u, v)| vec![*u, *v]).collect::<Vec<_>>(),
            "variance_loss_before": log.variance_loss_before,
            "variance_loss_after": log.variance_loss_after,
            "connectivity_before": log.connectivity_before,
            "connectivity_after": log.connectivity_after,
        }),
    )?;
    table.write(&out.join("curvature.csv"))?;
    let mut graph_text = after.to_json_string();
    if !graph_text.ends_with('\n') {
        graph_text.push('\n');
    }
    std::fs::write(out.join("graph_after.json"), graph_text)
        .map_err(|e| input_error(format!("cannot write graph_after.json: {e}")))?;

    log::info!(
        "surgery: removed {} edge(s), variance loss {:.4} -> {:.4}",
        log.removed.len(),
        log.variance_loss_before,
        log.variance_loss_after
    );
    Ok(SurgeryOutcome { log, after })
}
