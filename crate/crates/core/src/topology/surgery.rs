//! Neck surgery: removing thin high-curvature cycles from a graph.
//!
//! A fundamental cycle is a surgery candidate when it is *thin* (the gap
//! between its largest and second-largest filtration value is below a
//! threshold, a proxy for low persistence) and *curved* (the mean absolute
//! Forman curvature over its edges exceeds the graph mean curvature by a
//! configurable number of standard deviations). Candidates are detected on
//! the input graph in one pass, then processed in chord order.
//!
//! Each step removes the largest-filtration live edge of the cycle. Two
//! guards keep the operation safe, reverting the step when violated:
//!
//! * connectivity: if the removal splits a component, the minimum-weight
//!   previously removed edge that reconnects it is restored; if none exists,
//!   or if restoration leaves algebraic connectivity below the input value,
//!   the step is reverted;
//! * monotonicity: the curvature-variance loss `sum (Ric - mean)^2` must not
//!   increase; otherwise the step is reverted.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::graph::{algebraic_connectivity, fundamental_cycle_basis, WeightedGraph};
use crate::topology::{curvature::forman_ricci, Filtration, TopologyError};

#[derive(Debug, Clone, Copy)]
pub struct SurgeryConfig {
    /// Threshold on the persistence proxy (max minus second-largest
    /// filtration value over the cycle) below which a cycle counts as thin.
    pub epsilon_neck: f64,
    /// Number of standard deviations above the mean curvature the cycle's
    /// mean absolute curvature must reach.
    pub z_threshold: f64,
}

impl Default for SurgeryConfig {
    fn default() -> Self {
        Self {
            epsilon_neck: 0.05,
            z_threshold: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SurgeryEvent {
    /// An edge was removed as the max-filtration edge of a validated cycle.
    Removed { edge: (u64, u64), cycle: usize },
    /// A previously removed edge was put back to reconnect the graph.
    Restored { edge: (u64, u64) },
    /// The step for this cycle was undone; `reason` names the failed guard.
    Reverted { cycle: usize, reason: &'static str },
}

#[derive(Debug, Clone)]
pub struct SurgeryLog {
    pub cycles_examined: usize,
    pub cycles_validated: usize,
    pub events: Vec<SurgeryEvent>,
    /// Edges absent from the output but present in the input.
    pub removed: Vec<(u64, u64)>,
    /// Removed edges that were put back by the connectivity guard.
    pub restored: Vec<(u64, u64)>,
    pub variance_loss_before: f64,
    pub variance_loss_after: f64,
    pub connectivity_before: f64,
    pub connectivity_after: f64,
}

/// Detects thin high-curvature cycles and removes one edge from each.
///
/// Returns the surgered graph and a log of every action taken. The output is
/// connected whenever the input is, and its curvature-variance loss never
/// exceeds the input's.
pub fn neck_surgery(
    graph: &WeightedGraph,
    f: &Filtration,
    config: &SurgeryConfig,
) -> Result<(WeightedGraph, SurgeryLog), TopologyError> {
    if f.len() != graph.edge_count() {
        return Err(TopologyError::FiltrationLength {
            got: f.len(),
            expected: graph.edge_count(),
        });
    }
    for (name, value) in [
        ("epsilon_neck", config.epsilon_neck),
        ("z_threshold", config.z_threshold),
    ] {
        if !value.is_finite() || value < 0.0 {
            return Err(TopologyError::BadParameter { name, value });
        }
    }

    let basis = fundamental_cycle_basis(graph);
    let ric = forman_ricci(graph);
    let m = graph.edge_count();
    let mean_ric = if m == 0 { 0.0 } else { ric.sum() / m as f64 };
    let sigma_ric = if m == 0 {
        0.0
    } else {
        (ric.iter().map(|r| (r - mean_ric).powi(2)).sum::<f64>() / m as f64).sqrt()
    };

    let mut validated: Vec<usize> = Vec::new();
    for k in 0..basis.cycle_count() {
        let edges = basis.cycle_edges(k);
        let mut values: Vec<f64> = edges.iter().map(|&e| f.edge_values[e]).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        let proxy = values[0] - values[1];
        let cycle_mean_abs =
            edges.iter().map(|&e| ric[e].abs()).sum::<f64>() / edges.len() as f64;
        if proxy < config.epsilon_neck
            && cycle_mean_abs > mean_ric + config.z_threshold * sigma_ric
        {
            validated.push(k);
        }
    }

    let comps_in = graph.component_count();
    let lambda2_in = algebraic_connectivity(graph);
    let loss_in = variance_loss(graph);

    let mut removed: BTreeSet<usize> = BTreeSet::new();
    let mut restored_log: Vec<(u64, u64)> = Vec::new();
    let mut events = Vec::new();

    for &k in &validated {
        let live: Vec<usize> = basis
            .cycle_edges(k)
            .into_iter()
            .filter(|e| !removed.contains(e))
            .collect();
        // a cycle's own chord is never another cycle's edge, so live edges remain
        let &target = live
            .iter()
            .max_by(|&&a, &&b| {
                f.edge_values[a]
                    .total_cmp(&f.edge_values[b])
                    .then(b.cmp(&a))
            })
            .expect("the cycle's chord is always live");

        let before = removed.clone();
        let loss_before_step = variance_loss(&rebuild(graph, &removed));
        removed.insert(target);
        let mut step_restored: Option<usize> = None;

        let mut candidate = rebuild(graph, &removed);
        if candidate.component_count() > comps_in {
            // find the cheapest previously removed edge that reconnects
            let labels = candidate.component_labels();
            let reconnector = removed
                .iter()
                .filter(|&&e| e != target)
                .filter(|&&e| {
                    let edge = graph.edges()[e];
                    let iu = graph.vertex_index(edge.u).expect("canonical edge");
                    let iv = graph.vertex_index(edge.v).expect("canonical edge");
                    labels[iu] != labels[iv]
                })
                .min_by(|&&a, &&b| {
                    graph.edges()[a]
                        .w
                        .total_cmp(&graph.edges()[b].w)
                        .then(a.cmp(&b))
                })
                .copied();
            match reconnector {
                Some(r) => {
                    removed.remove(&r);
                    step_restored = Some(r);
                    candidate = rebuild(graph, &removed);
                    if candidate.component_count() > comps_in
                        || algebraic_connectivity(&candidate) < lambda2_in * (1.0 - 1e-9)
                    {
                        removed = before;
                        events.push(SurgeryEvent::Reverted {
                            cycle: k,
                            reason: "connectivity",
                        });
                        continue;
                    }
                }
                None => {
                    removed = before;
                    events.push(SurgeryEvent::Reverted {
                        cycle: k,
                        reason: "connectivity",
                    });
                    continue;
                }
            }
        }

        if variance_loss(&candidate) > loss_before_step + 1e-12 {
            removed = before;
            events.push(SurgeryEvent::Reverted {
                cycle: k,
                reason: "variance",
            });
            continue;
        }

        let edge = graph.edges()[target];
        events.push(SurgeryEvent::Removed {
            edge: (edge.u, edge.v),
            cycle: k,
        });
        if let Some(r) = step_restored {
            let redge = graph.edges()[r];
            events.push(SurgeryEvent::Restored {
                edge: (redge.u, redge.v),
            });
            restored_log.push((redge.u, redge.v));
        }
    }

    let output = rebuild(graph, &removed);
    let log = SurgeryLog {
        cycles_examined: basis.cycle_count(),
        cycles_validated: validated.len(),
        events,
        removed: removed
            .iter()
            .map(|&e| (graph.edges()[e].u, graph.edges()[e].v))
            .collect(),
        restored: restored_log,
        variance_loss_before: loss_in,
        variance_loss_after: variance_loss(&output),
        connectivity_before: lambda2_in,
        connectivity_after: algebraic_connectivity(&output),
    };
    Ok((output, log))
}

/// Curvature-variance loss: sum of squared deviations of Forman curvature
/// from its mean over the edge set.
fn variance_loss(graph: &WeightedGraph) -> f64 {
    let m = graph.edge_count();
    if m == 0 {
        return 0.0;
    }
    let ric = forman_ricci(graph);
    let mean = ric.sum() / m as f64;
    ric.iter().map(|r| (r - mean).powi(2)).sum()
}

fn rebuild(graph: &WeightedGraph, removed: &BTreeSet<usize>) -> WeightedGraph {
    let edges: Vec<(u64, u64, f64)> = graph
        .edges()
        .iter()
        .enumerate()
        .filter(|(k, _)| !removed.contains(k))
        .map(|(_, e)| (e.u, e.v, e.w))
        .collect();
    let weights: BTreeMap<u64, f64> = graph
        .vertices()
        .iter()
        .copied()
        .zip(graph.vertex_weights().iter().copied())
        .collect();
    WeightedGraph::with_options(graph.vertices(), &edges, Some(&weights), true)
        .expect("edge subset of a valid graph is valid")
}
