//! Persistence diagrams of sublevel edge filtrations on graphs.

use crate::graph::WeightedGraph;
use crate::topology::{Filtration, PersistenceDiagram, PersistencePoint, TopologyError};

/// Persistence diagram of the sublevel filtration in dimension 0 or 1.
///
/// Dimension 0: all vertices are born at the filtration's vertex value; an
/// edge that merges two components kills the younger one (elder rule, ties
/// broken in favor of the component containing the smaller vertex id) at the
/// edge's value; each surviving component contributes one essential point.
///
/// Dimension 1: every edge that closes a cycle creates an independent class
/// born at that edge's value; cycles on a graph never die, so all dimension-1
/// points are essential. Edges are processed in `(value, index)` order.
pub fn persistence_diagram(
    graph: &WeightedGraph,
    f: &Filtration,
    dim: usize,
) -> Result<PersistenceDiagram, TopologyError> {
    if f.len() != graph.edge_count() {
        return Err(TopologyError::FiltrationLength {
            got: f.len(),
            expected: graph.edge_count(),
        });
    }
    if dim > 1 {
        return Err(TopologyError::UnsupportedDimension(dim));
    }

    let n = graph.vertex_count();
    let mut order: Vec<usize> = (0..graph.edge_count()).collect();
    order.sort_by(|&i, &j| f.edge_values[i].total_cmp(&f.edge_values[j]).then(i.cmp(&j)));

    // union-find over vertex indices; each root tracks the minimal vertex id
    // in its component as the elder representative
    let mut parent: Vec<usize> = (0..n).collect();
    let mut min_id: Vec<u64> = graph.vertices().to_vec();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    let mut points = Vec::new();
    for k in order {
        let e = graph.edges()[k];
        let iu = graph.vertex_index(e.u).expect("canonical edge");
        let iv = graph.vertex_index(e.v).expect("canonical edge");
        let (ru, rv) = (find(&mut parent, iu), find(&mut parent, iv));
        if ru == rv {
            if dim == 1 {
                points.push(PersistencePoint {
                    birth: f.edge_values[k],
                    death: None,
                });
            }
            continue;
        }
        // merge: component with the larger minimal vertex id dies
        let (survivor, victim) = if min_id[ru] <= min_id[rv] {
            (ru, rv)
        } else {
            (rv, ru)
        };
        parent[victim] = survivor;
        min_id[survivor] = min_id[survivor].min(min_id[victim]);
        if dim == 0 {
            points.push(PersistencePoint {
                birth: f.vertex_value,
                death: Some(f.edge_values[k]),
            });
        }
    }

    if dim == 0 {
        let mut roots = std::collections::BTreeSet::new();
        for i in 0..n {
            roots.insert(find(&mut parent, i));
        }
        for _ in 0..roots.len() {
            points.push(PersistencePoint {
                birth: f.vertex_value,
                death: None,
            });
        }
    }

    Ok(PersistenceDiagram::new(dim, points))
}
