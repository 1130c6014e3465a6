//! Forman-Ricci curvature of weighted graph edges.

use nalgebra::DVector;

use crate::graph::WeightedGraph;

/// Forman-Ricci curvature per canonical edge.
///
/// For edge `e = (u, v)` with weight `w_e`, vertex weights `w_u`, `w_v`, and
/// `e' ~ u` ranging over the other edges at `u`:
///
/// ```text
/// Ric(e) = w_e * ( (w_u + w_v)/w_e
///                  - sum_{e' ~ u, e' != e} w_u / sqrt(w_e w_{e'})
///                  - sum_{e' ~ v, e' != e} w_v / sqrt(w_e w_{e'}) )
/// ```
///
/// With unit weights this reduces to `4 - deg(u) - deg(v)`.
pub fn forman_ricci(graph: &WeightedGraph) -> DVector<f64> {
    let edges = graph.edges();
    let mut out = DVector::zeros(edges.len());
    for (k, e) in edges.iter().enumerate() {
        let iu = graph.vertex_index(e.u).expect("canonical edge");
        let iv = graph.vertex_index(e.v).expect("canonical edge");
        let wu = graph.vertex_weights()[iu];
        let wv = graph.vertex_weights()[iv];
        let mut acc = (wu + wv) / e.w;
        for (j, other) in edges.iter().enumerate() {
            if j == k {
                continue;
            }
            if other.u == e.u || other.v == e.u {
                acc -= wu / (e.w * other.w).sqrt();
            }
            if other.u == e.v || other.v == e.v {
                acc -= wv / (e.w * other.w).sqrt();
            }
        }
        out[k] = e.w * acc;
    }
    out
}
