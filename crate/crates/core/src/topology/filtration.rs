//! Edge filtrations combining state separation and curvature.

use nalgebra::DVector;

use crate::graph::WeightedGraph;
use crate::topology::{curvature, Filtration, TopologyError};

/// Filtration value per edge: `alpha * |S_u - S_v| + beta * |Ric(e)|`,
/// with every vertex entering at 0.
pub fn filtration_values(
    graph: &WeightedGraph,
    states: &[DVector<f64>],
    alpha: f64,
    beta: f64,
) -> Result<Filtration, TopologyError> {
    if states.len() != graph.vertex_count() {
        return Err(TopologyError::StateCount {
            expected: graph.vertex_count(),
            got: states.len(),
        });
    }
    if let Some(first) = states.first() {
        for s in states {
            if s.len() != first.len() {
                return Err(TopologyError::StateDim(first.len(), s.len()));
            }
        }
    }
    for (name, value) in [("alpha", alpha), ("beta", beta)] {
        if !value.is_finite() || value < 0.0 {
            return Err(TopologyError::BadParameter { name, value });
        }
    }

    let ric = if beta > 0.0 {
        curvature::forman_ricci(graph)
    } else {
        DVector::zeros(graph.edge_count())
    };
    let mut values = DVector::zeros(graph.edge_count());
    for (k, e) in graph.edges().iter().enumerate() {
        let iu = graph.vertex_index(e.u).expect("canonical edge");
        let iv = graph.vertex_index(e.v).expect("canonical edge");
        values[k] = alpha * (&states[iu] - &states[iv]).norm() + beta * ric[k].abs();
    }
    Filtration::new(values)
}

/// One smoothing pass at scale `sigma`.
///
/// Each edge value is blended with the mean over edges sharing a vertex:
/// `f'(e) = (1 - lam) f(e) + lam * mean(neighbors)`, `lam = sigma/(1+sigma)`.
/// The map is the identity at `sigma = 0`, preserves pointwise order of two
/// filtrations, and is 1-Lipschitz in the sup norm. Edges with no neighbors
/// keep their value.
pub fn smooth_filtration(
    graph: &WeightedGraph,
    f: &Filtration,
    sigma: f64,
) -> Result<Filtration, TopologyError> {
    if f.len() != graph.edge_count() {
        return Err(TopologyError::FiltrationLength {
            got: f.len(),
            expected: graph.edge_count(),
        });
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(TopologyError::BadParameter {
            name: "sigma",
            value: sigma,
        });
    }
    let lam = sigma / (1.0 + sigma);
    let edges = graph.edges();
    let mut out = DVector::zeros(f.len());
    for (k, e) in edges.iter().enumerate() {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (j, other) in edges.iter().enumerate() {
            if j == k {
                continue;
            }
            if other.u == e.u || other.v == e.u || other.u == e.v || other.v == e.v {
                sum += f.edge_values[j];
                count += 1;
            }
        }
        out[k] = if count == 0 {
            f.edge_values[k]
        } else {
            (1.0 - lam) * f.edge_values[k] + lam * sum / count as f64
        };
    }
    Filtration::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p3() -> WeightedGraph {
        WeightedGraph::new(&[1, 2, 3], &[(1, 2, 1.0), (2, 3, 1.0)]).unwrap()
    }

    #[test]
    fn scalar_states_give_absolute_differences() {
        let g = p3();
        let states = vec![
            DVector::from_vec(vec![0.0]),
            DVector::from_vec(vec![1.0]),
            DVector::from_vec(vec![3.0]),
        ];
        let f = filtration_values(&g, &states, 1.0, 0.0).unwrap();
        assert_relative_eq!(f.edge_values[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(f.edge_values[1], 2.0, epsilon = 1e-14);
        assert_eq!(f.vertex_value, 0.0);
    }

    #[test]
    fn curvature_term_uses_absolute_value() {
        // both P3 edges have Ric = 1
        let g = p3();
        let states = vec![DVector::zeros(1); 3];
        let f = filtration_values(&g, &states, 1.0, 2.0).unwrap();
        assert_relative_eq!(f.edge_values[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(f.edge_values[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_shapes_and_params() {
        let g = p3();
        let short = vec![DVector::zeros(1); 2];
        assert!(matches!(
            filtration_values(&g, &short, 1.0, 0.0),
            Err(TopologyError::StateCount { .. })
        ));
        let ragged = vec![DVector::zeros(1), DVector::zeros(2), DVector::zeros(1)];
        assert!(matches!(
            filtration_values(&g, &ragged, 1.0, 0.0),
            Err(TopologyError::StateDim(1, 2))
        ));
        let states = vec![DVector::zeros(1); 3];
        assert!(matches!(
            filtration_values(&g, &states, -1.0, 0.0),
            Err(TopologyError::BadParameter { name: "alpha", .. })
        ));
    }

    #[test]
    fn smoothing_identity_at_zero_scale() {
        let g = p3();
        let f = Filtration::new(DVector::from_vec(vec![1.0, 2.0])).unwrap();
        let s = smooth_filtration(&g, &f, 0.0).unwrap();
        assert_eq!(s, f);
    }

    #[test]
    fn smoothing_blends_neighbor_means() {
        // the two P3 edges neighbor each other; lam = 1/2 at sigma = 1
        let g = p3();
        let f = Filtration::new(DVector::from_vec(vec![1.0, 3.0])).unwrap();
        let s = smooth_filtration(&g, &f, 1.0).unwrap();
        assert_relative_eq!(s.edge_values[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(s.edge_values[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn smoothing_keeps_isolated_edge_value() {
        let g = WeightedGraph::new_disconnected(&[1, 2, 3, 4], &[(1, 2, 1.0), (3, 4, 1.0)])
            .unwrap();
        let f = Filtration::new(DVector::from_vec(vec![5.0, 7.0])).unwrap();
        let s = smooth_filtration(&g, &f, 10.0).unwrap();
        assert_relative_eq!(s.edge_values[0], 5.0, epsilon = 1e-14);
        assert_relative_eq!(s.edge_values[1], 7.0, epsilon = 1e-14);
    }
}
