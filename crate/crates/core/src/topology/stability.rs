//! Stability ratio of persistence under filtration perturbations.

use crate::graph::WeightedGraph;
use crate::topology::{
    bottleneck::bottleneck_distance, persistence::persistence_diagram, Filtration,
    TopologyError,
};

/// Outcome of comparing the diagrams of two filtrations on one graph.
#[derive(Debug, Clone, Copy)]
pub struct StabilityReport {
    /// Bottleneck distance in dimension 0.
    pub dist_dim0: f64,
    /// Bottleneck distance in dimension 1.
    pub dist_dim1: f64,
    /// max of the two distances
    pub distance: f64,
    /// sup-norm distance between the filtrations
    pub sup_diff: f64,
    /// `distance / sup_diff`, 0 when both are 0; stability keeps this <= 1
    pub ratio: f64,
}

/// Compares both persistence diagrams of `f` and `g` on the same graph.
///
/// Sublevel stability guarantees `distance <= sup_diff`, so the reported
/// ratio never exceeds 1 up to roundoff.
pub fn ph_stability_ratio(
    graph: &WeightedGraph,
    f: &Filtration,
    g: &Filtration,
) -> Result<StabilityReport, TopologyError> {
    if f.len() != g.len() {
        return Err(TopologyError::FiltrationLength {
            got: g.len(),
            expected: f.len(),
        });
    }
    let dist_dim0 = bottleneck_distance(
        &persistence_diagram(graph, f, 0)?,
        &persistence_diagram(graph, g, 0)?,
    )?;
    let dist_dim1 = bottleneck_distance(
        &persistence_diagram(graph, f, 1)?,
        &persistence_diagram(graph, g, 1)?,
    )?;
    let distance = dist_dim0.max(dist_dim1);
    let sup_diff = f.sup_distance(g);
    let ratio = if distance == 0.0 {
        0.0
    } else {
        distance / sup_diff
    };
    Ok(StabilityReport {
        dist_dim0,
        dist_dim1,
        distance,
        sup_diff,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn identical_filtrations_ratio_zero() {
        let g = WeightedGraph::new(&[1, 2, 3], &[(1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let f = Filtration::new(DVector::from_vec(vec![1.0, 2.0])).unwrap();
        let r = ph_stability_ratio(&g, &f, &f).unwrap();
        assert_eq!(r.ratio, 0.0);
        assert_eq!(r.distance, 0.0);
    }

    #[test]
    fn perturbation_ratio_at_most_one() {
        let g = WeightedGraph::new(
            &[1, 2, 3, 4],
            &[(1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (1, 4, 1.0)],
        )
        .unwrap();
        let f = Filtration::new(DVector::from_vec(vec![0.1, 0.9, 0.4, 1.3])).unwrap();
        let h = Filtration::new(DVector::from_vec(vec![0.25, 0.8, 0.45, 1.1])).unwrap();
        let r = ph_stability_ratio(&g, &f, &h).unwrap();
        assert!(r.ratio <= 1.0 + 1e-9, "ratio {}", r.ratio);
        assert!(r.distance <= r.sup_diff + 1e-12);
    }
}
