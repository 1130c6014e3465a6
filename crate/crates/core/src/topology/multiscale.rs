//! Diagrams across a grid of smoothing scales.

use crate::graph::WeightedGraph;
use crate::topology::{
    bottleneck::bottleneck_distance, filtration::smooth_filtration,
    persistence::persistence_diagram, Filtration, PersistenceDiagram, ScalePolicy,
    TopologyError,
};

/// Diagrams of one filtration at one smoothing scale.
#[derive(Debug, Clone)]
pub struct ScaleSlice {
    pub sigma: f64,
    pub filtration: Filtration,
    pub dim0: PersistenceDiagram,
    pub dim1: PersistenceDiagram,
}

/// Per-scale bottleneck distances between two filtrations and their supremum.
#[derive(Debug, Clone)]
pub struct MultiscaleDrift {
    pub per_scale: Vec<(f64, f64, f64)>,
    pub sup: f64,
}

/// Smooths the filtration at every scale of the policy and computes both
/// persistence diagrams per scale.
pub fn multiscale_analysis(
    graph: &WeightedGraph,
    f: &Filtration,
    policy: &ScalePolicy,
) -> Result<Vec<ScaleSlice>, TopologyError> {
    policy
        .scales()
        .iter()
        .map(|&sigma| {
            let smoothed = smooth_filtration(graph, f, sigma)?;
            let dim0 = persistence_diagram(graph, &smoothed, 0)?;
            let dim1 = persistence_diagram(graph, &smoothed, 1)?;
            Ok(ScaleSlice {
                sigma,
                filtration: smoothed,
                dim0,
                dim1,
            })
        })
        .collect()
}

/// Bottleneck drift between two filtrations over the scale grid.
///
/// Each entry is `(sigma, d_B in dim 0, d_B in dim 1)`; `sup` is the largest
/// distance over all scales and both dimensions. Because smoothing is
/// 1-Lipschitz in the sup norm, the result never exceeds the raw sup
/// distance between the inputs.
pub fn multiscale_drift(
    graph: &WeightedGraph,
    f: &Filtration,
    g: &Filtration,
    policy: &ScalePolicy,
) -> Result<MultiscaleDrift, TopologyError> {
    let mut per_scale = Vec::with_capacity(policy.scales().len());
    let mut sup = 0.0f64;
    for &sigma in policy.scales() {
        let sf = smooth_filtration(graph, f, sigma)?;
        let sg = smooth_filtration(graph, g, sigma)?;
        let d0 = bottleneck_distance(
            &persistence_diagram(graph, &sf, 0)?,
            &persistence_diagram(graph, &sg, 0)?,
        )?;
        let d1 = bottleneck_distance(
            &persistence_diagram(graph, &sf, 1)?,
            &persistence_diagram(graph, &sg, 1)?,
        )?;
        sup = sup.max(d0).max(d1);
        per_scale.push((sigma, d0, d1));
    }
    Ok(MultiscaleDrift { per_scale, sup })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn square_with_chord() -> (WeightedGraph, Filtration) {
        let g = WeightedGraph::new(
            &[1, 2, 3, 4],
            &[(1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (1, 4, 1.0), (1, 3, 1.0)],
        )
        .unwrap();
        let f = Filtration::new(DVector::from_vec(vec![0.5, 1.0, 1.5, 2.0, 2.5])).unwrap();
        (g, f)
    }

    #[test]
    fn zero_scale_slice_reproduces_input() {
        let (g, f) = square_with_chord();
        let policy = ScalePolicy::new(vec![0.0, 1.0]).unwrap();
        let slices = multiscale_analysis(&g, &f, &policy).unwrap();
        assert_eq!(slices.len(), 2);
        assert_eq!(slices[0].filtration, f);
        assert_eq!(slices[0].dim1.points().len(), 2);
    }

    #[test]
    fn drift_of_identical_filtrations_is_zero() {
        let (g, f) = square_with_chord();
        let policy = ScalePolicy::new(vec![0.0, 0.5, 2.0]).unwrap();
        let drift = multiscale_drift(&g, &f, &f, &policy).unwrap();
        assert_relative_eq!(drift.sup, 0.0);
    }

    #[test]
    fn drift_bounded_by_raw_sup_distance() {
        let (g, f) = square_with_chord();
        let mut shifted = f.edge_values.clone();
        shifted[2] += 0.3;
        shifted[4] -= 0.2;
        let fg = Filtration::new(shifted).unwrap();
        let policy = ScalePolicy::new(vec![0.0, 0.3, 1.0, 4.0]).unwrap();
        let drift = multiscale_drift(&g, &f, &fg, &policy).unwrap();
        assert!(drift.sup <= f.sup_distance(&fg) + 1e-12);
        assert_eq!(drift.per_scale.len(), 4);
    }
}
