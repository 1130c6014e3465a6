//! Discontinuity tracking across semantic handover events and the
//! context-aware distance between reasoning traces.

use nalgebra::{DMatrix, DVector};

use super::{ReasoningTrace, SemanticsError};
use crate::cochain::AffineConstraint;
use crate::topology::bottleneck_distance;

/// One handover: the state just before and after, with the announced
/// transition map (affine; `None` means identity).
#[derive(Debug, Clone)]
pub struct TrackingEvent {
    pub t: f64,
    pub before: DVector<f64>,
    pub after: DVector<f64>,
    pub map: Option<(DMatrix<f64>, DVector<f64>)>,
}

impl TrackingEvent {
    /// Jump error `|c(t+) - phi(c(t-))|`.
    pub fn error(&self) -> f64 {
        let mapped = match &self.map {
            Some((a, b)) => a * &self.before + b,
            None => self.before.clone(),
        };
        (&self.after - mapped).norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingReport {
    /// `(t_k, e_k)` per event, in input order.
    pub event_errors: Vec<(f64, f64)>,
    pub max_error: f64,
    /// `(L M / mu)(1 - e^{-mu T})`: the worst accumulated jump a
    /// contracting tracker can exhibit over the horizon.
    pub bound: f64,
    pub within_bound: bool,
}

/// Checks observed handover jumps against the contraction bound.
///
/// `lipschitz` bounds the transition maps, `amplitude` the per-event state
/// magnitude, `mu` is the tracker's contraction rate, and `horizon` the
/// observation window.
pub fn tracking_report(
    events: &[TrackingEvent],
    lipschitz: f64,
    amplitude: f64,
    mu: f64,
    horizon: f64,
) -> Result<TrackingReport, SemanticsError> {
    for (name, value) in [
        ("lipschitz", lipschitz),
        ("amplitude", amplitude),
        ("mu", mu),
        ("horizon", horizon),
    ] {
        if !(value.is_finite() && value > 0.0) {
            return Err(SemanticsError::BadParameter { name, value });
        }
    }
    let mut event_errors = Vec::with_capacity(events.len());
    let mut max_error = 0.0f64;
    for ev in events {
        if ev.before.len() != ev.after.len() {
            return Err(SemanticsError::PositionLength {
                expected: ev.before.len(),
                got: ev.after.len(),
            });
        }
        let e = ev.error();
        if !e.is_finite() {
            return Err(SemanticsError::NonFinite);
        }
        max_error = max_error.max(e);
        event_errors.push((ev.t, e));
    }
    let bound = (lipschitz * amplitude / mu) * (1.0 - (-mu * horizon).exp());
    Ok(TrackingReport {
        event_errors,
        max_error,
        bound,
        within_bound: max_error <= bound,
    })
}

/// Distance between two reasoning traces with their contexts:
/// `a0 d_B(D0) + a1 d_B(D1) + |C_a - C_b|_F + |t_a - t_b|`.
///
/// Contexts must be both absent (contributing zero) or both present with
/// equal shape. An essential-class mismatch in either diagram makes the
/// distance infinite.
pub fn contextual_distance(
    a: &ReasoningTrace,
    b: &ReasoningTrace,
    ctx_a: Option<&AffineConstraint>,
    ctx_b: Option<&AffineConstraint>,
    alpha0: f64,
    alpha1: f64,
) -> Result<f64, SemanticsError> {
    for (name, value) in [("alpha0", alpha0), ("alpha1", alpha1)] {
        if !(value.is_finite() && value >= 0.0) {
            return Err(SemanticsError::BadParameter { name, value });
        }
    }
    let d0 = bottleneck_distance(&a.dim0, &b.dim0)?;
    let d1 = bottleneck_distance(&a.dim1, &b.dim1)?;
    let ctx = match (ctx_a, ctx_b) {
        (None, None) => 0.0,
        (Some(ca), Some(cb)) => {
            if ca.matrix().shape() != cb.matrix().shape() {
                return Err(SemanticsError::ContextMismatch);
            }
            (ca.matrix() - cb.matrix()).norm() + (ca.target() - cb.target()).norm()
        }
        _ => return Err(SemanticsError::ContextMismatch),
    };
    Ok(alpha0 * d0 + alpha1 * d1 + ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use crate::semantics::{reasoning_trace, SceneState, SemanticTensor};
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn identity_map_measures_raw_jump() {
        let ev = TrackingEvent {
            t: 1.0,
            before: DVector::from_vec(vec![1.0, 0.0]),
            after: DVector::from_vec(vec![1.0, 0.5]),
            map: None,
        };
        assert_relative_eq!(ev.error(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn affine_map_cancels_announced_transition() {
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let shift = DVector::from_vec(vec![0.1, 0.2]);
        let before = DVector::from_vec(vec![0.7, -0.3]);
        let after = &rot * &before + &shift;
        let ev = TrackingEvent {
            t: 0.0,
            before,
            after,
            map: Some((rot, shift)),
        };
        assert_relative_eq!(ev.error(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn bound_formula_and_verdict() {
        let ev = TrackingEvent {
            t: 0.5,
            before: DVector::from_vec(vec![0.0]),
            after: DVector::from_vec(vec![1.0]),
            map: None,
        };
        let report = tracking_report(&[ev], 2.0, 1.5, 0.5, 3.0).unwrap();
        let expected = (2.0 * 1.5 / 0.5) * (1.0 - (-1.5f64).exp());
        assert_relative_eq!(report.bound, expected, epsilon = 1e-12);
        assert_relative_eq!(report.bound, 4.66122, epsilon = 1e-5);
        assert_relative_eq!(report.max_error, 1.0, epsilon = 1e-12);
        assert!(report.within_bound);

        let big = TrackingEvent {
            t: 0.7,
            before: DVector::from_vec(vec![0.0]),
            after: DVector::from_vec(vec![10.0]),
            map: None,
        };
        let report = tracking_report(&[big], 2.0, 1.5, 0.5, 3.0).unwrap();
        assert!(!report.within_bound);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(tracking_report(&[], 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(tracking_report(&[], 1.0, 1.0, -0.5, 1.0).is_err());
    }

    fn trace_of(positions: &[(f64, f64)]) -> ReasoningTrace {
        let g = WeightedGraph::new(
            &[1, 2, 3],
            &[(1, 2, 1.0), (2, 3, 1.0), (1, 3, 1.0)],
        )
        .unwrap();
        let tensors = positions
            .iter()
            .map(|&(x, y)| {
                SemanticTensor::from_position(DVector::from_vec(vec![x, y])).unwrap()
            })
            .collect();
        let scene = SceneState::new(g, 2, tensors).unwrap();
        reasoning_trace(&scene, 1.0, 0.0).unwrap()
    }

    #[test]
    fn contextual_distance_composes_terms() {
        let ta = trace_of(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        let tb = trace_of(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        let ca = AffineConstraint::new(
            DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]),
            DVector::from_vec(vec![1.0]),
        )
        .unwrap();
        let cb = AffineConstraint::new(
            DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.2]),
            DVector::from_vec(vec![1.0]),
        )
        .unwrap();
        // identical traces: only the context term contributes
        let d = contextual_distance(&ta, &tb, Some(&ca), Some(&cb), 1.0, 1.0).unwrap();
        assert_relative_eq!(d, 0.2, epsilon = 1e-12);

        // absent on both sides contributes zero
        let d0 = contextual_distance(&ta, &tb, None, None, 1.0, 1.0).unwrap();
        assert_relative_eq!(d0, 0.0, epsilon = 1e-12);

        // one-sided context is not comparable
        assert!(matches!(
            contextual_distance(&ta, &tb, Some(&ca), None, 1.0, 1.0),
            Err(SemanticsError::ContextMismatch)
        ));
    }

    #[test]
    fn diagram_shift_enters_distance() {
        let ta = trace_of(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        // uniformly scaling positions scales every filtration value, so the
        // dim0 deaths and the dim1 essential birth all move
        let tb = trace_of(&[(0.0, 0.0), (1.2, 0.0), (0.0, 1.2)]);
        let d_top = contextual_distance(&ta, &tb, None, None, 1.0, 0.0).unwrap();
        assert!(d_top > 0.0);
        let sup = ta.filtration.sup_distance(&tb.filtration);
        // stability: bottleneck change is controlled by the sup change
        assert!(d_top <= sup + 1e-12);
    }
}
