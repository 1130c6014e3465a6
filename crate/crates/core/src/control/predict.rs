//! Short-horizon extrapolation of semantic trace vectors.

use nalgebra::DVector;

use super::ControlError;

/// A trace extrapolated over a latency horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePrediction {
    pub predicted: DVector<f64>,
    /// True when no history was available and the current trace was held.
    pub held: bool,
}

/// Extrapolates a trace linearly over `horizon` seconds.
///
/// With a previous sample taken `h` seconds earlier the estimate is
/// `x + (horizon / h) (x - x_prev)`; without history the current value is
/// held (zero-order hold) and flagged.
pub fn predict_trace(
    current: &DVector<f64>,
    previous: Option<&DVector<f64>>,
    h: f64,
    horizon: f64,
) -> Result<TracePrediction, ControlError> {
    if !(h.is_finite() && h > 0.0) {
        return Err(ControlError::BadParameter {
            name: "h",
            value: h,
        });
    }
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(ControlError::BadParameter {
            name: "horizon",
            value: horizon,
        });
    }
    match previous {
        Some(prev) if prev.len() == current.len() => {
            let predicted = current + (current - prev) * (horizon / h);
            Ok(TracePrediction {
                predicted,
                held: false,
            })
        }
        _ => Ok(TracePrediction {
            predicted: current.clone(),
            held: true,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_extrapolation() {
        let prev = DVector::from_vec(vec![0.0, 1.0]);
        let cur = DVector::from_vec(vec![1.0, 3.0]);
        let p = predict_trace(&cur, Some(&prev), 0.5, 0.25).unwrap();
        assert!(!p.held);
        assert_relative_eq!(
            p.predicted,
            DVector::from_vec(vec![1.5, 4.0]),
            epsilon = 1e-12
        );
    }

    #[test]
    fn holds_without_history() {
        let cur = DVector::from_vec(vec![2.0]);
        let p = predict_trace(&cur, None, 0.1, 0.3).unwrap();
        assert!(p.held);
        assert_eq!(p.predicted, cur);
    }

    #[test]
    fn zero_horizon_is_identity() {
        let prev = DVector::from_vec(vec![5.0]);
        let cur = DVector::from_vec(vec![7.0]);
        let p = predict_trace(&cur, Some(&prev), 0.1, 0.0).unwrap();
        assert_eq!(p.predicted, cur);
    }

    #[test]
    fn rejects_bad_steps() {
        let cur = DVector::from_vec(vec![1.0]);
        assert!(predict_trace(&cur, None, 0.0, 0.1).is_err());
        assert!(predict_trace(&cur, None, 0.1, -0.1).is_err());
    }
}
