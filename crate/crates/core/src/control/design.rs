//! Lead compensation and the stock loop used by the experiments.

use num_complex::Complex64;

use super::margin::phase_margin;
use super::tf::{LoopModel, RationalTF};
use super::ControlError;

/// Crossover target of the stock loop, Hz.
pub const DEFAULT_CROSSOVER_HZ: f64 = 0.75;
/// Phase added by the stock compensator at its center frequency, radians.
pub const DEFAULT_LEAD_RAD: f64 = 30f64.to_radians();

/// First-order lead `k (1 + T s) / (1 + a T s)` with `a < 1`.
///
/// The ratio `a = (1 - sin phi) / (1 + sin phi)` and center
/// `T = 1 / (2 pi f_c sqrt a)` put the maximum phase advance, exactly
/// `phi`, at `f_c`.
pub fn lead_compensator(phi: f64, f_c: f64, k: f64) -> Result<RationalTF, ControlError> {
    if !(phi.is_finite() && phi > 0.0 && phi < std::f64::consts::FRAC_PI_2) {
        return Err(ControlError::BadParameter {
            name: "phi",
            value: phi,
        });
    }
    if !(f_c.is_finite() && f_c > 0.0) {
        return Err(ControlError::BadParameter {
            name: "f_c",
            value: f_c,
        });
    }
    let a = (1.0 - phi.sin()) / (1.0 + phi.sin());
    let t = 1.0 / (2.0 * std::f64::consts::PI * f_c * a.sqrt());
    RationalTF::new(vec![k, k * t], vec![1.0, a * t])
}

/// Gain that places the unity crossover of `compensator * plant` at `f_c`.
pub fn tune_crossover_gain(
    plant: &RationalTF,
    compensator: &RationalTF,
    f_c: f64,
) -> Result<f64, ControlError> {
    if !(f_c.is_finite() && f_c > 0.0) {
        return Err(ControlError::BadParameter {
            name: "f_c",
            value: f_c,
        });
    }
    let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI * f_c);
    let mag = (compensator.eval(s) * plant.eval(s)).norm();
    if !(mag.is_finite() && mag > 0.0) {
        return Err(ControlError::BadParameter {
            name: "loop gain at f_c",
            value: mag,
        });
    }
    Ok(1.0 / mag)
}

/// Unit-inertia, unit-damping rotational plant `1 / (s^2 + s)`.
pub fn default_plant() -> RationalTF {
    RationalTF::new(vec![1.0], vec![0.0, 1.0, 1.0]).expect("fixed coefficients")
}

/// The stock loop: default plant under a 30-degree lead placed at 0.75 Hz,
/// gain chosen so the crossover lands exactly on the design frequency.
pub fn default_loop(delay: f64) -> LoopModel {
    let plant = default_plant();
    let shape = lead_compensator(DEFAULT_LEAD_RAD, DEFAULT_CROSSOVER_HZ, 1.0)
        .expect("fixed design parameters");
    let k = tune_crossover_gain(&plant, &shape, DEFAULT_CROSSOVER_HZ)
        .expect("default plant has finite gain at the design frequency");
    LoopModel::new(plant, shape.scale(k), delay)
}

/// Phase lost to a dead time at the crossover frequency, degrees:
/// `360 f_c dt`.
pub fn delay_phase_shift_deg(f_c: f64, delay: f64) -> f64 {
    360.0 * f_c * delay
}

/// Dead-time budget `ln(gamma) / (k_c |G|_inf)` guaranteeing the loop gain
/// stays below the small-gain level `gamma`.
pub fn delay_margin_bound(gamma: f64, k_c: f64, g_norm: f64) -> Result<f64, ControlError> {
    if !(gamma.is_finite() && gamma > 1.0) {
        return Err(ControlError::BadParameter {
            name: "gamma",
            value: gamma,
        });
    }
    if !(k_c.is_finite() && k_c > 0.0) {
        return Err(ControlError::BadParameter {
            name: "k_c",
            value: k_c,
        });
    }
    if !(g_norm.is_finite() && g_norm > 0.0) {
        return Err(ControlError::BadParameter {
            name: "g_norm",
            value: g_norm,
        });
    }
    Ok(gamma.ln() / (k_c * g_norm))
}

/// Crossover data of the stock loop at a given dead time.
pub fn default_margin(delay: f64) -> super::MarginReport {
    phase_margin(&default_loop(delay)).expect("the stock loop always crosses unity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn lead_peaks_at_center_with_requested_phase() {
        let phi = 30f64.to_radians();
        let c = lead_compensator(phi, 2.0, 1.0).unwrap();
        let w0 = 2.0 * std::f64::consts::PI * 2.0;
        let peak = c.eval(Complex64::new(0.0, w0)).arg();
        assert_relative_eq!(peak, phi, epsilon = 1e-12);
        // the advance is maximal at the center
        for mult in [0.3, 0.7, 1.5, 3.0] {
            let other = c.eval(Complex64::new(0.0, w0 * mult)).arg();
            assert!(other < peak);
        }
        // ratio (1 - sin 30) / (1 + sin 30) = 1/3
        let a = c.denominator()[1] / c.numerator()[1];
        assert_relative_eq!(a, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn tuned_gain_places_crossover() {
        let loop0 = default_loop(0.0);
        let report = phase_margin(&loop0).unwrap();
        let wc = 2.0 * std::f64::consts::PI * DEFAULT_CROSSOVER_HZ;
        assert_relative_eq!(report.crossover, wc, epsilon = 1e-6);
    }

    #[test]
    fn stock_margins() {
        // plant phase at crossover: -90 - atan(wc); lead adds +30
        let wc = 2.0 * std::f64::consts::PI * DEFAULT_CROSSOVER_HZ;
        let expected_pm = 180.0 - 90.0 - wc.atan().to_degrees() + 30.0;
        let r0 = default_margin(0.0);
        assert_relative_eq!(r0.phase_margin_deg, expected_pm, epsilon = 1e-6);
        assert_relative_eq!(r0.phase_margin_deg, 41.98, epsilon = 0.01);

        let r52 = default_margin(0.052);
        assert!(r52.phase_margin_deg > 26.0 && r52.phase_margin_deg < 30.0);
        assert_relative_eq!(
            r0.phase_margin_deg - r52.phase_margin_deg,
            delay_phase_shift_deg(DEFAULT_CROSSOVER_HZ, 0.052),
            epsilon = 1e-6
        );
    }

    #[test]
    fn stock_delay_margin() {
        let r0 = default_margin(0.0);
        let dm = r0.delay_margin.unwrap();
        assert_relative_eq!(
            dm,
            r0.phase_margin_deg.to_radians() / r0.crossover,
            epsilon = 1e-12
        );
        assert_relative_eq!(dm, 0.1555, epsilon = 5e-4);
    }

    #[test]
    fn phase_shift_law_matches_measured_margins() {
        let r0 = default_margin(0.0);
        for delay in [0.01, 0.03, 0.08, 0.12] {
            let r = default_margin(delay);
            assert_relative_eq!(r.crossover, r0.crossover, epsilon = 1e-7);
            assert_relative_eq!(
                r0.phase_margin_deg - r.phase_margin_deg,
                delay_phase_shift_deg(DEFAULT_CROSSOVER_HZ, delay),
                epsilon = 1e-5
            );
        }
    }

    #[test]
    fn bound_example_value() {
        let b = delay_margin_bound(2.5, 1.2, 0.8).unwrap();
        assert_relative_eq!(b, 0.954, epsilon = 1e-3);
        assert!(delay_margin_bound(0.9, 1.2, 0.8).is_err());
    }
}
