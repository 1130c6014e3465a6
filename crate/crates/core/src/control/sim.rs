//! Bilinear discretization and closed-loop time simulation.

use std::collections::VecDeque;

use super::tf::{poly_mul, LoopModel, RationalTF};
use super::ControlError;

/// A difference-equation filter obtained from a continuous transfer
/// function by the bilinear map `s = (2/T)(1 - z^-1)/(1 + z^-1)`.
#[derive(Debug, Clone)]
pub struct DiscreteTF {
    /// Coefficients of `z^-k` in the numerator, `b[0]` first.
    b: Vec<f64>,
    /// Denominator with `a[0] = 1`.
    a: Vec<f64>,
    x_hist: VecDeque<f64>,
    y_hist: VecDeque<f64>,
}

impl DiscreteTF {
    /// Discretizes `tf` at sample time `t_s`.
    ///
    /// Each power `s^k` becomes `(2/T)^k (1-z)^k (1+z)^(N-k)` in `z^-1`,
    /// so numerator and denominator stay polynomial of shared degree `N`.
    pub fn bilinear(tf: &RationalTF, t_s: f64) -> Result<Self, ControlError> {
        if !(t_s.is_finite() && t_s > 0.0) {
            return Err(ControlError::BadSampleTime(t_s));
        }
        let n = tf.numerator().len().max(tf.denominator().len()) - 1;
        let c = 2.0 / t_s;
        let expand = |p: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; n + 1];
            for (k, &coef) in p.iter().enumerate() {
                // (1 - z)^k (1 + z)^(n - k) in ascending powers of z^-1
                let mut term = vec![1.0];
                for _ in 0..k {
                    term = poly_mul(&term, &[1.0, -1.0]);
                }
                for _ in 0..(n - k) {
                    term = poly_mul(&term, &[1.0, 1.0]);
                }
                let scale = coef * c.powi(k as i32);
                for (i, t) in term.iter().enumerate() {
                    out[i] += scale * t;
                }
            }
            out
        };
        let b = expand(tf.numerator());
        let mut a = expand(tf.denominator());
        let a0 = a[0];
        if a0.abs() < 1e-300 {
            return Err(ControlError::DegenerateDiscretization);
        }
        let b: Vec<f64> = b.iter().map(|v| v / a0).collect();
        for v in &mut a {
            *v /= a0;
        }
        Ok(Self {
            x_hist: VecDeque::from(vec![0.0; b.len()]),
            y_hist: VecDeque::from(vec![0.0; a.len() - 1]),
            b,
            a,
        })
    }

    /// Advances the filter by one sample.
    pub fn step(&mut self, x: f64) -> f64 {
        self.x_hist.push_front(x);
        self.x_hist.pop_back();
        let mut y = 0.0;
        for (k, &bk) in self.b.iter().enumerate() {
            y += bk * self.x_hist[k];
        }
        for (k, &ak) in self.a.iter().enumerate().skip(1) {
            y -= ak * self.y_hist[k - 1];
        }
        if !self.y_hist.is_empty() {
            self.y_hist.push_front(y);
            self.y_hist.pop_back();
        }
        y
    }

    /// Clears the filter state.
    pub fn reset(&mut self) {
        for v in self.x_hist.iter_mut() {
            *v = 0.0;
        }
        for v in self.y_hist.iter_mut() {
            *v = 0.0;
        }
    }
}

/// Outcome of a closed-loop step-response simulation.
#[derive(Debug, Clone)]
pub struct SimResult {
    pub t_s: f64,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    /// Peak |y| over the last quarter divided by peak |y| over the first
    /// quarter (both after a 5% transient skip); infinity if the signal
    /// left the finite range.
    pub growth_ratio: f64,
    /// `growth_ratio < 1.05` and every sample finite.
    pub bounded: bool,
    /// Dead time realized as this many whole samples.
    pub delay_samples: usize,
    /// True when the dead time was not a whole number of samples.
    pub delay_rounded: bool,
    /// True when the sample rate is too coarse for the crossover frequency
    /// (fewer than 20 samples per crossover period).
    pub sample_warning: bool,
}

/// Simulates the unity-feedback loop `e = r - y_delayed, u = C e, y = G u`
/// under a unit step reference.
///
/// Plant and compensator are discretized by the bilinear map; dead time is
/// a whole-sample FIFO on the measurement (the loop inherently carries one
/// extra sample of latency, so the algebraic loop never closes at a single
/// instant). Divergent responses are reported, not errors.
pub fn simulate_loop(model: &LoopModel, t_end: f64, t_s: f64) -> Result<SimResult, ControlError> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(ControlError::BadParameter {
            name: "t_end",
            value: t_end,
        });
    }
    let mut comp = DiscreteTF::bilinear(&model.compensator, t_s)?;
    let mut plant = DiscreteTF::bilinear(&model.plant, t_s)?;
    let ratio = model.delay / t_s;
    let delay_samples = ratio.round().max(0.0) as usize;
    let delay_rounded = (ratio - ratio.round()).abs() > 1e-9;
    let steps = (t_end / t_s).round() as usize;

    // a crossover period should span at least 20 samples for the bilinear
    // map to track the continuous loop faithfully
    let sample_warning = match crate::control::phase_margin(model) {
        Ok(report) => t_s > 2.0 * std::f64::consts::PI / report.crossover / 20.0,
        Err(_) => false,
    };

    let mut fifo: VecDeque<f64> = VecDeque::from(vec![0.0; delay_samples + 1]);
    let mut y = Vec::with_capacity(steps);
    let mut u = Vec::with_capacity(steps);
    let mut finite = true;
    for _ in 0..steps {
        let y_meas = *fifo.front().expect("fifo is never empty");
        let e = 1.0 - y_meas;
        let uk = comp.step(e);
        let yk = plant.step(uk);
        fifo.push_back(yk);
        fifo.pop_front();
        if !(yk.is_finite() && uk.is_finite()) {
            finite = false;
            y.push(if yk.is_finite() { yk } else { f64::MAX });
            u.push(if uk.is_finite() { uk } else { f64::MAX });
            break;
        }
        y.push(yk);
        u.push(uk);
    }

    let skip = y.len() / 20;
    let body = &y[skip..];
    let quarter = body.len() / 4;
    let peak = |s: &[f64]| s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let growth_ratio = if !finite {
        f64::INFINITY
    } else if quarter == 0 {
        1.0
    } else {
        let head = peak(&body[..quarter]);
        let tail = peak(&body[body.len() - quarter..]);
        if head > 0.0 {
            tail / head
        } else if tail > 0.0 {
            f64::INFINITY
        } else {
            1.0
        }
    };

    Ok(SimResult {
        t_s,
        y,
        u,
        growth_ratio,
        bounded: finite && growth_ratio < 1.05,
        delay_samples,
        delay_rounded,
        sample_warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{default_loop, default_margin, RationalTF};
    use approx::assert_relative_eq;

    #[test]
    fn integrator_accumulates_trapezoids() {
        let tf = RationalTF::new(vec![1.0], vec![0.0, 1.0]).unwrap();
        let mut d = DiscreteTF::bilinear(&tf, 0.1).unwrap();
        // trapezoid rule on a unit step: first output T/2, then += T
        assert_relative_eq!(d.step(1.0), 0.05, epsilon = 1e-12);
        assert_relative_eq!(d.step(1.0), 0.15, epsilon = 1e-12);
        assert_relative_eq!(d.step(1.0), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn first_order_lag_step_response() {
        let tf = RationalTF::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        let t_s = 1e-3;
        let mut d = DiscreteTF::bilinear(&tf, t_s).unwrap();
        let mut last = 0.0;
        for _ in 0..1000 {
            last = d.step(1.0);
        }
        // The trapezoid map sees the step as a one-sample ramp, so the
        // discrete output tracks the continuous response a half sample late.
        let t_eff = 1000.0 * t_s - 0.5 * t_s;
        assert_relative_eq!(last, 1.0 - (-t_eff).exp(), epsilon = 1e-5);
    }

    #[test]
    fn reset_clears_state() {
        let tf = RationalTF::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        let mut d = DiscreteTF::bilinear(&tf, 0.01).unwrap();
        for _ in 0..100 {
            d.step(1.0);
        }
        d.reset();
        let mut fresh = DiscreteTF::bilinear(&tf, 0.01).unwrap();
        assert_relative_eq!(d.step(1.0), fresh.step(1.0), epsilon = 1e-15);
    }

    #[test]
    fn stable_stock_loop_settles() {
        let sim = simulate_loop(&default_loop(0.0), 40.0, 1e-3).unwrap();
        assert!(sim.bounded);
        assert!(!sim.sample_warning);
        assert!(!sim.delay_rounded);
        let last = *sim.y.last().unwrap();
        assert_relative_eq!(last, 1.0, epsilon = 1e-2);
    }

    #[test]
    fn dead_time_beyond_margin_diverges() {
        let dm = default_margin(0.0).delay_margin.unwrap();
        let ok = simulate_loop(&default_loop(0.8 * dm), 120.0, 1e-3).unwrap();
        assert!(ok.bounded, "growth ratio {}", ok.growth_ratio);
        let bad = simulate_loop(&default_loop(1.2 * dm), 120.0, 1e-3).unwrap();
        assert!(!bad.bounded, "growth ratio {}", bad.growth_ratio);
    }

    #[test]
    fn fractional_delay_flagged() {
        let sim = simulate_loop(&default_loop(0.0105), 1.0, 1e-2).unwrap();
        assert!(sim.delay_rounded);
        assert_eq!(sim.delay_samples, 1);
    }

    #[test]
    fn coarse_sampling_warns() {
        let sim = simulate_loop(&default_loop(0.0), 10.0, 0.5).unwrap();
        assert!(sim.sample_warning);
    }
}
