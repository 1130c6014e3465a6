//! Rational transfer functions and frequency-response evaluation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ControlError;

/// Anything that can be evaluated on the imaginary axis.
pub trait FrequencyResponse {
    fn response(&self, omega: f64) -> Complex64;
}

/// Default scan window and density for frequency sweeps.
pub(crate) const OMEGA_LO: f64 = 1e-4;
pub(crate) const OMEGA_HI: f64 = 1e4;
pub(crate) const POINTS_PER_DECADE: usize = 400;

pub(crate) fn log_grid() -> Vec<f64> {
    let decades = (OMEGA_HI / OMEGA_LO).log10();
    let n = (decades * POINTS_PER_DECADE as f64).round() as usize;
    (0..=n)
        .map(|i| OMEGA_LO * 10f64.powf(i as f64 / POINTS_PER_DECADE as f64))
        .collect()
}

/// A ratio of real polynomials in `s`, coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalTF {
    num: Vec<f64>,
    den: Vec<f64>,
}

fn trim(mut p: Vec<f64>) -> Vec<f64> {
    while p.len() > 1 && p.last() == Some(&0.0) {
        p.pop();
    }
    p
}

pub(crate) fn poly_eval(p: &[f64], s: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in p.iter().rev() {
        acc = acc * s + c;
    }
    acc
}

pub(crate) fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

impl RationalTF {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self, ControlError> {
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
            return Err(ControlError::NonFiniteCoefficient);
        }
        let num = trim(num);
        let den = trim(den);
        if den.iter().all(|&c| c == 0.0) {
            return Err(ControlError::ZeroDenominator);
        }
        Ok(Self { num, den })
    }

    /// The constant transfer function `k`.
    pub fn constant(k: f64) -> Self {
        Self {
            num: vec![k],
            den: vec![1.0],
        }
    }

    pub fn numerator(&self) -> &[f64] {
        &self.num
    }

    pub fn denominator(&self) -> &[f64] {
        &self.den
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        poly_eval(&self.num, s) / poly_eval(&self.den, s)
    }

    /// Series composition: `self * other`.
    pub fn series(&self, other: &Self) -> Self {
        Self {
            num: trim(poly_mul(&self.num, &other.num)),
            den: trim(poly_mul(&self.den, &other.den)),
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            num: self.num.iter().map(|c| c * k).collect(),
            den: self.den.clone(),
        }
    }

    /// Roots of the denominator via the companion matrix.
    pub fn poles(&self) -> Vec<Complex64> {
        poly_roots(&self.den)
    }

    /// True when every pole has strictly negative real part.
    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.re < -1e-12)
    }

    /// Peak magnitude on the imaginary axis.
    ///
    /// A coarse logarithmic scan brackets the peak, then golden-section
    /// search refines it to relative precision 1e-6 in frequency; the ends
    /// of the axis (`omega = 0` and the high-frequency limit) compete with
    /// the interior peak. Unstable poles make the norm meaningless and are
    /// rejected.
    pub fn h_inf_norm(&self) -> Result<f64, ControlError> {
        if let Some(p) = self
            .poles()
            .iter()
            .map(|p| p.re)
            .fold(None::<f64>, |acc, re| Some(acc.map_or(re, |a| a.max(re))))
        {
            if p >= -1e-12 {
                return Err(ControlError::Unstable(p));
            }
        }
        let mag = |w: f64| self.eval(Complex64::new(0.0, w)).norm();
        let grid = log_grid();
        let mut best_idx = 0;
        let mut best = f64::NEG_INFINITY;
        for (i, &w) in grid.iter().enumerate() {
            let m = mag(w);
            if m > best {
                best = m;
                best_idx = i;
            }
        }
        // golden-section refine inside the bracketing interval
        let lo = grid[best_idx.saturating_sub(1)];
        let hi = grid[(best_idx + 1).min(grid.len() - 1)];
        let (mut a, mut b) = (lo.ln(), hi.ln());
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        while b - a > 1e-6 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if mag(c.exp()) >= mag(d.exp()) {
                b = d;
            } else {
                a = c;
            }
        }
        let interior = mag(((a + b) / 2.0).exp()).max(best);
        let at_zero = mag(0.0);
        // high-frequency limit: ratio of leading coefficients when degrees
        // match, zero when strictly proper
        let at_inf = if self.num.len() == self.den.len() {
            (self.num.last().unwrap() / self.den.last().unwrap()).abs()
        } else if self.num.len() > self.den.len() {
            f64::INFINITY
        } else {
            0.0
        };
        Ok(interior.max(at_zero).max(at_inf))
    }
}

impl FrequencyResponse for RationalTF {
    fn response(&self, omega: f64) -> Complex64 {
        self.eval(Complex64::new(0.0, omega))
    }
}

/// Roots of a real polynomial (ascending coefficients) via the companion
/// matrix of its monic form.
pub(crate) fn poly_roots(p: &[f64]) -> Vec<Complex64> {
    let p = trim(p.to_vec());
    let n = p.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = p[n];
    let mut companion = DMatrix::zeros(n, n);
    for i in 0..n {
        companion[(i, n - 1)] = -p[i] / lead;
        if i + 1 < n {
            companion[(i + 1, i)] = 1.0;
        }
    }
    companion.complex_eigenvalues().iter().copied().collect()
}

/// Open loop `C(s) G(s) e^{-s delay}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopModel {
    pub plant: RationalTF,
    pub compensator: RationalTF,
    /// Dead time in seconds.
    pub delay: f64,
}

impl LoopModel {
    pub fn new(plant: RationalTF, compensator: RationalTF, delay: f64) -> Self {
        Self {
            plant,
            compensator,
            delay,
        }
    }

    /// The same loop with a different dead time.
    pub fn with_delay(&self, delay: f64) -> Self {
        Self {
            delay,
            ..self.clone()
        }
    }

    /// The delay-free rational part `C G`.
    pub fn rational_part(&self) -> RationalTF {
        self.compensator.series(&self.plant)
    }
}

impl FrequencyResponse for LoopModel {
    fn response(&self, omega: f64) -> Complex64 {
        let s = Complex64::new(0.0, omega);
        self.compensator.eval(s) * self.plant.eval(s) * (-s * self.delay).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn evaluates_first_order_lag() {
        let g = RationalTF::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        let v = g.eval(Complex64::new(0.0, 1.0));
        assert_relative_eq!(v.re, 0.5, epsilon = 1e-12);
        assert_relative_eq!(v.im, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn poles_of_quadratic() {
        let g = RationalTF::new(vec![1.0], vec![2.0, 3.0, 1.0]).unwrap();
        let mut re: Vec<f64> = g.poles().iter().map(|p| p.re).collect();
        re.sort_by(f64::total_cmp);
        assert_relative_eq!(re[0], -2.0, epsilon = 1e-10);
        assert_relative_eq!(re[1], -1.0, epsilon = 1e-10);
        assert!(g.poles().iter().all(|p| p.im.abs() < 1e-10));
        assert!(g.is_stable());
    }

    #[test]
    fn resonant_peak_norm() {
        // 1/(s^2 + 2 zeta s + 1), zeta = 0.1: peak 1/(2 zeta sqrt(1 - zeta^2))
        let g = RationalTF::new(vec![1.0], vec![1.0, 0.2, 1.0]).unwrap();
        let expected = 1.0 / (0.2 * (1.0 - 0.01f64).sqrt());
        assert_relative_eq!(g.h_inf_norm().unwrap(), expected, epsilon = 1e-6);
        assert_relative_eq!(g.h_inf_norm().unwrap(), 5.02519, epsilon = 1e-4);
    }

    #[test]
    fn norm_attained_at_boundaries() {
        let lag = RationalTF::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        assert_relative_eq!(lag.h_inf_norm().unwrap(), 1.0, epsilon = 1e-6);
        let flat = RationalTF::constant(2.0);
        assert_relative_eq!(flat.h_inf_norm().unwrap(), 2.0, epsilon = 1e-12);
        // equal degrees: high-frequency gain wins
        let hp = RationalTF::new(vec![0.0, 3.0], vec![1.0, 1.0]).unwrap();
        assert_relative_eq!(hp.h_inf_norm().unwrap(), 3.0, epsilon = 1e-6);
    }

    #[test]
    fn unstable_norm_rejected() {
        let g = RationalTF::new(vec![1.0], vec![-1.0, 1.0]).unwrap();
        assert!(matches!(g.h_inf_norm(), Err(ControlError::Unstable(_))));
    }

    #[test]
    fn series_multiplies_polynomials() {
        let a = RationalTF::new(vec![1.0], vec![0.0, 1.0]).unwrap();
        let b = RationalTF::new(vec![2.0], vec![1.0, 1.0]).unwrap();
        let ab = a.series(&b);
        assert_eq!(ab.numerator(), &[2.0]);
        assert_eq!(ab.denominator(), &[0.0, 1.0, 1.0]);
    }

    #[test]
    fn delay_is_pure_phase() {
        let plant = RationalTF::new(vec![1.0], vec![0.0, 1.0, 1.0]).unwrap();
        let l0 = LoopModel::new(plant.clone(), RationalTF::constant(1.0), 0.0);
        let l1 = l0.with_delay(0.3);
        let w = 2.0;
        assert_relative_eq!(
            l0.response(w).norm(),
            l1.response(w).norm(),
            epsilon = 1e-12
        );
        let dphase = l1.response(w).arg() - l0.response(w).arg();
        let wrapped = (dphase + 0.3 * w).rem_euclid(2.0 * std::f64::consts::PI);
        assert!(wrapped < 1e-9 || (2.0 * std::f64::consts::PI - wrapped) < 1e-9);
    }

    #[test]
    fn rejects_zero_denominator() {
        assert!(matches!(
            RationalTF::new(vec![1.0], vec![0.0, 0.0]),
            Err(ControlError::ZeroDenominator)
        ));
    }
}
