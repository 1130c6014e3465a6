//! Stability margins from frequency-response sweeps.

use super::tf::{log_grid, FrequencyResponse};
use super::ControlError;

/// Crossover data for an open loop.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginReport {
    /// Lowest unity-gain frequency, rad/s.
    pub crossover: f64,
    /// Unwrapped loop phase at the crossover, degrees.
    pub phase_deg: f64,
    /// `180 + phase_deg`.
    pub phase_margin_deg: f64,
    /// Extra dead time that would erase the phase margin, seconds;
    /// absent when the margin is already non-positive.
    pub delay_margin: Option<f64>,
    /// Inverse loop gain at the first 180-degree phase crossing, if any.
    pub gain_margin: Option<f64>,
}

fn principal(theta: f64) -> f64 {
    let mut t = theta % (2.0 * std::f64::consts::PI);
    if t > std::f64::consts::PI {
        t -= 2.0 * std::f64::consts::PI;
    } else if t < -std::f64::consts::PI {
        t += 2.0 * std::f64::consts::PI;
    }
    t
}

/// Phase of `l` unwrapped along the scan grid, radians per grid point.
fn unwrapped_phases(l: &dyn FrequencyResponse, grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut prev = l.response(grid[0]).arg();
    out.push(prev);
    for &w in &grid[1..] {
        let raw = l.response(w).arg();
        let cur = prev + principal(raw - prev);
        out.push(cur);
        prev = cur;
    }
    out
}

/// Measures the crossover and margins of an open loop.
///
/// The gain is scanned on a logarithmic grid; the lowest unity crossing is
/// bisected to relative precision 1e-10. Phase is unwrapped along the grid
/// so loops that wind several times (long dead times) are still read
/// correctly. No unity crossing on the grid is an error.
pub fn phase_margin(l: &dyn FrequencyResponse) -> Result<MarginReport, ControlError> {
    let grid = log_grid();
    let gains: Vec<f64> = grid.iter().map(|&w| l.response(w).norm()).collect();
    let cross_idx = gains
        .windows(2)
        .position(|g| (g[0] - 1.0) * (g[1] - 1.0) <= 0.0 && g[0] != g[1])
        .ok_or(ControlError::NoCrossover)?;

    let (mut lo, mut hi) = (grid[cross_idx], grid[cross_idx + 1]);
    let sign_lo = gains[cross_idx] - 1.0;
    while (hi - lo) / lo > 1e-10 {
        let mid = (lo * hi).sqrt();
        let s = l.response(mid).norm() - 1.0;
        if s * sign_lo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let crossover = (lo * hi).sqrt();

    let phases = unwrapped_phases(l, &grid);
    let base = phases[cross_idx];
    let raw = l.response(crossover).arg();
    let phase_at_cross = base + principal(raw - l.response(grid[cross_idx]).arg());
    let phase_deg = phase_at_cross.to_degrees();
    let pm = 180.0 + phase_deg;

    let delay_margin = if pm > 0.0 {
        Some(pm.to_radians() / crossover)
    } else {
        None
    };

    // first phase crossing of -180 degrees with a defined loop gain
    let target = -std::f64::consts::PI;
    let mut gain_margin = None;
    for i in 0..grid.len() - 1 {
        let (a, b) = (phases[i] - target, phases[i + 1] - target);
        if a * b <= 0.0 && a != b {
            let (mut wl, mut wh) = (grid[i], grid[i + 1]);
            let mut pl = a;
            for _ in 0..200 {
                let mid = (wl * wh).sqrt();
                let pm_mid =
                    phases[i] + principal(l.response(mid).arg() - l.response(grid[i]).arg())
                        - target;
                if pm_mid * pl > 0.0 {
                    wl = mid;
                    pl = pm_mid;
                } else {
                    wh = mid;
                }
                if (wh - wl) / wl <= 1e-10 {
                    break;
                }
            }
            let wpc = (wl * wh).sqrt();
            let g = l.response(wpc).norm();
            if g > 0.0 {
                gain_margin = Some(1.0 / g);
            }
            break;
        }
    }

    Ok(MarginReport {
        crossover,
        phase_deg,
        phase_margin_deg: pm,
        delay_margin,
        gain_margin,
    })
}
