//! Continuous-time loop analysis and delay-compensated command synthesis.
//!
//! Rational transfer functions with dead time are analyzed in the frequency
//! domain (crossover, phase/gain/delay margins, H-infinity norms), designed
//! against (lead compensation with automatic gain placement), discretized by
//! the bilinear map for time-domain simulation, and wrapped into a stateful
//! synthesizer that switches between direct compensation and a dead-time
//! predictor structure as the measured latency crosses a threshold.

mod design;
mod margin;
mod ortsf;
mod predict;
mod sim;
mod tf;

pub use design::{
    default_loop, default_margin, default_plant, delay_margin_bound, delay_phase_shift_deg,
    lead_compensator, tune_crossover_gain, DEFAULT_CROSSOVER_HZ, DEFAULT_LEAD_RAD,
};
pub use margin::{phase_margin, MarginReport};
pub use ortsf::{Branch, CommandSynthesizer, SynthesisStep, SynthesizerConfig};
pub use predict::{predict_trace, TracePrediction};
pub use sim::{simulate_loop, DiscreteTF, SimResult};
pub use tf::{FrequencyResponse, LoopModel, RationalTF};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("denominator must have a nonzero coefficient")]
    ZeroDenominator,
    #[error("coefficients must be finite")]
    NonFiniteCoefficient,
    #[error("transfer function has a pole with real part {0:.3e} >= 0; the norm is unbounded")]
    Unstable(f64),
    #[error("loop gain never crosses unity on the scanned frequency range")]
    NoCrossover,
    #[error("sample time must be positive and finite, got {0}")]
    BadSampleTime(f64),
    #[error("bilinear map degenerates at this sample time (z = -1 pole)")]
    DegenerateDiscretization,
    #[error("trace length {got} is not divisible into blocks of {block}")]
    BlockMismatch { got: usize, block: usize },
    #[error("expected {expected} block weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("{name} must be positive and finite, got {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("signal became non-finite at step {0}")]
    NonFiniteSignal(usize),
}
