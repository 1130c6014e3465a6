//! Stateful command synthesis from semantic traces under measured latency.
//!
//! Each call extrapolates the incoming trace over the current latency
//! estimate, reduces it to a scalar tracking reference (weighted block
//! norms), and runs one sample of a compensator. Small latencies use the
//! lead compensator directly; latencies above a threshold switch to a
//! dead-time predictor structure whose internal plant model cancels the
//! delayed feedback. Both branches hold persistent filter state so
//! switching does not re-transient the loop.

use std::collections::VecDeque;

use nalgebra::DVector;

use super::design::{lead_compensator, tune_crossover_gain};
use super::predict::predict_trace;
use super::sim::DiscreteTF;
use super::tf::{LoopModel, RationalTF};
use super::ControlError;

/// Which compensation path produced the command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Latency at or below the threshold: plain lead compensation.
    Direct,
    /// Latency above the threshold: dead-time predictor structure.
    Predictor,
}

#[derive(Debug, Clone, Copy)]
pub struct SynthesizerConfig {
    pub sample_time: f64,
    /// Latency at which the predictor branch takes over, seconds.
    pub delay_threshold: f64,
    /// Phase advance of the lead compensator, radians.
    pub lead_rad: f64,
    /// Design crossover of the loop, Hz.
    pub crossover_hz: f64,
}

impl Default for SynthesizerConfig {
    fn default() -> Self {
        Self {
            sample_time: 1e-3,
            delay_threshold: 0.05,
            lead_rad: super::design::DEFAULT_LEAD_RAD,
            crossover_hz: super::design::DEFAULT_CROSSOVER_HZ,
        }
    }
}

/// One synthesized command with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisStep {
    pub command: f64,
    pub branch: Branch,
    /// Scalar reference distilled from the predicted trace.
    pub reference: f64,
    /// True when the trace had no history and was held instead of
    /// extrapolated.
    pub trace_held: bool,
    pub delay_samples: usize,
    pub delay_rounded: bool,
}

pub struct CommandSynthesizer {
    cfg: SynthesizerConfig,
    plant: RationalTF,
    compensator: RationalTF,
    comp_direct: DiscreteTF,
    comp_predictor: DiscreteTF,
    model: DiscreteTF,
    /// Model outputs awaiting their delayed replay; front is oldest.
    model_fifo: VecDeque<f64>,
    last_model_output: f64,
    prev_trace: Option<DVector<f64>>,
}

impl CommandSynthesizer {
    /// Designs a lead compensator against `plant` (gain placed so the
    /// delay-free crossover lands on `cfg.crossover_hz`) and prepares both
    /// branches.
    pub fn new(plant: RationalTF, cfg: SynthesizerConfig) -> Result<Self, ControlError> {
        // +inf is allowed: it pins the synthesizer to the direct branch.
        if cfg.delay_threshold.is_nan() || cfg.delay_threshold < 0.0 {
            return Err(ControlError::BadParameter {
                name: "delay_threshold",
                value: cfg.delay_threshold,
            });
        }
        let shape = lead_compensator(cfg.lead_rad, cfg.crossover_hz, 1.0)?;
        let k = tune_crossover_gain(&plant, &shape, cfg.crossover_hz)?;
        let compensator = shape.scale(k);
        let comp_direct = DiscreteTF::bilinear(&compensator, cfg.sample_time)?;
        let comp_predictor = DiscreteTF::bilinear(&compensator, cfg.sample_time)?;
        let model = DiscreteTF::bilinear(&plant, cfg.sample_time)?;
        Ok(Self {
            cfg,
            plant,
            compensator,
            comp_direct,
            comp_predictor,
            model,
            model_fifo: VecDeque::new(),
            last_model_output: 0.0,
            prev_trace: None,
        })
    }

    pub fn config(&self) -> &SynthesizerConfig {
        &self.cfg
    }

    pub fn compensator(&self) -> &RationalTF {
        &self.compensator
    }

    /// The designed loop at a given dead time, for margin analysis.
    pub fn loop_model(&self, delay: f64) -> LoopModel {
        LoopModel::new(self.plant.clone(), self.compensator.clone(), delay)
    }

    /// Clears all filter state, the model FIFO, and the trace history.
    pub fn reset(&mut self) {
        self.comp_direct.reset();
        self.comp_predictor.reset();
        self.model.reset();
        self.model_fifo.clear();
        self.last_model_output = 0.0;
        self.prev_trace = None;
    }

    /// Runs one sample of command synthesis.
    ///
    /// `trace` is split into consecutive blocks of `block_len`; the
    /// reference is `sum_b weights[b] * |block_b|` of the trace
    /// extrapolated over `delay_estimate`. The predictor branch corrects
    /// the measurement with the difference between the model output and
    /// its delayed replay (the model runs one sample behind the applied
    /// command, so the correction is strictly causal).
    pub fn step(
        &mut self,
        trace: &DVector<f64>,
        block_len: usize,
        weights: &[f64],
        measurement: f64,
        delay_estimate: f64,
    ) -> Result<SynthesisStep, ControlError> {
        if block_len == 0 || trace.len() % block_len != 0 {
            return Err(ControlError::BlockMismatch {
                got: trace.len(),
                block: block_len,
            });
        }
        let blocks = trace.len() / block_len;
        if weights.len() != blocks {
            return Err(ControlError::WeightCount {
                expected: blocks,
                got: weights.len(),
            });
        }
        if !(delay_estimate.is_finite() && delay_estimate >= 0.0) {
            return Err(ControlError::BadParameter {
                name: "delay_estimate",
                value: delay_estimate,
            });
        }
        if !measurement.is_finite() {
            return Err(ControlError::NonFiniteSignal(0));
        }

        let prediction = predict_trace(
            trace,
            self.prev_trace.as_ref(),
            self.cfg.sample_time,
            delay_estimate,
        )?;
        self.prev_trace = Some(trace.clone());
        let reference: f64 = (0..blocks)
            .map(|b| weights[b] * prediction.predicted.rows(b * block_len, block_len).norm())
            .sum();

        let ratio = delay_estimate / self.cfg.sample_time;
        let delay_samples = ratio.round().max(0.0) as usize;
        let delay_rounded = (ratio - ratio.round()).abs() > 1e-9;
        while self.model_fifo.len() > delay_samples {
            self.model_fifo.pop_front();
        }
        while self.model_fifo.len() < delay_samples {
            self.model_fifo.push_front(0.0);
        }

        let branch = if delay_estimate <= self.cfg.delay_threshold {
            Branch::Direct
        } else {
            Branch::Predictor
        };

        let u_direct = self.comp_direct.step(reference - measurement);
        let y_hat = self.last_model_output;
        let y_hat_delayed = if delay_samples == 0 {
            y_hat
        } else {
            *self.model_fifo.front().expect("fifo sized above")
        };
        let u_predictor = self
            .comp_predictor
            .step(reference - measurement - (y_hat - y_hat_delayed));

        let command = match branch {
            Branch::Direct => u_direct,
            Branch::Predictor => u_predictor,
        };
        if !command.is_finite() {
            return Err(ControlError::NonFiniteSignal(0));
        }

        let model_out = self.model.step(command);
        if delay_samples > 0 {
            self.model_fifo.push_back(model_out);
            self.model_fifo.pop_front();
        }
        self.last_model_output = model_out;

        Ok(SynthesisStep {
            command,
            branch,
            reference,
            trace_held: prediction.held,
            delay_samples,
            delay_rounded,
        })
    }
}

impl std::fmt::Debug for CommandSynthesizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CommandSynthesizer")
            .field("cfg", &self.cfg)
            .field("plant", &self.plant)
            .field("compensator", &self.compensator)
            .field("delay_fifo_len", &self.model_fifo.len())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lag_plant() -> RationalTF {
        RationalTF::new(vec![1.0], vec![1.0, 1.0]).unwrap()
    }

    fn fast_cfg() -> SynthesizerConfig {
        SynthesizerConfig {
            sample_time: 1e-3,
            delay_threshold: 0.05,
            lead_rad: 30f64.to_radians(),
            crossover_hz: 2.0,
        }
    }

    #[test]
    fn reference_is_weighted_block_norms() {
        let mut syn = CommandSynthesizer::new(lag_plant(), fast_cfg()).unwrap();
        let trace = DVector::from_vec(vec![3.0, 4.0, 0.0, 1.0]);
        let step = syn.step(&trace, 2, &[2.0, 0.5], 0.0, 0.0).unwrap();
        assert!(step.trace_held);
        assert_relative_eq!(step.reference, 2.0 * 5.0 + 0.5 * 1.0, epsilon = 1e-12);
        let step2 = syn.step(&trace, 2, &[2.0, 0.5], 0.0, 0.0).unwrap();
        assert!(!step2.trace_held);
        assert_relative_eq!(step2.reference, 10.5, epsilon = 1e-12);
    }

    #[test]
    fn branch_follows_threshold() {
        let mut syn = CommandSynthesizer::new(lag_plant(), fast_cfg()).unwrap();
        let trace = DVector::from_vec(vec![1.0]);
        let a = syn.step(&trace, 1, &[1.0], 0.0, 0.05).unwrap();
        assert_eq!(a.branch, Branch::Direct);
        let b = syn.step(&trace, 1, &[1.0], 0.0, 0.0501).unwrap();
        assert_eq!(b.branch, Branch::Predictor);
    }

    #[test]
    fn fractional_delay_reported() {
        let mut syn = CommandSynthesizer::new(lag_plant(), fast_cfg()).unwrap();
        let trace = DVector::from_vec(vec![1.0]);
        let s = syn.step(&trace, 1, &[1.0], 0.0, 0.0015).unwrap();
        assert!(s.delay_rounded);
        assert_eq!(s.delay_samples, 2);
    }

    #[test]
    fn rejects_bad_blocks() {
        let mut syn = CommandSynthesizer::new(lag_plant(), fast_cfg()).unwrap();
        let trace = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(matches!(
            syn.step(&trace, 2, &[1.0, 1.0], 0.0, 0.0),
            Err(ControlError::BlockMismatch { .. })
        ));
        assert!(matches!(
            syn.step(&trace, 1, &[1.0], 0.0, 0.0),
            Err(ControlError::WeightCount { .. })
        ));
    }

    /// Closed loop against the true delayed plant: the predictor branch
    /// stays bounded at a dead time that destabilizes direct compensation.
    #[test]
    fn predictor_branch_survives_destabilizing_delay() {
        let delay = 0.3;
        let t_s = 1e-3;
        let run = |threshold: f64| -> Vec<f64> {
            let cfg = SynthesizerConfig {
                sample_time: t_s,
                delay_threshold: threshold,
                ..fast_cfg()
            };
            let mut syn = CommandSynthesizer::new(lag_plant(), cfg).unwrap();
            let mut plant = DiscreteTF::bilinear(&lag_plant(), t_s).unwrap();
            let mut fifo = std::collections::VecDeque::from(vec![0.0; 300]);
            let trace = DVector::from_vec(vec![1.0]);
            let mut ys = Vec::new();
            for _ in 0..30_000 {
                let measurement = *fifo.front().unwrap();
                let step = match syn.step(&trace, 1, &[1.0], measurement, delay) {
                    Ok(s) => s,
                    Err(_) => break, // direct branch blows past f64 range
                };
                let y = plant.step(step.command);
                fifo.push_back(y);
                fifo.pop_front();
                ys.push(y);
                if !y.is_finite() || y.abs() > 1e6 {
                    break;
                }
            }
            ys
        };

        let predictor = run(0.05); // 0.3 > threshold: predictor active
        let direct = run(f64::INFINITY); // forced direct branch
        let peak = |s: &[f64]| s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak(&predictor) < 5.0, "predictor peak {}", peak(&predictor));
        let tail = &predictor[predictor.len() - predictor.len() / 4..];
        assert!(peak(tail) < 1.5, "predictor tail {}", peak(tail));
        assert!(peak(&direct) > 50.0, "direct peak {}", peak(&direct));
    }
}
