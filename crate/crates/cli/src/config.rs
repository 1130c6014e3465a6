//! Config files for the five experiment modes.
//!
//! Every mode takes one JSON file. Unknown keys are rejected so typos
//! surface as input errors instead of silently falling back to defaults.
//! Relative paths inside a config resolve against the config file's
//! directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::{input_error, CliError};

/// Reads and parses a config file, returning the parsed value and the
/// directory against which its relative paths resolve.
pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(T, PathBuf), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_error(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: T = serde_json::from_str(&text)
        .map_err(|e| input_error(format!("config {}: {e}", path.display())))?;
    let base = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((cfg, base))
}

/// Resolves a config-relative path.
pub fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn positive(name: &str, value: f64) -> Result<(), CliError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(input_error(format!("{name} must be positive, got {value}")))
    }
}

fn non_negative(name: &str, value: f64) -> Result<(), CliError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(input_error(format!(
            "{name} must be finite and non-negative, got {value}"
        )))
    }
}

/// Open-loop shape shared by the pipeline and the delay sweep.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopCfg {
    /// Plant numerator, ascending powers of s.
    pub plant_num: Vec<f64>,
    /// Plant denominator, ascending powers of s.
    pub plant_den: Vec<f64>,
    /// Phase advance of the lead compensator, degrees.
    pub lead_deg: f64,
    /// Design crossover, Hz.
    pub crossover_hz: f64,
    /// Controller sample time, seconds.
    pub sample_time: f64,
    /// Latency at which command synthesis switches to the predictor branch.
    pub delay_threshold: f64,
}

impl Default for LoopCfg {
    fn default() -> Self {
        Self {
            plant_num: vec![1.0],
            plant_den: vec![0.0, 1.0, 1.0],
            lead_deg: 30.0,
            crossover_hz: 0.75,
            sample_time: 1e-3,
            delay_threshold: 0.05,
        }
    }
}

impl LoopCfg {
    pub fn plant(&self) -> Result<fabric_core::RationalTF, CliError> {
        fabric_core::RationalTF::new(self.plant_num.clone(), self.plant_den.clone())
            .map_err(|e| input_error(format!("plant: {e}")))
    }

    pub fn synthesizer(&self) -> fabric_core::control::SynthesizerConfig {
        fabric_core::control::SynthesizerConfig {
            sample_time: self.sample_time,
            delay_threshold: self.delay_threshold,
            lead_rad: self.lead_deg.to_radians(),
            crossover_hz: self.crossover_hz,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        positive("sample_time", self.sample_time)?;
        positive("crossover_hz", self.crossover_hz)?;
        non_negative("delay_threshold", self.delay_threshold)?;
        if !(self.lead_deg.is_finite() && self.lead_deg > 0.0 && self.lead_deg < 90.0) {
            return Err(input_error(format!(
                "lead_deg must lie in (0, 90), got {}",
                self.lead_deg
            )));
        }
        Ok(())
    }
}

/// Scene-loss weights, mirroring the core objective.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveCfg {
    pub attach: f64,
    pub consensus: f64,
    pub connection: f64,
    pub context: f64,
}

impl Default for ObjectiveCfg {
    fn default() -> Self {
        let d = fabric_core::semantics::SceneObjective::default();
        Self {
            attach: d.attach,
            consensus: d.consensus,
            connection: d.connection,
            context: d.context,
        }
    }
}

impl ObjectiveCfg {
    pub fn to_core(self) -> fabric_core::semantics::SceneObjective {
        fabric_core::semantics::SceneObjective {
            attach: self.attach,
            consensus: self.consensus,
            connection: self.connection,
            context: self.context,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [
            ("objective.attach", self.attach),
            ("objective.consensus", self.consensus),
            ("objective.connection", self.connection),
            ("objective.context", self.context),
        ] {
            non_negative(name, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveCfg {
    pub max_iterations: usize,
    pub tol: f64,
    /// "project" or "penalty".
    pub mode: String,
    pub allow_fallback: bool,
}

impl Default for SolveCfg {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tol: 1e-8,
            mode: "project".to_string(),
            allow_fallback: true,
        }
    }
}

impl SolveCfg {
    pub fn to_core(&self) -> Result<fabric_core::semantics::SolveOptions, CliError> {
        let mode = match self.mode.as_str() {
            "project" => fabric_core::semantics::ConstraintMode::Project,
            "penalty" => fabric_core::semantics::ConstraintMode::Penalty,
            other => {
                return Err(input_error(format!(
                    "solve.mode must be \"project\" or \"penalty\", got \"{other}\""
                )))
            }
        };
        positive("solve.tol", self.tol)?;
        if self.max_iterations == 0 {
            return Err(input_error("solve.max_iterations must be at least 1"));
        }
        Ok(fabric_core::semantics::SolveOptions {
            max_iterations: self.max_iterations,
            tol: self.tol,
            mode,
            allow_fallback: self.allow_fallback,
        })
    }
}

/// Weights of state separation and curvature in the edge filtration.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiltrationCfg {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for FiltrationCfg {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.1,
        }
    }
}

impl FiltrationCfg {
    pub fn validate(&self) -> Result<(), CliError> {
        non_negative("filtration.alpha", self.alpha)?;
        non_negative("filtration.beta", self.beta)
    }
}

/// Acceptance thresholds checked per pipeline step; violations are flagged
/// in the report, never fatal.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitsCfg {
    /// Scene loss above this flags the step.
    pub loss_epsilon: f64,
    /// Phase margin below this (degrees) flags the step.
    pub phi_safe_deg: f64,
    /// Contextual trace distance above this flags the step.
    pub context_epsilon: f64,
}

impl Default for LimitsCfg {
    fn default() -> Self {
        Self {
            loss_epsilon: 1.0,
            phi_safe_deg: 20.0,
            context_epsilon: 1.0,
        }
    }
}

/// Config of the `run` mode: drive a scene sequence through solve, trace,
/// and command synthesis.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunCfg {
    /// Scene sequence file; required.
    pub sequence: Option<String>,
    pub objective: ObjectiveCfg,
    pub solve: SolveCfg,
    pub filtration: FiltrationCfg,
    /// Smoothing scales for the multiscale drift.
    pub scales: Vec<f64>,
    /// Dimension weights for the drift distance, `[dim0, dim1]`.
    pub alpha: [f64; 2],
    /// Measured latency fed to command synthesis, seconds.
    pub delay: f64,
    /// Wall-clock span of one frame, seconds.
    pub frame_dt: f64,
    #[serde(rename = "loop")]
    pub loop_cfg: LoopCfg,
    pub limits: LimitsCfg,
}

impl Default for RunCfg {
    fn default() -> Self {
        Self {
            sequence: None,
            objective: ObjectiveCfg::default(),
            solve: SolveCfg::default(),
            filtration: FiltrationCfg::default(),
            scales: vec![0.0, 0.5, 1.0],
            alpha: [0.5, 0.5],
            delay: 0.0,
            frame_dt: 0.1,
            loop_cfg: LoopCfg::default(),
            limits: LimitsCfg::default(),
        }
    }
}

impl RunCfg {
    pub fn validate(&self) -> Result<(), CliError> {
        self.objective.validate()?;
        self.filtration.validate()?;
        self.loop_cfg.validate()?;
        non_negative("delay", self.delay)?;
        positive("frame_dt", self.frame_dt)?;
        non_negative("alpha[0]", self.alpha[0])?;
        non_negative("alpha[1]", self.alpha[1])?;
        if self.scales.is_empty() {
            return Err(input_error("scales must list at least one value"));
        }
        for (k, s) in self.scales.iter().enumerate() {
            non_negative(&format!("scales[{k}]"), *s)?;
        }
        if self.frame_dt < self.loop_cfg.sample_time {
            return Err(input_error(format!(
                "frame_dt ({}) must cover at least one controller sample ({})",
                self.frame_dt, self.loop_cfg.sample_time
            )));
        }
        Ok(())
    }
}

/// Config of the `ph-decay` mode: noisy descent on a synthetic scene with a
/// diminishing step, recording persistence drift between snapshots.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayCfg {
    pub steps: usize,
    /// Step size at step 1; decays as `eta0 / sqrt(k)`.
    pub eta0: f64,
    /// Standard deviation of the injected gradient noise.
    pub sigma: f64,
    /// Fraction of early snapshots excluded from the slope fit.
    pub burn_in: f64,
    /// Snapshot spacing for the drift distance.
    pub gap: usize,
    pub vertices: usize,
    /// Chords added on top of the random spanning tree.
    pub extra_edges: usize,
    pub dim: usize,
    pub alpha: [f64; 2],
    pub filtration: FiltrationCfg,
    pub objective: ObjectiveCfg,
}

impl Default for DecayCfg {
    fn default() -> Self {
        Self {
            steps: 150,
            eta0: 0.15,
            sigma: 0.4,
            burn_in: 0.2,
            gap: 1,
            vertices: 6,
            extra_edges: 2,
            dim: 2,
            alpha: [0.5, 0.5],
            filtration: FiltrationCfg::default(),
            objective: ObjectiveCfg {
                attach: 1.0,
                consensus: 0.2,
                connection: 0.2,
                context: 0.0,
            },
        }
    }
}

impl DecayCfg {
    pub fn validate(&self) -> Result<(), CliError> {
        positive("eta0", self.eta0)?;
        non_negative("sigma", self.sigma)?;
        self.filtration.validate()?;
        self.objective.validate()?;
        non_negative("alpha[0]", self.alpha[0])?;
        non_negative("alpha[1]", self.alpha[1])?;
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(input_error(format!(
                "burn_in must lie in [0, 1), got {}",
                self.burn_in
            )));
        }
        if self.gap == 0 {
            return Err(input_error("gap must be at least 1"));
        }
        if self.vertices < 3 {
            return Err(input_error("vertices must be at least 3"));
        }
        if self.dim == 0 {
            return Err(input_error("dim must be at least 1"));
        }
        Ok(())
    }
}

/// Delay grid: either an explicit list or a uniform span.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DelayGrid {
    Explicit(Vec<f64>),
    Span { start: f64, stop: f64, count: usize },
}

impl Default for DelayGrid {
    fn default() -> Self {
        DelayGrid::Span {
            start: 0.0,
            stop: 0.2,
            count: 41,
        }
    }
}

impl DelayGrid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match self {
            DelayGrid::Explicit(v) => {
                if v.is_empty() {
                    return Err(input_error("delays must list at least one value"));
                }
                for (k, d) in v.iter().enumerate() {
                    non_negative(&format!("delays[{k}]"), *d)?;
                }
                Ok(v.clone())
            }
            DelayGrid::Span { start, stop, count } => {
                non_negative("delays.start", *start)?;
                non_negative("delays.stop", *stop)?;
                if *count < 2 {
                    return Err(input_error("delays.count must be at least 2"));
                }
                if stop <= start {
                    return Err(input_error(format!(
                        "delays.stop ({stop}) must exceed delays.start ({start})"
                    )));
                }
                let n = *count;
                Ok((0..n)
                    .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
                    .collect())
            }
        }
    }
}

/// Config of the `delay-sweep` mode.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepCfg {
    pub delays: DelayGrid,
    /// Compensation schemes to evaluate: "direct", "smith", "ortsf".
    pub methods: Vec<String>,
    pub phi_safe_deg: f64,
    #[serde(rename = "loop")]
    pub loop_cfg: LoopCfg,
    /// Worker threads; 0 picks the available parallelism.
    pub threads: usize,
}

impl Default for SweepCfg {
    fn default() -> Self {
        Self {
            delays: DelayGrid::default(),
            methods: vec![
                "direct".to_string(),
                "smith".to_string(),
                "ortsf".to_string(),
            ],
            phi_safe_deg: 20.0,
            loop_cfg: LoopCfg::default(),
            threads: 0,
        }
    }
}

impl SweepCfg {
    pub fn validate(&self) -> Result<(), CliError> {
        self.loop_cfg.validate()?;
        if self.methods.is_empty() {
            return Err(input_error("methods must list at least one scheme"));
        }
        for m in &self.methods {
            if !matches!(m.as_str(), "direct" | "smith" | "ortsf") {
                return Err(input_error(format!(
                    "unknown method \"{m}\" (expected direct, smith, or ortsf)"
                )));
            }
        }
        Ok(())
    }
}

/// Config of the `surgery` mode.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurgeryCfg {
    /// Graph file; required.
    pub graph: Option<String>,
    /// Explicit filtration values in the graph file's edge order.
    pub edge_values: Option<Vec<f64>>,
    /// Vertex states from which to derive the filtration instead.
    pub states: Option<Vec<Vec<f64>>>,
    pub filtration: FiltrationCfg,
    /// Persistence-proxy threshold below which a cycle counts as thin.
    pub epsilon_neck: f64,
    /// Curvature z-score a thin cycle must reach to be cut.
    pub z_threshold: f64,
}

impl Default for SurgeryCfg {
    fn default() -> Self {
        let d = fabric_core::topology::SurgeryConfig::default();
        Self {
            graph: None,
            edge_values: None,
            states: None,
            filtration: FiltrationCfg::default(),
            epsilon_neck: d.epsilon_neck,
            z_threshold: d.z_threshold,
        }
    }
}

/// Bound constants; every field is required, so each is an `Option` and the
/// validation step reports all missing names at once.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundConstants {
    /// Dimension weights of the drift distance, `[dim0, dim1]`.
    pub alpha: Option<[f64; 2]>,
    /// Stability constants per dimension.
    pub c1: Option<[f64; 2]>,
    pub c2: Option<[f64; 2]>,
    /// Curvature-to-loss scale.
    pub kappa: Option<f64>,
    /// Lipschitz constant of command synthesis w.r.t. the trace.
    pub l_ortsf: Option<f64>,
    /// Lipschitz constant of the context channel.
    pub l_context: Option<f64>,
    /// Confidence tail mass.
    pub eps_conf: Option<f64>,
    /// Noise scale entering the confidence term.
    pub sigma: Option<f64>,
    /// Step spacing; inferred from the time column when omitted.
    pub delta: Option<f64>,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self {
            alpha: None,
            c1: None,
            c2: None,
            kappa: None,
            l_ortsf: None,
            l_context: None,
            eps_conf: None,
            sigma: None,
            delta: None,
        }
    }
}

/// Config of the `bound` mode.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundCfg {
    /// Run report CSV produced by the `run` mode; required.
    pub run_report: Option<String>,
    pub constants: BoundConstants,
}

impl Default for BoundCfg {
    fn default() -> Self {
        Self {
            run_report: None,
            constants: BoundConstants::default(),
        }
    }
}
