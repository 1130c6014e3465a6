//! Numerical core for constrained cochain optimization on weighted graphs.
//!
//! The library is organized in layers that build on each other:
//!
//! | module       | contents                                                          |
//! |--------------|-------------------------------------------------------------------|
//! | [`graph`]    | weighted graphs, boundary operators, Laplacians, cycle bases      |
//! | [`cochain`]  | affine-constrained energy minimization over edge cochains         |
//! | [`connection`]| block connection Laplacians, gauge-anchored solves               |
//! | [`topology`] | Forman curvature, filtrations, persistence, bottleneck, surgery   |
//! | [`semantics`]| scene states, constrained scene solves, map and posterior fusion  |
//! | [`control`]  | rational transfer functions, margins, delay compensation, sims    |
//!
//! All matrices are dense (`nalgebra`); the intended scale is desk-sized
//! problems (hundreds of vertices, not millions). Every operation is
//! deterministic: identical inputs produce identical outputs, and nothing
//! here spawns threads or consumes ambient randomness.

pub mod cochain;
pub mod connection;
pub mod control;
pub mod graph;
pub mod linalg;
pub mod semantics;
pub mod topology;

pub use cochain::{AffineConstraint, EnergySpec, IterationReport, SolverConfig};
pub use connection::{ConnectionGraph, GaugeAnchor};
pub use control::{LoopModel, MarginReport, RationalTF, SimResult};
pub use graph::{Cochain, CycleBasis, WeightedGraph};
pub use semantics::{
    OntologyRule, ReasoningTrace, SceneState, SemanticMap, SemanticTensor,
};
pub use topology::{Filtration, PersistenceDiagram, ScalePolicy, SurgeryLog};
