//! Scene-level state: per-vertex semantic tensors on a relational graph,
//! scene optimization, map fusion, rule closure, and handover tracking.
//!
//! A scene is a weighted graph whose vertices carry a geometric position in
//! `R^d` plus free attribute channels, whose edges may carry orthogonal
//! frame transforms, and which may be subject to an affine context
//! constraint on its induced edge lengths. Solving a scene moves positions
//! only; attributes ride along untouched.

mod fusion;
mod ontology;
mod solve;
mod tracking;

pub use fusion::{
    fuse_class_posteriors, fuse_maps, FusionOptions, MapFusion, SemanticMap,
};
pub use ontology::{forward_chain, Atom, Fact, OntologyRule, Term};
pub use solve::{
    solve_scene, ConstraintMode, SceneObjective, SceneOptimizer, SolveOptions, SolveReport,
};
pub use tracking::{
    contextual_distance, tracking_report, TrackingEvent, TrackingReport,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cochain::{AffineConstraint, CochainError};
use crate::connection::{ConnectionError, ConnectionGraph};
use crate::graph::{GraphError, WeightedGraph};
use crate::topology::{
    filtration_values, persistence_diagram, PersistenceDiagram, TopologyError,
};

#[derive(Debug, Error)]
pub enum SemanticsError {
    #[error("expected {expected} tensors (one per vertex), got {got}")]
    TensorCount { expected: usize, got: usize },
    #[error("tensor position has dimension {got}, expected {expected}")]
    TensorDim { expected: usize, got: usize },
    #[error("values must be finite")]
    NonFinite,
    #[error("position vector has length {got}, expected {expected}")]
    PositionLength { expected: usize, got: usize },
    #[error("context constraint has {got} columns, expected one per edge ({expected})")]
    ContextWidth { expected: usize, got: usize },
    #[error("class posteriors have lengths {0} and {1}")]
    PosteriorLength(usize, usize),
    #[error("posterior entries must be nonnegative with positive sum")]
    BadPosterior,
    #[error("posteriors have disjoint support; the product vanishes")]
    DisjointSupport,
    #[error("maps have positions of dimension {0} and {1}")]
    MapDimension(usize, usize),
    #[error("map has {positions} positions but {labels} labels")]
    MapLabelCount { positions: usize, labels: usize },
    #[error("only {got} correspondences found; at least 3 are required")]
    InsufficientCorrespondences { got: usize },
    #[error("correspondences are degenerate (collinear or coincident)")]
    DegenerateCorrespondences,
    #[error("rule head variable {variable:?} does not occur in the body")]
    NotRangeRestricted { variable: String },
    #[error("{name} must be positive and finite, got {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("contexts are not comparable (present on one side only or shaped differently)")]
    ContextMismatch,
    #[error("constraint restoration failed and penalty fallback was disabled")]
    RestorationFailed,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Connection(#[from] ConnectionError),
    #[error(transparent)]
    Cochain(#[from] CochainError),
    #[error("JSON: {0}")]
    Json(String),
}

/// Per-vertex payload: a geometric position and free attribute channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticTensor {
    position: DVector<f64>,
    attributes: DVector<f64>,
}

impl SemanticTensor {
    pub fn new(position: DVector<f64>, attributes: DVector<f64>) -> Result<Self, SemanticsError> {
        if position.iter().chain(attributes.iter()).any(|v| !v.is_finite()) {
            return Err(SemanticsError::NonFinite);
        }
        Ok(Self {
            position,
            attributes,
        })
    }

    pub fn from_position(position: DVector<f64>) -> Result<Self, SemanticsError> {
        Self::new(position, DVector::zeros(0))
    }

    pub fn position(&self) -> &DVector<f64> {
        &self.position
    }

    pub fn attributes(&self) -> &DVector<f64> {
        &self.attributes
    }
}

/// How the last solve of a scene went.
#[derive(Debug, Clone, PartialEq)]
pub enum SolveStatus {
    Unsolved,
    Solved {
        iterations: usize,
        converged: bool,
        fell_back: bool,
        residual: f64,
        loss: f64,
    },
}

/// A relational scene: graph, frame transforms, tensors, optional context.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneState {
    connection: ConnectionGraph,
    tensors: Vec<SemanticTensor>,
    context: Option<AffineConstraint>,
    solve_status: SolveStatus,
}

impl SceneState {
    /// Scene over a plain graph: all edge transforms identity.
    pub fn new(
        graph: WeightedGraph,
        d: usize,
        tensors: Vec<SemanticTensor>,
    ) -> Result<Self, SemanticsError> {
        let connection = ConnectionGraph::trivial(graph, d)?;
        Self::with_connection(connection, tensors)
    }

    pub fn with_connection(
        connection: ConnectionGraph,
        tensors: Vec<SemanticTensor>,
    ) -> Result<Self, SemanticsError> {
        let n = connection.base().vertex_count();
        if tensors.len() != n {
            return Err(SemanticsError::TensorCount {
                expected: n,
                got: tensors.len(),
            });
        }
        let d = connection.fiber_dim();
        for t in &tensors {
            if t.position.len() != d {
                return Err(SemanticsError::TensorDim {
                    expected: d,
                    got: t.position.len(),
                });
            }
        }
        Ok(Self {
            connection,
            tensors,
            context: None,
            solve_status: SolveStatus::Unsolved,
        })
    }

    /// Attaches an affine constraint on the induced edge lengths.
    pub fn set_context(&mut self, context: AffineConstraint) -> Result<(), SemanticsError> {
        let m = self.graph().edge_count();
        if context.dim() != m {
            return Err(SemanticsError::ContextWidth {
                expected: m,
                got: context.dim(),
            });
        }
        self.context = Some(context);
        self.solve_status = SolveStatus::Unsolved;
        Ok(())
    }

    pub fn clear_context(&mut self) {
        self.context = None;
        self.solve_status = SolveStatus::Unsolved;
    }

    pub fn graph(&self) -> &WeightedGraph {
        self.connection.base()
    }

    pub fn connection(&self) -> &ConnectionGraph {
        &self.connection
    }

    pub fn dim(&self) -> usize {
        self.connection.fiber_dim()
    }

    pub fn tensors(&self) -> &[SemanticTensor] {
        &self.tensors
    }

    pub fn context(&self) -> Option<&AffineConstraint> {
        self.context.as_ref()
    }

    pub fn solve_status(&self) -> &SolveStatus {
        &self.solve_status
    }

    pub(crate) fn set_solve_status(&mut self, status: SolveStatus) {
        self.solve_status = status;
    }

    /// All positions stacked vertex-major into one vector of length `n d`.
    pub fn stacked_positions(&self) -> DVector<f64> {
        let d = self.dim();
        let mut s = DVector::zeros(self.tensors.len() * d);
        for (i, t) in self.tensors.iter().enumerate() {
            s.rows_mut(i * d, d).copy_from(&t.position);
        }
        s
    }

    /// Overwrites positions from a stacked vector; attributes are kept.
    pub fn set_positions(&mut self, s: &DVector<f64>) -> Result<(), SemanticsError> {
        let d = self.dim();
        let expected = self.tensors.len() * d;
        if s.len() != expected {
            return Err(SemanticsError::PositionLength {
                expected,
                got: s.len(),
            });
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(SemanticsError::NonFinite);
        }
        for (i, t) in self.tensors.iter_mut().enumerate() {
            t.position.copy_from(&s.rows(i * d, d));
        }
        self.solve_status = SolveStatus::Unsolved;
        Ok(())
    }

    /// Induced edge cochain: the position distance across each edge.
    pub fn induced_cochain(&self) -> DVector<f64> {
        let g = self.graph();
        let d = self.dim();
        let s = self.stacked_positions();
        DVector::from_iterator(
            g.edge_count(),
            g.edges().iter().map(|e| {
                let iu = g.vertex_index(e.u).expect("edge endpoints exist");
                let iv = g.vertex_index(e.v).expect("edge endpoints exist");
                (s.rows(iu * d, d) - s.rows(iv * d, d)).norm()
            }),
        )
    }

    pub fn to_json_string(&self) -> String {
        let connection: serde_json::Value =
            serde_json::from_str(&self.connection.to_json_string())
                .expect("connection JSON is valid");
        let tensors = self
            .tensors
            .iter()
            .map(|t| TensorJson {
                position: t.position.iter().copied().collect(),
                attributes: t.attributes.iter().copied().collect(),
            })
            .collect();
        let context = self.context.as_ref().map(|c| ContextJson {
            rows: c
                .matrix()
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            target: c.target().iter().copied().collect(),
        });
        serde_json::to_string_pretty(&SceneJson {
            connection,
            tensors,
            context,
        })
        .expect("serialization cannot fail")
    }

    pub fn from_json_str(text: &str) -> Result<Self, SemanticsError> {
        let parsed: SceneJson =
            serde_json::from_str(text).map_err(|e| SemanticsError::Json(e.to_string()))?;
        let conn_text = serde_json::to_string(&parsed.connection)
            .map_err(|e| SemanticsError::Json(e.to_string()))?;
        let connection = ConnectionGraph::from_json_str(&conn_text)?;
        let tensors = parsed
            .tensors
            .into_iter()
            .map(|t| {
                SemanticTensor::new(
                    DVector::from_vec(t.position),
                    DVector::from_vec(t.attributes),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut scene = Self::with_connection(connection, tensors)?;
        if let Some(ctx) = parsed.context {
            let q = ctx.rows.len();
            let m = scene.graph().edge_count();
            for row in &ctx.rows {
                if row.len() != m {
                    return Err(SemanticsError::ContextWidth {
                        expected: m,
                        got: row.len(),
                    });
                }
            }
            let flat: Vec<f64> = ctx.rows.into_iter().flatten().collect();
            let constraint = AffineConstraint::new(
                DMatrix::from_row_slice(q, m, &flat),
                DVector::from_vec(ctx.target),
            )?;
            scene.set_context(constraint)?;
        }
        Ok(scene)
    }
}

#[derive(Serialize, Deserialize)]
struct SceneJson {
    connection: serde_json::Value,
    tensors: Vec<TensorJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    context: Option<ContextJson>,
}

#[derive(Serialize, Deserialize)]
struct TensorJson {
    position: Vec<f64>,
    #[serde(default)]
    attributes: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ContextJson {
    rows: Vec<Vec<f64>>,
    target: Vec<f64>,
}

/// Edge interactions plus the topological summary of a scene.
///
/// The interaction block of edge `(u, v)` is the frame residual
/// `S_u - T_e S_v` with the edge weight appended, so each block has length
/// `d + 1`; blocks stack in canonical edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReasoningTrace {
    pub interactions: DVector<f64>,
    pub block_len: usize,
    pub edge_weights: Vec<f64>,
    pub filtration: crate::topology::Filtration,
    pub dim0: PersistenceDiagram,
    pub dim1: PersistenceDiagram,
}

/// Distills a scene into its reasoning trace.
///
/// The filtration weighs induced edge lengths by `alpha` and curvature
/// magnitude by `beta`, and the trace carries both persistence diagrams.
pub fn reasoning_trace(
    scene: &SceneState,
    alpha: f64,
    beta: f64,
) -> Result<ReasoningTrace, SemanticsError> {
    let g = scene.graph();
    let d = scene.dim();
    let s = scene.stacked_positions();
    let m = g.edge_count();
    let block_len = d + 1;
    let mut interactions = DVector::zeros(m * block_len);
    for (idx, e) in g.edges().iter().enumerate() {
        let iu = g.vertex_index(e.u).expect("edge endpoints exist");
        let iv = g.vertex_index(e.v).expect("edge endpoints exist");
        let t = scene.connection().transform(idx);
        let block = s.rows(iu * d, d) - t * s.rows(iv * d, d);
        interactions
            .rows_mut(idx * block_len, d)
            .copy_from(&block);
        interactions[idx * block_len + d] = e.w;
    }

    let states: Vec<DVector<f64>> = (0..g.vertex_count())
        .map(|i| s.rows(i * d, d).clone_owned())
        .collect();
    let filtration = filtration_values(g, &states, alpha, beta)?;
    let dim0 = persistence_diagram(g, &filtration, 0)?;
    let dim1 = persistence_diagram(g, &filtration, 1)?;
    Ok(ReasoningTrace {
        interactions,
        block_len,
        edge_weights: g.edges().iter().map(|e| e.w).collect(),
        filtration,
        dim0,
        dim1,
    })
}
