//! Curvature, filtrations, persistence diagrams, and graph surgery.
//!
//! The persistence machinery here is deliberately restricted to what graphs
//! support: dimension 0 (components merging along a sublevel filtration of
//! edge values, vertices all present at the base level) and dimension 1
//! (independent cycles, which never die on a graph and are therefore all
//! essential). That restriction keeps every computation exact and fast.

mod bottleneck;
mod curvature;
mod filtration;
mod multiscale;
mod persistence;
mod stability;
mod surgery;

pub use bottleneck::bottleneck_distance;
pub use curvature::forman_ricci;
pub use filtration::{filtration_values, smooth_filtration};
pub use multiscale::{multiscale_analysis, multiscale_drift, MultiscaleDrift, ScaleSlice};
pub use persistence::persistence_diagram;
pub use stability::{ph_stability_ratio, StabilityReport};
pub use surgery::{neck_surgery, SurgeryConfig, SurgeryEvent, SurgeryLog};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use nalgebra::DVector;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("persistence on graphs is defined for dimensions 0 and 1, got {0}")]
    UnsupportedDimension(usize),
    #[error("diagrams have different dimensions: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("graph has {expected} vertices but {got} states were supplied")]
    StateCount { expected: usize, got: usize },
    #[error("state vectors must share one dimension: saw {0} and {1}")]
    StateDim(usize, usize),
    #[error("filtration has {got} edge values, graph has {expected} edges")]
    FiltrationLength { got: usize, expected: usize },
    #[error("parameter {name} must be finite and non-negative, got {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("filtration produced a non-finite value on edge {0}")]
    NonFinite(usize),
    #[error("scale grid must be non-empty, finite, and non-negative")]
    BadScaleGrid,
    #[error("invalid diagram JSON: {0}")]
    Json(String),
}

/// Sublevel filtration on a graph: one value per canonical edge, every vertex
/// entering at `vertex_value` (0 in this crate's constructions).
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    pub edge_values: DVector<f64>,
    pub vertex_value: f64,
}

impl Filtration {
    pub fn new(edge_values: DVector<f64>) -> Result<Self, TopologyError> {
        for (k, v) in edge_values.iter().enumerate() {
            if !v.is_finite() {
                return Err(TopologyError::NonFinite(k));
            }
        }
        Ok(Self {
            edge_values,
            vertex_value: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.edge_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edge_values.len() == 0
    }

    /// Largest absolute difference of edge values against another filtration.
    pub fn sup_distance(&self, other: &Filtration) -> f64 {
        assert_eq!(self.len(), other.len(), "filtration length mismatch");
        let mut d = (self.vertex_value - other.vertex_value).abs();
        for k in 0..self.len() {
            d = d.max((self.edge_values[k] - other.edge_values[k]).abs());
        }
        d
    }
}

/// A single birth/death pair; `death == None` marks an essential class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePoint {
    pub birth: f64,
    pub death: Option<f64>,
}

impl PersistencePoint {
    pub fn persistence(&self) -> f64 {
        match self.death {
            Some(d) => d - self.birth,
            None => f64::INFINITY,
        }
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_none()
    }
}

/// Persistence diagram in a single homological dimension.
///
/// Points are stored sorted: finite points by `(birth, death)`, then
/// essential points by birth, so equal diagrams serialize identically.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    pub dim: usize,
    points: Vec<PersistencePoint>,
}

impl PersistenceDiagram {
    pub fn new(dim: usize, mut points: Vec<PersistencePoint>) -> Self {
        points.sort_by(|a, b| {
            let da = a.death.unwrap_or(f64::INFINITY);
            let db = b.death.unwrap_or(f64::INFINITY);
            a.is_essential()
                .cmp(&b.is_essential())
                .then(a.birth.total_cmp(&b.birth))
                .then(da.total_cmp(&db))
        });
        Self { dim, points }
    }

    pub fn points(&self) -> &[PersistencePoint] {
        &self.points
    }

    pub fn finite_points(&self) -> impl Iterator<Item = &PersistencePoint> {
        self.points.iter().filter(|p| !p.is_essential())
    }

    pub fn essential_births(&self) -> Vec<f64> {
        self.points
            .iter()
            .filter(|p| p.is_essential())
            .map(|p| p.birth)
            .collect()
    }

    /// Serializes as `{"dim": k, "points": [[b, d], ...], "essential": [b, ...]}`.
    pub fn to_json_string(&self) -> String {
        let j = DiagramJson {
            dim: self.dim,
            points: self
                .finite_points()
                .map(|p| [p.birth, p.death.expect("finite")])
                .collect(),
            essential: self.essential_births(),
        };
        serde_json::to_string(&j).expect("diagram serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self, TopologyError> {
        let j: DiagramJson =
            serde_json::from_str(s).map_err(|e| TopologyError::Json(e.to_string()))?;
        let mut points: Vec<PersistencePoint> = j
            .points
            .iter()
            .map(|&[b, d]| PersistencePoint {
                birth: b,
                death: Some(d),
            })
            .collect();
        points.extend(j.essential.iter().map(|&b| PersistencePoint {
            birth: b,
            death: None,
        }));
        Ok(Self::new(j.dim, points))
    }
}

#[derive(Serialize, Deserialize)]
struct DiagramJson {
    dim: usize,
    points: Vec<[f64; 2]>,
    essential: Vec<f64>,
}

/// Ascending grid of smoothing scales for multi-scale analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalePolicy {
    scales: Vec<f64>,
}

impl ScalePolicy {
    pub fn new(mut scales: Vec<f64>) -> Result<Self, TopologyError> {
        if scales.is_empty() || scales.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(TopologyError::BadScaleGrid);
        }
        scales.sort_by(|a, b| a.total_cmp(b));
        scales.dedup();
        Ok(Self { scales })
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }
}
