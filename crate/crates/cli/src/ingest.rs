//! Scene-sequence ingestion.
//!
//! A sequence file is `{"frames": [frame, ...]}` where each frame carries a
//! graph, a fiber dimension, optional edge transforms, one tensor per
//! vertex, and an optional length context:
//!
//! ```json
//! {
//!   "graph": {"vertices": [1, 2], "edges": [{"u": 1, "v": 2, "w": 1.0}]},
//!   "d": 2,
//!   "transforms": [{"u": 1, "v": 2, "t": [0.8, -0.6, 0.6, 0.8]}],
//!   "tensors": [{"position": [0.0, 0.0]}, {"position": [1.0, 0.0], "attributes": [0.3]}],
//!   "context": {"rows": [[1.0]], "target": [1.0]}
//! }
//! ```
//!
//! Validation checks every frame and reports all problems at once, each
//! prefixed with its JSON pointer (`/frames/3/graph/edges/1/w: ...`), so one
//! pass over the error list fixes the whole file. A frame without a context
//! is legal and logged as a warning.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use fabric_core::cochain::AffineConstraint;
use fabric_core::semantics::{SceneState, SemanticTensor};
use fabric_core::{ConnectionGraph, WeightedGraph};

use crate::{input_error, CliError};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceJson {
    frames: Vec<FrameJson>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameJson {
    graph: GraphJson,
    d: usize,
    #[serde(default)]
    transforms: Vec<TransformJson>,
    tensors: Vec<TensorJson>,
    #[serde(default)]
    context: Option<ContextJson>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphJson {
    vertices: Vec<u64>,
    edges: Vec<EdgeJson>,
    #[serde(default)]
    vertex_weights: std::collections::BTreeMap<u64, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeJson {
    u: u64,
    v: u64,
    w: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformJson {
    u: u64,
    v: u64,
    /// Row-major `d x d` entries.
    t: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorJson {
    position: Vec<f64>,
    #[serde(default)]
    attributes: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContextJson {
    rows: Vec<Vec<f64>>,
    target: Vec<f64>,
}

/// One validated frame, ready to solve.
pub struct Frame {
    pub scene: SceneState,
    pub has_context: bool,
}

/// Loads and validates a sequence file; all frames are checked even after
/// the first failure.
pub fn load_sequence(path: &Path) -> Result<Vec<Frame>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_error(format!("cannot read sequence {}: {e}", path.display())))?;
    let parsed: SequenceJson = serde_json::from_str(&text)
        .map_err(|e| input_error(format!("sequence {}: {e}", path.display())))?;
    if parsed.frames.is_empty() {
        return Err(input_error(format!(
            "sequence {}: frames must not be empty",
            path.display()
        )));
    }

    let mut errors: Vec<String> = Vec::new();
    let mut frames: Vec<Frame> = Vec::new();
    for (i, frame) in parsed.frames.iter().enumerate() {
        match build_frame(i, frame, &mut errors) {
            Some(f) => frames.push(f),
            None => {}
        }
    }
    if !errors.is_empty() {
        return Err(input_error(format!(
            "sequence {}: {} problem(s)\n{}",
            path.display(),
            errors.len(),
            errors.join("\n")
        )));
    }
    Ok(frames)
}

/// Validates one frame, pushing pointer-prefixed messages; returns the
/// frame only when it is fully usable.
fn build_frame(i: usize, frame: &FrameJson, errors: &mut Vec<String>) -> Option<Frame> {
    let at = |suffix: String| format!("/frames/{i}{suffix}");
    let before = errors.len();

    if frame.graph.vertices.is_empty() {
        errors.push(format!("{}: vertices must not be empty", at("/graph/vertices".into())));
    }
    {
        let mut seen = std::collections::BTreeSet::new();
        for (k, v) in frame.graph.vertices.iter().enumerate() {
            if !seen.insert(*v) {
                errors.push(format!(
                    "{}: vertex {v} repeated",
                    at(format!("/graph/vertices/{k}"))
                ));
            }
        }
        for (k, e) in frame.graph.edges.iter().enumerate() {
            if e.u == e.v {
                errors.push(format!(
                    "{}: self loop at vertex {}",
                    at(format!("/graph/edges/{k}")),
                    e.u
                ));
            }
            if !seen.contains(&e.u) || !seen.contains(&e.v) {
                errors.push(format!(
                    "{}: endpoint not in vertices",
                    at(format!("/graph/edges/{k}"))
                ));
            }
            if !(e.w.is_finite() && e.w > 0.0) {
                errors.push(format!(
                    "{}: edge weight must be positive, got {}",
                    at(format!("/graph/edges/{k}/w")),
                    e.w
                ));
            }
        }
        for (v, w) in &frame.graph.vertex_weights {
            if !(w.is_finite() && *w > 0.0) {
                errors.push(format!(
                    "{}: vertex weight must be positive, got {w}",
                    at(format!("/graph/vertex_weights/{v}"))
                ));
            }
        }
    }
    if frame.d == 0 {
        errors.push(format!("{}: fiber dimension must be at least 1", at("/d".into())));
    }
    let d = frame.d.max(1);

    // shape checks that need no graph object, so one bad edge does not
    // hide a bad tensor in the same frame
    let edge_pairs: std::collections::BTreeSet<(u64, u64)> = frame
        .graph
        .edges
        .iter()
        .map(|e| (e.u.min(e.v), e.u.max(e.v)))
        .collect();
    for (k, tr) in frame.transforms.iter().enumerate() {
        if !edge_pairs.contains(&(tr.u.min(tr.v), tr.u.max(tr.v))) {
            errors.push(format!(
                "{}: no edge ({}, {}) in the graph",
                at(format!("/transforms/{k}")),
                tr.u,
                tr.v
            ));
        } else if tr.t.len() != d * d {
            errors.push(format!(
                "{}: expected {} entries for a {d} x {d} transform, got {}",
                at(format!("/transforms/{k}/t")),
                d * d,
                tr.t.len()
            ));
        }
    }

    if frame.tensors.len() != frame.graph.vertices.len() {
        errors.push(format!(
            "{}: expected one tensor per vertex ({}), got {}",
            at("/tensors".into()),
            frame.graph.vertices.len(),
            frame.tensors.len()
        ));
    }
    for (k, t) in frame.tensors.iter().enumerate() {
        if t.position.len() != d {
            errors.push(format!(
                "{}: position must have {d} entries, got {}",
                at(format!("/tensors/{k}/position")),
                t.position.len()
            ));
        }
        for (j, x) in t.position.iter().enumerate() {
            if !x.is_finite() {
                errors.push(format!(
                    "{}: non-finite entry",
                    at(format!("/tensors/{k}/position/{j}"))
                ));
            }
        }
        for (j, x) in t.attributes.iter().enumerate() {
            if !x.is_finite() {
                errors.push(format!(
                    "{}: non-finite entry",
                    at(format!("/tensors/{k}/attributes/{j}"))
                ));
            }
        }
    }

    if let Some(ctx) = &frame.context {
        let m = frame.graph.edges.len();
        for (k, row) in ctx.rows.iter().enumerate() {
            if row.len() != m {
                errors.push(format!(
                    "{}: row must have one entry per edge ({m}), got {}",
                    at(format!("/context/rows/{k}")),
                    row.len()
                ));
            }
        }
        if ctx.target.len() != ctx.rows.len() {
            errors.push(format!(
                "{}: target must have one entry per row ({}), got {}",
                at("/context/target".into()),
                ctx.rows.len(),
                ctx.target.len()
            ));
        }
    }
    if errors.len() > before {
        return None;
    }

    let edges: Vec<(u64, u64, f64)> = frame
        .graph
        .edges
        .iter()
        .map(|e| (e.u, e.v, e.w))
        .collect();
    let graph = match WeightedGraph::with_options(
        &frame.graph.vertices,
        &edges,
        Some(&frame.graph.vertex_weights),
        false,
    ) {
        Ok(g) => g,
        Err(e) => {
            errors.push(format!("{}: {e}", at("/graph".into())));
            return None;
        }
    };

    let entries: Vec<((u64, u64), DMatrix<f64>)> = frame
        .transforms
        .iter()
        .map(|tr| ((tr.u, tr.v), DMatrix::from_row_slice(d, d, &tr.t)))
        .collect();

    let connection = match ConnectionGraph::with_transforms(graph, d, &entries) {
        Ok(c) => c,
        Err(e) => {
            errors.push(format!("{}: {e}", at("/transforms".into())));
            return None;
        }
    };
    let tensors: Vec<SemanticTensor> = frame
        .tensors
        .iter()
        .map(|t| {
            SemanticTensor::new(
                DVector::from_vec(t.position.clone()),
                DVector::from_vec(t.attributes.clone()),
            )
            .expect("dimensions validated above")
        })
        .collect();
    let mut scene = match SceneState::with_connection(connection, tensors) {
        Ok(s) => s,
        Err(e) => {
            errors.push(format!("{}: {e}", at("/tensors".into())));
            return None;
        }
    };

    let has_context = frame.context.is_some();
    if let Some(ctx) = &frame.context {
        let q = ctx.rows.len();
        let m = scene.graph().edge_count();
        let flat: Vec<f64> = ctx.rows.iter().flatten().copied().collect();
        let constraint = match AffineConstraint::new(
            DMatrix::from_row_slice(q, m, &flat),
            DVector::from_vec(ctx.target.clone()),
        ) {
            Ok(c) => c,
            Err(e) => {
                errors.push(format!("{}: {e}", at("/context".into())));
                return None;
            }
        };
        if let Err(e) = scene.set_context(constraint) {
            errors.push(format!("{}: {e}", at("/context".into())));
            return None;
        }
    } else {
        log::warn!("frame {i} has no context block; the step runs unconstrained");
    }
    Some(Frame { scene, has_context })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(text: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seq.json");
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(text.as_bytes()).unwrap();
        (dir, path)
    }

    #[test]
    fn minimal_sequence_loads() {
        let (_d, path) = write_tmp(
            r#"{"frames": [{
                "graph": {"vertices": [1, 2, 3],
                          "edges": [{"u":1,"v":2,"w":1.0},{"u":2,"v":3,"w":1.0},{"u":1,"v":3,"w":1.0}]},
                "d": 2,
                "tensors": [{"position":[0.0,0.0]},{"position":[1.0,0.0]},{"position":[0.0,1.0]}],
                "context": {"rows": [[1.0,1.0,1.0]], "target": [3.5]}
            }]}"#,
        );
        let frames = load_sequence(&path).unwrap();
        assert_eq!(frames.len(), 1);
        assert!(frames[0].has_context);
        assert_eq!(frames[0].scene.graph().edge_count(), 3);
    }

    #[test]
    fn all_problems_are_reported_with_pointers() {
        let (_d, path) = write_tmp(
            r#"{"frames": [
              {
                "graph": {"vertices": [1, 2, 3],
                          "edges": [{"u":1,"v":2,"w":1.0},{"u":2,"v":3,"w":-2.0},{"u":1,"v":3,"w":1.0}]},
                "d": 2,
                "tensors": [{"position":[0.0,0.0]},{"position":[1.0]},{"position":[0.0,1.0]}]
              },
              {
                "graph": {"vertices": [1, 2, 3],
                          "edges": [{"u":1,"v":2,"w":1.0},{"u":2,"v":3,"w":1.0},{"u":1,"v":3,"w":1.0}]},
                "d": 1,
                "tensors": [{"position":[0.0]},{"position":[1.0]},{"position":[0.5]}],
                "context": {"rows": [[1.0,1.0]], "target": [2.0]}
              }
            ]}"#,
        );
        let err = match load_sequence(&path) {
            Err(e) => e,
            Ok(_) => panic!("expected validation failure"),
        };
        let msg = err.to_string();
        assert!(msg.contains("/frames/0/graph/edges/1/w"), "{msg}");
        assert!(msg.contains("/frames/0/tensors/1/position"), "{msg}");
        assert!(msg.contains("/frames/1/context/rows/0"), "{msg}");
        assert!(matches!(err, CliError::Input(_)));
    }

    #[test]
    fn transform_shape_is_checked() {
        let (_d, path) = write_tmp(
            r#"{"frames": [{
                "graph": {"vertices": [1, 2], "edges": [{"u":1,"v":2,"w":1.0}]},
                "d": 2,
                "transforms": [{"u":1,"v":2,"t":[1.0,0.0,0.0]}],
                "tensors": [{"position":[0.0,0.0]},{"position":[1.0,0.0]}]
            }]}"#,
        );
        let msg = match load_sequence(&path) {
            Err(e) => e.to_string(),
            Ok(_) => panic!("expected validation failure"),
        };
        assert!(msg.contains("/frames/0/transforms/0/t"), "{msg}");
    }
}
