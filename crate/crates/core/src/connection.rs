//! Vector-valued sections over a graph with per-edge orthogonal transforms.
//!
//! Each vertex carries a frame in `R^d`; each edge `(u, v)` (canonical tail
//! `u < v`) carries an orthogonal matrix `T` mapping head coordinates into
//! tail coordinates. The consistency energy of a section `f` is
//! `sum_e w_e |T_e f_v - f_u|^2 / 2`, and its Hessian is the block
//! Laplacian assembled here. Relabeling frames by per-vertex orthogonal
//! gauges leaves the energy invariant; solving for sections requires an
//! anchor to remove exactly that freedom.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, WeightedGraph};
use crate::linalg::{self, LinalgError};

const ORTHO_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ConnectionError {
    #[error("fiber dimension must be positive")]
    ZeroDimension,
    #[error("transform for edge ({u}, {v}) must be {d}x{d}, got {rows}x{cols}")]
    TransformShape {
        u: u64,
        v: u64,
        d: usize,
        rows: usize,
        cols: usize,
    },
    #[error("transform for edge ({u}, {v}) is not orthogonal (|T^T T - I| = {defect:.3e})")]
    NotOrthogonal { u: u64, v: u64, defect: f64 },
    #[error("edge ({0}, {1}) does not exist in the base graph")]
    UnknownEdge(u64, u64),
    #[error("duplicate transform for edge ({0}, {1})")]
    DuplicateTransform(u64, u64),
    #[error("vertex {0} does not exist in the base graph")]
    UnknownVertex(u64),
    #[error("section has length {got}, expected {expected}")]
    SectionLength { got: usize, expected: usize },
    #[error("anchor values have length {got}, expected fiber dimension {expected}")]
    AnchorLength { got: usize, expected: usize },
    #[error("gauge for vertex {vertex} is not orthogonal (|g^T g - I| = {defect:.3e})")]
    GaugeNotOrthogonal { vertex: u64, defect: f64 },
    #[error(
        "anchored system is singular; the anchor does not remove all \
         of the solution freedom (is the base graph connected?)"
    )]
    SingularSystem(#[source] LinalgError),
    #[error("anchored solve residual {residual:.3e} exceeds tolerance")]
    ResidualTooLarge { residual: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("JSON: {0}")]
    Json(String),
}

/// A weighted graph whose edges carry orthogonal frame transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionGraph {
    base: WeightedGraph,
    d: usize,
    /// Parallel to `base.edges()`; maps head coordinates into tail coordinates.
    transforms: Vec<DMatrix<f64>>,
}

impl ConnectionGraph {
    /// All transforms identity: the trivial connection.
    pub fn trivial(base: WeightedGraph, d: usize) -> Result<Self, ConnectionError> {
        if d == 0 {
            return Err(ConnectionError::ZeroDimension);
        }
        let transforms = vec![DMatrix::identity(d, d); base.edge_count()];
        Ok(Self {
            base,
            d,
            transforms,
        })
    }

    /// Builds a connection from explicit per-edge transforms.
    ///
    /// Each entry names an edge in either orientation; a transform given for
    /// `(v, u)` against the canonical `(u, v)` is stored transposed. Edges
    /// without an entry keep the identity.
    pub fn with_transforms(
        base: WeightedGraph,
        d: usize,
        entries: &[((u64, u64), DMatrix<f64>)],
    ) -> Result<Self, ConnectionError> {
        let mut cg = Self::trivial(base, d)?;
        let mut seen = vec![false; cg.base.edge_count()];
        for ((a, b), t) in entries {
            let (u, v) = if a < b { (*a, *b) } else { (*b, *a) };
            let idx = cg
                .base
                .edge_index(u, v)
                .ok_or(ConnectionError::UnknownEdge(*a, *b))?;
            if seen[idx] {
                return Err(ConnectionError::DuplicateTransform(u, v));
            }
            seen[idx] = true;
            if t.nrows() != d || t.ncols() != d {
                return Err(ConnectionError::TransformShape {
                    u: *a,
                    v: *b,
                    d,
                    rows: t.nrows(),
                    cols: t.ncols(),
                });
            }
            let defect = (t.transpose() * t - DMatrix::identity(d, d)).norm();
            if defect > ORTHO_TOL {
                return Err(ConnectionError::NotOrthogonal {
                    u: *a,
                    v: *b,
                    defect,
                });
            }
            cg.transforms[idx] = if *a < *b { t.clone() } else { t.transpose() };
        }
        Ok(cg)
    }

    pub fn base(&self) -> &WeightedGraph {
        &self.base
    }

    pub fn fiber_dim(&self) -> usize {
        self.d
    }

    /// Total dimension of a section vector: `vertex_count * d`.
    pub fn section_dim(&self) -> usize {
        self.base.vertex_count() * self.d
    }

    /// Transform carried by the canonical edge at `index`.
    pub fn transform(&self, index: usize) -> &DMatrix<f64> {
        &self.transforms[index]
    }

    /// Transform mapping the frame at `from` into the frame at `to` along
    /// the edge joining them.
    pub fn transform_between(&self, to: u64, from: u64) -> Option<DMatrix<f64>> {
        let (u, v) = if to < from { (to, from) } else { (from, to) };
        let idx = self.base.edge_index(u, v)?;
        Some(if to < from {
            self.transforms[idx].clone()
        } else {
            self.transforms[idx].transpose()
        })
    }

    /// View of the block of `f` belonging to the vertex at `index`.
    pub fn block<'a>(&self, f: &'a DVector<f64>, index: usize) -> nalgebra::DVectorView<'a, f64> {
        f.rows(index * self.d, self.d)
    }

    pub fn to_json_string(&self) -> String {
        let graph: serde_json::Value =
            serde_json::from_str(&self.base.to_json_string()).expect("graph JSON is valid");
        let transforms: Vec<TransformJson> = self
            .base
            .edges()
            .iter()
            .zip(&self.transforms)
            .map(|(e, t)| TransformJson {
                u: e.u,
                v: e.v,
                t: t.transpose().as_slice().to_vec(), // row-major
            })
            .collect();
        serde_json::to_string_pretty(&ConnectionJson {
            graph,
            d: self.d,
            transforms,
        })
        .expect("serialization cannot fail")
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConnectionError> {
        let parsed: ConnectionJson =
            serde_json::from_str(text).map_err(|e| ConnectionError::Json(e.to_string()))?;
        let graph_text =
            serde_json::to_string(&parsed.graph).map_err(|e| ConnectionError::Json(e.to_string()))?;
        let base = WeightedGraph::from_json_str(&graph_text)?;
        let entries: Vec<((u64, u64), DMatrix<f64>)> = parsed
            .transforms
            .iter()
            .map(|tj| {
                if tj.t.len() != parsed.d * parsed.d {
                    return Err(ConnectionError::Json(format!(
                        "transform for edge ({}, {}) has {} entries, expected {}",
                        tj.u,
                        tj.v,
                        tj.t.len(),
                        parsed.d * parsed.d
                    )));
                }
                Ok((
                    (tj.u, tj.v),
                    DMatrix::from_row_slice(parsed.d, parsed.d, &tj.t),
                ))
            })
            .collect::<Result<_, _>>()?;
        Self::with_transforms(base, parsed.d, &entries)
    }
}

#[derive(Serialize, Deserialize)]
struct ConnectionJson {
    graph: serde_json::Value,
    d: usize,
    transforms: Vec<TransformJson>,
}

#[derive(Serialize, Deserialize)]
struct TransformJson {
    u: u64,
    v: u64,
    t: Vec<f64>,
}

/// Pins the frame of one vertex during a solve, removing gauge freedom.
///
/// `vertex: None` pins the smallest vertex id; `values: None` clamps the
/// block to zero.
#[derive(Debug, Clone, Default)]
pub struct GaugeAnchor {
    pub vertex: Option<u64>,
    pub values: Option<DVector<f64>>,
}

impl GaugeAnchor {
    pub fn pin(vertex: u64, values: DVector<f64>) -> Self {
        Self {
            vertex: Some(vertex),
            values: Some(values),
        }
    }
}

/// Assembles the symmetric PSD block Laplacian of the consistency energy.
///
/// Per edge with weight `w` and transform `T`: the tail diagonal block gains
/// `w I`, the head diagonal block gains `w T^T T`, and the off-diagonal
/// blocks gain `-w T` and `-w T^T`.
pub fn assemble_connection_laplacian(cg: &ConnectionGraph) -> DMatrix<f64> {
    let d = cg.d;
    let n = cg.base.vertex_count();
    let mut l = DMatrix::zeros(n * d, n * d);
    let eye = DMatrix::identity(d, d);
    for (idx, e) in cg.base.edges().iter().enumerate() {
        let t = &cg.transforms[idx];
        let iu = cg.base.vertex_index(e.u).expect("edge endpoints exist") * d;
        let iv = cg.base.vertex_index(e.v).expect("edge endpoints exist") * d;
        let w = e.w;
        let mut blk = l.view_mut((iu, iu), (d, d));
        blk += &eye * w;
        let mut blk = l.view_mut((iv, iv), (d, d));
        blk += t.transpose() * t * w;
        let mut blk = l.view_mut((iu, iv), (d, d));
        blk -= t * w;
        let mut blk = l.view_mut((iv, iu), (d, d));
        blk -= t.transpose() * w;
    }
    l
}

/// Consistency energy `sum_e w_e |T_e f_v - f_u|^2 / 2` of a section.
pub fn consistency_energy(cg: &ConnectionGraph, f: &DVector<f64>) -> Result<f64, ConnectionError> {
    if f.len() != cg.section_dim() {
        return Err(ConnectionError::SectionLength {
            got: f.len(),
            expected: cg.section_dim(),
        });
    }
    let d = cg.d;
    let mut total = 0.0;
    for (idx, e) in cg.base.edges().iter().enumerate() {
        let iu = cg.base.vertex_index(e.u).expect("edge endpoints exist");
        let iv = cg.base.vertex_index(e.v).expect("edge endpoints exist");
        let fu = f.rows(iu * d, d);
        let fv = f.rows(iv * d, d);
        let r = &cg.transforms[idx] * fv - fu;
        total += 0.5 * e.w * r.norm_squared();
    }
    Ok(total)
}

/// Solves `min f^T L f / 2 - b.f` subject to the anchored block being fixed.
///
/// The stationarity and anchor equations form a saddle system solved by
/// full-pivot LU. A singular system means the anchor left solution freedom
/// (typically a disconnected base graph); a residual check guards against
/// silently inaccurate solutions.
pub fn solve_anchored(
    cg: &ConnectionGraph,
    b: &DVector<f64>,
    anchor: &GaugeAnchor,
) -> Result<DVector<f64>, ConnectionError> {
    let d = cg.d;
    let n = cg.base.vertex_count();
    let nd = n * d;
    if b.len() != nd {
        return Err(ConnectionError::SectionLength {
            got: b.len(),
            expected: nd,
        });
    }
    let anchor_id = anchor
        .vertex
        .unwrap_or_else(|| cg.base.vertices()[0]);
    let anchor_idx = cg
        .base
        .vertex_index(anchor_id)
        .ok_or(ConnectionError::UnknownVertex(anchor_id))?;
    let values = match &anchor.values {
        Some(v) => {
            if v.len() != d {
                return Err(ConnectionError::AnchorLength {
                    got: v.len(),
                    expected: d,
                });
            }
            v.clone()
        }
        None => DVector::zeros(d),
    };

    let l = assemble_connection_laplacian(cg);
    let mut kkt = DMatrix::zeros(nd + d, nd + d);
    kkt.view_mut((0, 0), (nd, nd)).copy_from(&l);
    for k in 0..d {
        kkt[(nd + k, anchor_idx * d + k)] = 1.0;
        kkt[(anchor_idx * d + k, nd + k)] = 1.0;
    }
    let mut rhs = DVector::zeros(nd + d);
    rhs.rows_mut(0, nd).copy_from(b);
    rhs.rows_mut(nd, d).copy_from(&values);

    let sol = linalg::solve_full_piv(&kkt, &rhs).map_err(ConnectionError::SingularSystem)?;
    let f = sol.rows(0, nd).clone_owned();
    let nu = sol.rows(nd, d).clone_owned();

    let mut stat = &l * &f - b;
    for k in 0..d {
        stat[anchor_idx * d + k] += nu[k];
    }
    let mut residual = stat.norm();
    for k in 0..d {
        residual = residual.max((f[anchor_idx * d + k] - values[k]).abs());
    }
    let scale = b.norm().max(values.norm()).max(1.0);
    if residual > 1e-8 * scale {
        return Err(ConnectionError::ResidualTooLarge { residual });
    }
    Ok(f)
}

/// Applies a per-vertex orthogonal change of frame.
///
/// The edge transforms become `g_u T g_v^T` and a section transforms as
/// `f_v -> g_v f_v`; the consistency energy is unchanged. Vertices missing
/// from `gauges` keep the identity.
pub fn apply_gauge(
    cg: &ConnectionGraph,
    gauges: &BTreeMap<u64, DMatrix<f64>>,
) -> Result<ConnectionGraph, ConnectionError> {
    let d = cg.d;
    let eye = DMatrix::identity(d, d);
    for (vid, g) in gauges {
        if cg.base.vertex_index(*vid).is_none() {
            return Err(ConnectionError::UnknownVertex(*vid));
        }
        if g.nrows() != d || g.ncols() != d {
            return Err(ConnectionError::TransformShape {
                u: *vid,
                v: *vid,
                d,
                rows: g.nrows(),
                cols: g.ncols(),
            });
        }
        let defect = (g.transpose() * g - &eye).norm();
        if defect > ORTHO_TOL {
            return Err(ConnectionError::GaugeNotOrthogonal {
                vertex: *vid,
                defect,
            });
        }
    }
    let fetch = |vid: u64| gauges.get(&vid).cloned().unwrap_or_else(|| eye.clone());
    let mut out = cg.clone();
    for (idx, e) in cg.base.edges().iter().enumerate() {
        out.transforms[idx] = fetch(e.u) * &cg.transforms[idx] * fetch(e.v).transpose();
    }
    Ok(out)
}

/// Transforms a section by per-vertex gauges: `f_v -> g_v f_v`.
pub fn gauge_section(
    cg: &ConnectionGraph,
    gauges: &BTreeMap<u64, DMatrix<f64>>,
    f: &DVector<f64>,
) -> Result<DVector<f64>, ConnectionError> {
    if f.len() != cg.section_dim() {
        return Err(ConnectionError::SectionLength {
            got: f.len(),
            expected: cg.section_dim(),
        });
    }
    let d = cg.d;
    let mut out = f.clone();
    for (i, vid) in cg.base.vertices().iter().enumerate() {
        if let Some(g) = gauges.get(vid) {
            let block = g * f.rows(i * d, d);
            out.rows_mut(i * d, d).copy_from(&block);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    fn rotation(theta: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(
            2,
            2,
            &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()],
        )
    }

    fn kernel_dim(l: &DMatrix<f64>) -> usize {
        let vals = crate::linalg::sym_eigenvalues(l);
        let max = vals[vals.len() - 1].max(1.0);
        vals.iter().filter(|v| v.abs() <= 1e-9 * max).count()
    }

    #[test]
    fn sign_flip_edge_matrix_and_kernel() {
        let base = WeightedGraph::new(&[1, 2], &[(1, 2, 1.0)]).unwrap();
        let cg = ConnectionGraph::with_transforms(
            base,
            1,
            &[((1, 2), DMatrix::from_row_slice(1, 1, &[-1.0]))],
        )
        .unwrap();
        let l = assemble_connection_laplacian(&cg);
        assert_relative_eq!(
            l,
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            epsilon = 1e-12
        );
        let flip = DVector::from_vec(vec![1.0, -1.0]);
        assert_relative_eq!(consistency_energy(&cg, &flip).unwrap(), 0.0, epsilon = 1e-12);
        let aligned = DVector::from_vec(vec![1.0, 1.0]);
        assert_relative_eq!(
            consistency_energy(&cg, &aligned).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        assert_eq!(kernel_dim(&l), 1);
    }

    #[test]
    fn identity_transforms_reduce_to_vertex_laplacian() {
        let base =
            WeightedGraph::new(&[1, 2, 3], &[(1, 2, 2.0), (2, 3, 0.5)]).unwrap();
        let lv = crate::graph::vertex_laplacian(&base);
        let cg = ConnectionGraph::trivial(base, 2).unwrap();
        let l = assemble_connection_laplacian(&cg);
        let expected = lv.kronecker(&DMatrix::identity(2, 2));
        assert_relative_eq!(l, expected, epsilon = 1e-12);
    }

    #[test]
    fn trivial_holonomy_gives_full_kernel() {
        let base = WeightedGraph::new(
            &[1, 2, 3],
            &[(1, 2, 1.0), (2, 3, 1.0), (1, 3, 1.0)],
        )
        .unwrap();
        let a = 0.4;
        let b = 1.1;
        // transform on (1,3) chosen so transport around the cycle is identity
        let cg = ConnectionGraph::with_transforms(
            base.clone(),
            2,
            &[
                ((1, 2), rotation(a)),
                ((2, 3), rotation(b)),
                ((1, 3), rotation(a + b)),
            ],
        )
        .unwrap();
        assert_eq!(kernel_dim(&assemble_connection_laplacian(&cg)), 2);

        // a twisted cycle admits no nonzero consistent section
        let twisted = ConnectionGraph::with_transforms(
            base,
            2,
            &[
                ((1, 2), rotation(a)),
                ((2, 3), rotation(b)),
                ((1, 3), rotation(a + b + 0.7)),
            ],
        )
        .unwrap();
        assert_eq!(kernel_dim(&assemble_connection_laplacian(&twisted)), 0);
    }

    #[test]
    fn gauge_change_preserves_energy_and_spectrum() {
        let base = WeightedGraph::new(
            &[1, 2, 3, 4],
            &[(1, 2, 1.0), (2, 3, 2.0), (3, 4, 1.5), (1, 4, 0.7)],
        )
        .unwrap();
        let cg = ConnectionGraph::with_transforms(
            base,
            2,
            &[((1, 2), rotation(0.3)), ((3, 4), rotation(-0.9))],
        )
        .unwrap();
        let mut gauges = BTreeMap::new();
        gauges.insert(1, rotation(0.2));
        gauges.insert(2, rotation(-1.3));
        gauges.insert(4, rotation(2.1));
        let cg2 = apply_gauge(&cg, &gauges).unwrap();

        let f = DVector::from_vec(vec![0.3, -1.2, 0.8, 0.1, -0.5, 0.9, 1.4, -0.2]);
        let f2 = gauge_section(&cg, &gauges, &f).unwrap();
        assert_relative_eq!(
            consistency_energy(&cg, &f).unwrap(),
            consistency_energy(&cg2, &f2).unwrap(),
            epsilon = 1e-12
        );

        let s1 = crate::linalg::sym_eigenvalues(&assemble_connection_laplacian(&cg));
        let s2 = crate::linalg::sym_eigenvalues(&assemble_connection_laplacian(&cg2));
        assert_relative_eq!(s1, s2, epsilon = 1e-8);
    }

    #[test]
    fn anchored_solve_recovers_consistent_section() {
        let base = WeightedGraph::new(&[1, 2], &[(1, 2, 1.0)]).unwrap();
        let cg = ConnectionGraph::with_transforms(
            base,
            1,
            &[((1, 2), DMatrix::from_row_slice(1, 1, &[-1.0]))],
        )
        .unwrap();
        let anchor = GaugeAnchor::pin(1, DVector::from_vec(vec![1.0]));
        let f = solve_anchored(&cg, &DVector::zeros(2), &anchor).unwrap();
        assert_relative_eq!(f, DVector::from_vec(vec![1.0, -1.0]), epsilon = 1e-10);
        assert!(consistency_energy(&cg, &f).unwrap() <= 1e-12);
    }

    #[test]
    fn anchored_solve_agrees_with_alternate_factorization() {
        let base = WeightedGraph::new(
            &[1, 2, 3, 4],
            &[(1, 2, 1.0), (2, 3, 2.0), (3, 4, 1.5), (1, 4, 0.7)],
        )
        .unwrap();
        let cg = ConnectionGraph::with_transforms(
            base,
            2,
            &[((1, 2), rotation(0.3)), ((2, 3), rotation(1.0))],
        )
        .unwrap();
        let b = DVector::from_vec(vec![0.5, -0.1, 0.0, 0.3, -0.7, 0.2, 0.1, 0.0]);
        let anchor = GaugeAnchor::default();
        let f = solve_anchored(&cg, &b, &anchor).unwrap();

        // same saddle system, different factorization
        let nd = cg.section_dim();
        let d = cg.fiber_dim();
        let l = assemble_connection_laplacian(&cg);
        let mut kkt = DMatrix::zeros(nd + d, nd + d);
        kkt.view_mut((0, 0), (nd, nd)).copy_from(&l);
        for k in 0..d {
            kkt[(nd + k, k)] = 1.0;
            kkt[(k, nd + k)] = 1.0;
        }
        let mut rhs = DVector::zeros(nd + d);
        rhs.rows_mut(0, nd).copy_from(&b);
        let qr = kkt.col_piv_qr();
        let alt = qr.solve(&rhs).unwrap().rows(0, nd).clone_owned();
        assert_relative_eq!(f, alt, epsilon = 1e-8);
    }

    #[test]
    fn disconnected_base_is_singular() {
        let base = WeightedGraph::new_disconnected(
            &[1, 2, 3, 4],
            &[(1, 2, 1.0), (3, 4, 1.0)],
        )
        .unwrap();
        let cg = ConnectionGraph::trivial(base, 1).unwrap();
        let err = solve_anchored(&cg, &DVector::zeros(4), &GaugeAnchor::default()).unwrap_err();
        assert!(matches!(err, ConnectionError::SingularSystem(_)));
    }

    #[test]
    fn rejects_non_orthogonal_transform() {
        let base = WeightedGraph::new(&[1, 2], &[(1, 2, 1.0)]).unwrap();
        let err = ConnectionGraph::with_transforms(
            base,
            2,
            &[((1, 2), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]))],
        )
        .unwrap_err();
        assert!(matches!(err, ConnectionError::NotOrthogonal { .. }));
    }

    #[test]
    fn rejects_unknown_edge_and_bad_shape() {
        let base = WeightedGraph::new(&[1, 2, 3], &[(1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let err = ConnectionGraph::with_transforms(
            base.clone(),
            2,
            &[((1, 3), rotation(0.1))],
        )
        .unwrap_err();
        assert!(matches!(err, ConnectionError::UnknownEdge(1, 3)));
        let err = ConnectionGraph::with_transforms(
            base,
            2,
            &[((1, 2), DMatrix::identity(3, 3))],
        )
        .unwrap_err();
        assert!(matches!(err, ConnectionError::TransformShape { .. }));
    }

    #[test]
    fn reversed_orientation_stores_transpose() {
        let base = WeightedGraph::new(&[1, 2], &[(1, 2, 1.0)]).unwrap();
        let r = rotation(0.6);
        let forward =
            ConnectionGraph::with_transforms(base.clone(), 2, &[((1, 2), r.clone())]).unwrap();
        let backward =
            ConnectionGraph::with_transforms(base, 2, &[((2, 1), r.transpose())]).unwrap();
        assert_relative_eq!(forward.transform(0), backward.transform(0), epsilon = 1e-12);
        assert_relative_eq!(
            forward.transform_between(2, 1).unwrap(),
            r.transpose(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn json_round_trip() {
        let base = WeightedGraph::new(
            &[1, 2, 3],
            &[(1, 2, 1.0), (2, 3, 2.5), (1, 3, 1.0)],
        )
        .unwrap();
        let cg = ConnectionGraph::with_transforms(
            base,
            2,
            &[((1, 2), rotation(0.4)), ((2, 3), rotation(-0.2))],
        )
        .unwrap();
        let text = cg.to_json_string();
        let back = ConnectionGraph::from_json_str(&text).unwrap();
        assert_eq!(cg, back);
        assert!(ConnectionGraph::from_json_str("{\"d\": 2}").is_err());
    }
}
