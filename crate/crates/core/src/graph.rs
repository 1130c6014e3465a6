//! Weighted graphs and their discrete differential operators.
//!
//! A [`WeightedGraph`] stores an undirected simple graph with positive edge
//! weights and optional positive vertex weights. Edges are kept in a
//! canonical form so that every matrix built from the graph is reproducible:
//!
//! * each edge is stored as `(u, v)` with `u < v`,
//! * the edge list is sorted by `(u, v)`,
//! * the implied orientation of edge `(u, v)` is tail `u`, head `v`
//!   (the smaller vertex id is always the tail).
//!
//! On top of that structure the module provides the oriented incidence
//! (boundary) operator, the edge and vertex Laplacians, fundamental cycle
//! bases relative to a minimum-weight spanning tree, algebraic connectivity,
//! and effective resistance.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("vertex id {0} appears more than once")]
    DuplicateVertex(u64),
    #[error("edge references unknown vertex id {0}")]
    UnknownVertex(u64),
    #[error("self-loop on vertex {0} is not allowed")]
    SelfLoop(u64),
    #[error("duplicate edge between {0} and {1}")]
    DuplicateEdge(u64, u64),
    #[error("edge ({0}, {1}) has non-positive or non-finite weight {2}")]
    BadEdgeWeight(u64, u64, f64),
    #[error("vertex {0} has non-positive or non-finite weight {1}")]
    BadVertexWeight(u64, f64),
    #[error("graph is disconnected ({components} components) but was required connected")]
    Disconnected { components: usize },
    #[error("graph has no vertices")]
    Empty,
    #[error("vertices {0} and {1} lie in different components")]
    DifferentComponents(u64, u64),
    #[error("cochain has length {got}, graph has {expected} edges")]
    CochainLength { got: usize, expected: usize },
    #[error("invalid graph JSON: {0}")]
    Json(String),
}

/// One undirected edge in canonical orientation (`u < v`, tail `u`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: u64,
    pub v: u64,
    pub w: f64,
}

/// Undirected simple graph with positive edge and vertex weights.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    vertices: Vec<u64>,
    edges: Vec<Edge>,
    vertex_weights: Vec<f64>,
    allow_disconnected: bool,
}

/// Equality covers the graph itself; the connectivity-policy flag is a
/// construction option and deliberately excluded.
impl PartialEq for WeightedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
            && self.edges == other.edges
            && self.vertex_weights == other.vertex_weights
    }
}

impl WeightedGraph {
    /// Builds a connected graph with unit vertex weights.
    pub fn new(vertex_ids: &[u64], edges: &[(u64, u64, f64)]) -> Result<Self, GraphError> {
        Self::with_options(vertex_ids, edges, None, false)
    }

    /// Builds a graph that may be disconnected, unit vertex weights.
    pub fn new_disconnected(
        vertex_ids: &[u64],
        edges: &[(u64, u64, f64)],
    ) -> Result<Self, GraphError> {
        Self::with_options(vertex_ids, edges, None, true)
    }

    /// Full constructor. `vertex_weights` defaults to 1.0 per vertex where absent.
    pub fn with_options(
        vertex_ids: &[u64],
        edges: &[(u64, u64, f64)],
        vertex_weights: Option<&BTreeMap<u64, f64>>,
        allow_disconnected: bool,
    ) -> Result<Self, GraphError> {
        if vertex_ids.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut vertices = vertex_ids.to_vec();
        vertices.sort_unstable();
        for pair in vertices.windows(2) {
            if pair[0] == pair[1] {
                return Err(GraphError::DuplicateVertex(pair[0]));
            }
        }

        let mut canon: Vec<Edge> = Vec::with_capacity(edges.len());
        for &(a, b, w) in edges {
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            for id in [a, b] {
                if vertices.binary_search(&id).is_err() {
                    return Err(GraphError::UnknownVertex(id));
                }
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(GraphError::BadEdgeWeight(a, b, w));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            canon.push(Edge { u, v, w });
        }
        canon.sort_by(|x, y| (x.u, x.v).cmp(&(y.u, y.v)));
        for pair in canon.windows(2) {
            if pair[0].u == pair[1].u && pair[0].v == pair[1].v {
                return Err(GraphError::DuplicateEdge(pair[0].u, pair[0].v));
            }
        }

        let mut weights = vec![1.0; vertices.len()];
        if let Some(map) = vertex_weights {
            for (&id, &w) in map {
                let idx = vertices
                    .binary_search(&id)
                    .map_err(|_| GraphError::UnknownVertex(id))?;
                if !(w.is_finite() && w > 0.0) {
                    return Err(GraphError::BadVertexWeight(id, w));
                }
                weights[idx] = w;
            }
        }

        let graph = Self {
            vertices,
            edges: canon,
            vertex_weights: weights,
            allow_disconnected,
        };
        if !allow_disconnected {
            let comps = graph.component_count();
            if comps != 1 {
                return Err(GraphError::Disconnected { components: comps });
            }
        }
        Ok(graph)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[u64] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_weights(&self) -> &[f64] {
        &self.vertex_weights
    }

    /// Position of a vertex id in the sorted vertex list.
    pub fn vertex_index(&self, id: u64) -> Option<usize> {
        self.vertices.binary_search(&id).ok()
    }

    /// Position of the canonical edge `(min, max)` in the sorted edge list.
    pub fn edge_index(&self, a: u64, b: u64) -> Option<usize> {
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        self.edges
            .binary_search_by(|e| (e.u, e.v).cmp(&(u, v)))
            .ok()
    }

    /// Unweighted degree of the vertex at internal index `i`.
    pub fn degree(&self, i: usize) -> usize {
        let id = self.vertices[i];
        self.edges.iter().filter(|e| e.u == id || e.v == id).count()
    }

    /// Edge indices incident to the vertex at internal index `i`.
    pub fn incident_edges(&self, i: usize) -> Vec<usize> {
        let id = self.vertices[i];
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.u == id || e.v == id)
            .map(|(k, _)| k)
            .collect()
    }

    /// Number of connected components.
    pub fn component_count(&self) -> usize {
        let mut ds = DisjointSet::new(self.vertices.len());
        for e in &self.edges {
            let iu = self.vertex_index(e.u).expect("canonical edge");
            let iv = self.vertex_index(e.v).expect("canonical edge");
            ds.union(iu, iv);
        }
        ds.component_count()
    }

    /// Component label per vertex index, labels are the minimal member index.
    pub fn component_labels(&self) -> Vec<usize> {
        let mut ds = DisjointSet::new(self.vertices.len());
        for e in &self.edges {
            let iu = self.vertex_index(e.u).expect("canonical edge");
            let iv = self.vertex_index(e.v).expect("canonical edge");
            ds.union(iu, iv);
        }
        let mut min_of_root: BTreeMap<usize, usize> = BTreeMap::new();
        for i in 0..self.vertices.len() {
            let r = ds.find(i);
            let entry = min_of_root.entry(r).or_insert(i);
            if i < *entry {
                *entry = i;
            }
        }
        (0..self.vertices.len())
            .map(|i| min_of_root[&ds.find(i)])
            .collect()
    }

    /// Returns a copy with edge index `k` removed. Connectivity is not re-checked.
    pub fn without_edge(&self, k: usize) -> Self {
        let mut g = self.clone();
        g.edges.remove(k);
        g.allow_disconnected = true;
        g
    }

    /// Returns a copy with an extra edge. Fails on duplicates or unknown vertices.
    pub fn with_edge(&self, a: u64, b: u64, w: f64) -> Result<Self, GraphError> {
        let mut list: Vec<(u64, u64, f64)> =
            self.edges.iter().map(|e| (e.u, e.v, e.w)).collect();
        list.push((a, b, w));
        let weights: BTreeMap<u64, f64> = self
            .vertices
            .iter()
            .copied()
            .zip(self.vertex_weights.iter().copied())
            .collect();
        Self::with_options(&self.vertices, &list, Some(&weights), self.allow_disconnected)
    }

    /// Parses the graph JSON schema:
    /// `{"vertices": [...], "edges": [{"u":..,"v":..,"w":..}], "vertex_weights": {"id": w}}`.
    pub fn from_json_str(s: &str) -> Result<Self, GraphError> {
        let parsed: GraphJson =
            serde_json::from_str(s).map_err(|e| GraphError::Json(e.to_string()))?;
        parsed.try_into()
    }

    /// Serializes to the canonical graph JSON schema.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&GraphJson::from(self)).expect("graph serializes")
    }
}

/// Edge-indexed real vector aligned with the canonical edge order of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain {
    pub values: DVector<f64>,
}

impl Cochain {
    pub fn new(graph: &WeightedGraph, values: DVector<f64>) -> Result<Self, GraphError> {
        if values.len() != graph.edge_count() {
            return Err(GraphError::CochainLength {
                got: values.len(),
                expected: graph.edge_count(),
            });
        }
        Ok(Self { values })
    }

    pub fn zeros(graph: &WeightedGraph) -> Self {
        Self {
            values: DVector::zeros(graph.edge_count()),
        }
    }
}

/// Fundamental cycle basis relative to a minimum-weight spanning tree.
///
/// `rows` is `q x m` with `q = m - n + c`; every row is a signed indicator of
/// the cycle closed by one non-tree edge, and annihilates the image of the
/// boundary operator.
#[derive(Debug, Clone)]
pub struct CycleBasis {
    pub tree_edges: Vec<usize>,
    pub chord_edges: Vec<usize>,
    pub rows: DMatrix<f64>,
}

impl CycleBasis {
    pub fn cycle_count(&self) -> usize {
        self.rows.nrows()
    }

    /// Edge indices with nonzero coefficient in cycle row `k`.
    pub fn cycle_edges(&self, k: usize) -> Vec<usize> {
        (0..self.rows.ncols())
            .filter(|&j| self.rows[(k, j)] != 0.0)
            .collect()
    }
}

/// Oriented incidence operator, `m x n`: row per edge with -1 at the tail
/// (smaller vertex id) and +1 at the head.
pub fn boundary_operator(graph: &WeightedGraph) -> DMatrix<f64> {
    let m = graph.edge_count();
    let n = graph.vertex_count();
    let mut b = DMatrix::zeros(m, n);
    for (k, e) in graph.edges().iter().enumerate() {
        let iu = graph.vertex_index(e.u).expect("canonical edge");
        let iv = graph.vertex_index(e.v).expect("canonical edge");
        b[(k, iu)] = -1.0;
        b[(k, iv)] = 1.0;
    }
    b
}

/// Edge Laplacian `B1 B1^T` (`m x m`, PSD, kernel = cycle space).
pub fn edge_laplacian(graph: &WeightedGraph) -> DMatrix<f64> {
    let b = boundary_operator(graph);
    &b * b.transpose()
}

/// Weighted vertex Laplacian `B1^T W B1` with `W = diag(edge weights)`.
pub fn vertex_laplacian(graph: &WeightedGraph) -> DMatrix<f64> {
    let b = boundary_operator(graph);
    let w = DMatrix::from_diagonal(&DVector::from_iterator(
        graph.edge_count(),
        graph.edges().iter().map(|e| e.w),
    ));
    b.transpose() * w * b
}

/// Second-smallest eigenvalue of the weighted vertex Laplacian.
///
/// Zero exactly when the graph is disconnected; graphs with fewer than two
/// vertices return 0.
pub fn algebraic_connectivity(graph: &WeightedGraph) -> f64 {
    if graph.vertex_count() < 2 {
        return 0.0;
    }
    let vals = linalg::sym_eigenvalues(&vertex_laplacian(graph));
    vals[1].max(0.0)
}

/// Effective resistance between two vertex ids through the weighted vertex
/// Laplacian pseudoinverse.
pub fn effective_resistance(graph: &WeightedGraph, a: u64, b: u64) -> Result<f64, GraphError> {
    let ia = graph
        .vertex_index(a)
        .ok_or(GraphError::UnknownVertex(a))?;
    let ib = graph
        .vertex_index(b)
        .ok_or(GraphError::UnknownVertex(b))?;
    if ia == ib {
        return Ok(0.0);
    }
    let labels = graph.component_labels();
    if labels[ia] != labels[ib] {
        return Err(GraphError::DifferentComponents(a, b));
    }
    let pinv = linalg::sym_pseudo_inverse(&vertex_laplacian(graph));
    let mut d = DVector::zeros(graph.vertex_count());
    d[ia] = 1.0;
    d[ib] = -1.0;
    Ok((d.transpose() * pinv * d)[(0, 0)])
}

/// Fundamental cycle basis from a minimum-weight spanning forest.
///
/// Kruskal with ties broken by canonical edge index; one cycle row per
/// non-tree edge, oriented so the chord itself carries +1.
pub fn fundamental_cycle_basis(graph: &WeightedGraph) -> CycleBasis {
    let n = graph.vertex_count();
    let m = graph.edge_count();

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        graph.edges()[i]
            .w
            .total_cmp(&graph.edges()[j].w)
            .then(i.cmp(&j))
    });

    let mut ds = DisjointSet::new(n);
    let mut tree_edges = Vec::new();
    let mut chord_edges = Vec::new();
    for k in order {
        let e = graph.edges()[k];
        let iu = graph.vertex_index(e.u).expect("canonical edge");
        let iv = graph.vertex_index(e.v).expect("canonical edge");
        if ds.union(iu, iv) {
            tree_edges.push(k);
        } else {
            chord_edges.push(k);
        }
    }
    tree_edges.sort_unstable();
    chord_edges.sort_unstable();

    // adjacency over tree edges: vertex index -> (neighbor index, edge index)
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for &k in &tree_edges {
        let e = graph.edges()[k];
        let iu = graph.vertex_index(e.u).expect("canonical edge");
        let iv = graph.vertex_index(e.v).expect("canonical edge");
        adj[iu].push((iv, k));
        adj[iv].push((iu, k));
    }

    let mut rows = DMatrix::zeros(chord_edges.len(), m);
    for (row, &chord) in chord_edges.iter().enumerate() {
        let e = graph.edges()[chord];
        let start = graph.vertex_index(e.v).expect("canonical edge");
        let goal = graph.vertex_index(e.u).expect("canonical edge");
        // tree path head -> tail closes the cycle tail -> head traversed by the chord
        let path = tree_path(&adj, start, goal).expect("spanning forest connects the chord");
        rows[(row, chord)] = 1.0;
        for (from, to, k) in path {
            let edge = graph.edges()[k];
            let tail = graph.vertex_index(edge.u).expect("canonical edge");
            let sign = if from == tail && to != tail { 1.0 } else { -1.0 };
            rows[(row, k)] = sign;
        }
    }

    CycleBasis {
        tree_edges,
        chord_edges,
        rows,
    }
}

/// Path through the tree as `(from, to, edge index)` steps, or `None` when
/// the endpoints are in different components.
fn tree_path(
    adj: &[Vec<(usize, usize)>],
    start: usize,
    goal: usize,
) -> Option<Vec<(usize, usize, usize)>> {
    let n = adj.len();
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    seen[start] = true;
    queue.push_back(start);
    while let Some(x) = queue.pop_front() {
        if x == goal {
            break;
        }
        for &(y, k) in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                prev[y] = Some((x, k));
                queue.push_back(y);
            }
        }
    }
    if !seen[goal] {
        return None;
    }
    let mut path = Vec::new();
    let mut cur = goal;
    while cur != start {
        let (p, k) = prev[cur].expect("path exists");
        path.push((p, cur, k));
        cur = p;
    }
    path.reverse();
    Some(path)
}

/// Union-find with path compression and union by rank.
#[derive(Debug, Clone)]
pub(crate) struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u32>,
    components: usize,
}

impl DisjointSet {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
            components: n,
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true when the two sets were distinct and are now merged.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (hi, lo) = if self.rank[ra] >= self.rank[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[lo] = hi;
        if self.rank[hi] == self.rank[lo] {
            self.rank[hi] += 1;
        }
        self.components -= 1;
        true
    }

    pub(crate) fn component_count(&self) -> usize {
        self.components
    }
}

#[derive(Serialize, Deserialize)]
struct EdgeJson {
    u: u64,
    v: u64,
    w: f64,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    vertices: Vec<u64>,
    edges: Vec<EdgeJson>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    vertex_weights: BTreeMap<String, f64>,
}

impl From<&WeightedGraph> for GraphJson {
    fn from(g: &WeightedGraph) -> Self {
        let vertex_weights = g
            .vertices
            .iter()
            .zip(&g.vertex_weights)
            .filter(|(_, &w)| w != 1.0)
            .map(|(id, &w)| (id.to_string(), w))
            .collect();
        Self {
            vertices: g.vertices.clone(),
            edges: g
                .edges
                .iter()
                .map(|e| EdgeJson {
                    u: e.u,
                    v: e.v,
                    w: e.w,
                })
                .collect(),
            vertex_weights,
        }
    }
}

impl TryFrom<GraphJson> for WeightedGraph {
    type Error = GraphError;

    fn try_from(j: GraphJson) -> Result<Self, GraphError> {
        let edges: Vec<(u64, u64, f64)> = j.edges.iter().map(|e| (e.u, e.v, e.w)).collect();
        let mut weights = BTreeMap::new();
        for (key, w) in &j.vertex_weights {
            let id: u64 = key
                .parse()
                .map_err(|_| GraphError::Json(format!("bad vertex_weights key {key:?}")))?;
            weights.insert(id, *w);
        }
        // JSON input is accepted for disconnected graphs; operations that
        // need connectivity check it themselves.
        WeightedGraph::with_options(&j.vertices, &edges, Some(&weights), true)
    }
}
