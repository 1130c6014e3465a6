//! Deterministic generators behind the bundled fixtures.
//!
//! The checked-in demo files are exactly what these functions produce; a
//! golden test regenerates them on demand (`FABRIC_REGEN_FIXTURES=1`) and
//! otherwise verifies the files have not drifted from the generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde_json::json;

/// Hexagon scene with two rotated chords, drifting over 20 frames.
///
/// The context pins the total ring length to 6 (the exact hexagon value),
/// so projection always succeeds and a default pipeline run stays inside
/// every limit.
pub fn demo_sequence_json() -> String {
    let mut rng = ChaCha12Rng::seed_from_u64(42);
    let n = 6usize;
    let frames_n = 20usize;
    let rot = |phi: f64| {
        let (s, c) = phi.sin_cos();
        vec![c, -s, s, c]
    };

    let mut frames = Vec::with_capacity(frames_n);
    for k in 0..frames_n {
        let theta = 0.015 * k as f64;
        let tensors: Vec<serde_json::Value> = (0..n)
            .map(|j| {
                let phi = theta + std::f64::consts::FRAC_PI_3 * j as f64;
                let jitter_x: f64 = rng.random_range(-0.02..0.02);
                let jitter_y: f64 = rng.random_range(-0.02..0.02);
                json!({
                    "position": [phi.cos() + jitter_x, phi.sin() + jitter_y],
                    "attributes": [0.5 + 0.08 * j as f64],
                })
            })
            .collect();
        frames.push(json!({
            "graph": {
                "vertices": [1, 2, 3, 4, 5, 6],
                "edges": [
                    {"u": 1, "v": 2, "w": 1.0},
                    {"u": 2, "v": 3, "w": 1.0},
                    {"u": 3, "v": 4, "w": 1.0},
                    {"u": 4, "v": 5, "w": 1.0},
                    {"u": 5, "v": 6, "w": 1.0},
                    {"u": 1, "v": 6, "w": 1.0},
                    {"u": 1, "v": 3, "w": 0.5},
                    {"u": 2, "v": 5, "w": 0.5},
                ],
            },
            "d": 2,
            "transforms": [
                {"u": 1, "v": 3, "t": rot(0.1)},
                {"u": 2, "v": 5, "t": rot(-0.15)},
            ],
            "tensors": tensors,
            // canonical edge order: (1,2), (1,3), (1,6), (2,3), (2,5),
            // (3,4), (4,5), (5,6); the row picks out the six ring edges
            "context": {
                "rows": [[1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0]],
                "target": [6.0],
            },
        }));
    }
    let mut text = serde_json::to_string_pretty(&json!({ "frames": frames }))
        .expect("fixture serialization cannot fail");
    text.push('\n');
    text
}

/// Two 4-cliques joined by a pair of high-filtration bridge edges: the
/// standard neck-surgery demonstration graph.
pub fn dumbbell_graph_json() -> String {
    let mut text = serde_json::to_string_pretty(&json!({
        "vertices": [1, 2, 3, 4, 5, 6, 7, 8],
        "edges": [
            {"u": 1, "v": 2, "w": 1.0},
            {"u": 1, "v": 3, "w": 1.0},
            {"u": 1, "v": 4, "w": 1.0},
            {"u": 2, "v": 3, "w": 1.0},
            {"u": 2, "v": 4, "w": 1.0},
            {"u": 3, "v": 4, "w": 1.0},
            {"u": 3, "v": 5, "w": 1.0},
            {"u": 4, "v": 5, "w": 1.0},
            {"u": 5, "v": 6, "w": 1.0},
            {"u": 5, "v": 7, "w": 1.0},
            {"u": 5, "v": 8, "w": 1.0},
            {"u": 6, "v": 7, "w": 1.0},
            {"u": 6, "v": 8, "w": 1.0},
            {"u": 7, "v": 8, "w": 1.0},
        ],
    }))
    .expect("fixture serialization cannot fail");
    text.push('\n');
    text
}

/// Filtration for the dumbbell in canonical edge order: the clique edges
/// spread low, the two bridge edges nearly tie at the top, forming the thin
/// high-curvature cycle the surgery is meant to cut.
pub fn dumbbell_edge_values() -> Vec<f64> {
    vec![
        1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 9.99, 10.0, 1.6, 1.7, 1.8, 1.9, 2.0, 2.1,
    ]
}
