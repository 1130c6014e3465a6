//! Throughput benchmarks for the hot paths of the numerical core:
//! persistence diagrams, bottleneck matching, Forman curvature, the
//! constrained cochain solver, anchored connection solves, and margin
//! analysis. All inputs are generated from fixed seeds so runs compare
//! like with like.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use fabric_core::cochain::km_iterate;
use fabric_core::connection::solve_anchored;
use fabric_core::control::default_margin;
use fabric_core::graph::{edge_laplacian, fundamental_cycle_basis};
use fabric_core::topology::{
    bottleneck_distance, forman_ricci, persistence_diagram, Filtration,
};
use fabric_core::{
    AffineConstraint, ConnectionGraph, EnergySpec, GaugeAnchor, SolverConfig, WeightedGraph,
};

/// Random connected unit-weight graph: a uniform attachment tree on
/// vertices `1..=n` plus up to `chords` extra deduplicated edges.
fn random_graph(rng: &mut ChaCha12Rng, n: usize, chords: usize) -> WeightedGraph {
    let vertices: Vec<u64> = (1..=n as u64).collect();
    let mut edges: Vec<(u64, u64, f64)> = Vec::new();
    for v in 2..=n as u64 {
        let parent = rng.random_range(1..v);
        edges.push((parent, v, 1.0));
    }
    let mut tries = 0;
    let mut added = 0;
    while added < chords && tries < 20 * chords {
        tries += 1;
        let a = rng.random_range(1..=n as u64);
        let b = rng.random_range(1..=n as u64);
        if a == b {
            continue;
        }
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        if edges.iter().any(|&(x, y, _)| x == u && y == v) {
            continue;
        }
        edges.push((u, v, 1.0));
        added += 1;
    }
    WeightedGraph::new(&vertices, &edges).expect("tree plus chords is connected")
}

/// Random orthogonal matrix (QR of a Gaussian matrix, sign-fixed).
fn random_orthogonal(rng: &mut ChaCha12Rng, d: usize) -> DMatrix<f64> {
    let gauss = Normal::new(0.0, 1.0).unwrap();
    let a = DMatrix::from_fn(d, d, |_, _| gauss.sample(rng));
    let qr = a.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

fn bench_persistence(c: &mut Criterion) {
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    let g = random_graph(&mut rng, 60, 30);
    let values: Vec<f64> = (0..g.edge_count())
        .map(|_| rng.random_range(0.0..10.0))
        .collect();
    let f = Filtration::new(values.into()).unwrap();
    c.bench_function("persistence_diagram_dim0_60v", |bench| {
        bench.iter(|| persistence_diagram(black_box(&g), black_box(&f), 0).unwrap())
    });
    c.bench_function("persistence_diagram_dim1_60v", |bench| {
        bench.iter(|| persistence_diagram(black_box(&g), black_box(&f), 1).unwrap())
    });
}

fn bench_bottleneck(c: &mut Criterion) {
    let mut rng = ChaCha12Rng::seed_from_u64(12);
    let g = random_graph(&mut rng, 60, 30);
    let base: Vec<f64> = (0..g.edge_count())
        .map(|_| rng.random_range(0.0..10.0))
        .collect();
    let jitter = Normal::new(0.0, 0.2).unwrap();
    let moved: Vec<f64> = base
        .iter()
        .map(|v| (v + jitter.sample(&mut rng)).max(0.0))
        .collect();
    let da = persistence_diagram(&g, &Filtration::new(base.into()).unwrap(), 0).unwrap();
    let db = persistence_diagram(&g, &Filtration::new(moved.into()).unwrap(), 0).unwrap();
    c.bench_function("bottleneck_distance_60v", |bench| {
        bench.iter(|| bottleneck_distance(black_box(&da), black_box(&db)).unwrap())
    });
}

fn bench_forman(c: &mut Criterion) {
    let mut rng = ChaCha12Rng::seed_from_u64(13);
    let g = random_graph(&mut rng, 200, 100);
    c.bench_function("forman_ricci_200v", |bench| {
        bench.iter(|| forman_ricci(black_box(&g)))
    });
}

fn bench_km_iterate(c: &mut Criterion) {
    let mut rng = ChaCha12Rng::seed_from_u64(14);
    let g = random_graph(&mut rng, 12, 6);
    let m = g.edge_count();
    let basis = fundamental_cycle_basis(&g);
    let t = DVector::from_fn(basis.cycle_count(), |_, _| rng.random_range(-0.5..0.5));
    let constraint = AffineConstraint::new(basis.rows.clone(), t).unwrap();
    let eigs: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..3.0)).collect();
    let u = random_orthogonal(&mut rng, m);
    let lam = DMatrix::from_diagonal(&DVector::from_row_slice(&eigs));
    let q = &u * lam * u.transpose();
    let b = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
    let e = EnergySpec::quadratic(q, b).unwrap();
    let l1 = edge_laplacian(&g);
    let x0 = DVector::from_fn(m, |_, _| rng.random_range(-2.0..2.0));
    let config = SolverConfig::default();
    c.bench_function("km_iterate_12v", |bench| {
        bench.iter(|| {
            km_iterate(
                black_box(&e),
                black_box(&l1),
                black_box(&constraint),
                black_box(&x0),
                &config,
            )
            .unwrap()
        })
    });
}

fn bench_solve_anchored(c: &mut Criterion) {
    let mut rng = ChaCha12Rng::seed_from_u64(15);
    let d = 3;
    let g = random_graph(&mut rng, 40, 20);
    let entries: Vec<((u64, u64), DMatrix<f64>)> = g
        .edges()
        .iter()
        .map(|e| ((e.u, e.v), random_orthogonal(&mut rng, d)))
        .collect();
    let cg = ConnectionGraph::with_transforms(g, d, &entries).unwrap();
    let nd = 40 * d;
    let b = DVector::from_fn(nd, |_, _| rng.random_range(-1.0..1.0));
    let anchor_vertex = cg.base().vertices()[0];
    let values = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
    let anchor = GaugeAnchor::pin(anchor_vertex, values);
    c.bench_function("solve_anchored_40v_d3", |bench| {
        bench.iter(|| solve_anchored(black_box(&cg), black_box(&b), black_box(&anchor)).unwrap())
    });
}

fn bench_margin(c: &mut Criterion) {
    c.bench_function("default_margin_delay_20ms", |bench| {
        bench.iter(|| default_margin(black_box(0.02)))
    });
}

criterion_group!(
    benches,
    bench_persistence,
    bench_bottleneck,
    bench_forman,
    bench_km_iterate,
    bench_solve_anchored,
    bench_margin
);
criterion_main!(benches);
