//! Affine-constrained energy minimization over edge cochains.
//!
//! The central iteration is a projected gradient map: one gradient step on a
//! smooth energy plus an edge-Laplacian coupling term, followed by exact
//! projection onto an affine constraint set `{x : Cx = t}`. With step size
//! inside `(0, 2/(L + |L1|))` the map is averaged and converges linearly for
//! strongly convex energies. A nonsmooth exact-penalty solver and a
//! lexicographic (sequential sublevel) solver cover the cases where the
//! constraint cannot or should not be enforced exactly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Error)]
pub enum CochainError {
    #[error(
        "constraint matrix is rank deficient (rank {rank} of {rows} rows); \
         the system is {}...use the exact-penalty solver for inconsistent constraints",
        if *consistent { "consistent, drop redundant rows" } else { "inconsistent" }
    )]
    RankDeficient {
        rank: usize,
        rows: usize,
        consistent: bool,
    },
    #[error("constraint expects dimension {expected}, got {got}")]
    ConstraintDim { expected: usize, got: usize },
    #[error("smoothness/convexity must satisfy 0 <= mu <= L with finite values, got mu={mu}, L={l}")]
    BadCurvature { mu: f64, l: f64 },
    #[error("gradient disagrees with finite differences of the value (max error {max_err:.3e} at probe {probe})")]
    GradientMismatch { probe: usize, max_err: f64 },
    #[error("step size {eta} outside admissible interval (0, {max})")]
    StepOutOfRange { eta: f64, max: f64 },
    #[error("dimension mismatch: energy dimension {energy}, operand dimension {got}")]
    DimensionMismatch { energy: usize, got: usize },
    #[error("coupling matrix must be {expected}x{expected}, got {rows}x{cols}")]
    CouplingShape {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("penalty weight must be positive and finite, got {0}")]
    BadPenalty(f64),
    #[error("solver failed to reach a stationary point (last residual {residual:.3e})")]
    NoStationaryPoint { residual: f64 },
    #[error("lexicographic stage {level} failed: {reason}")]
    LexicographicStage { level: usize, reason: String },
    #[error("numeric failure: {0}")]
    Numeric(#[from] linalg::LinalgError),
}

/// Affine constraint set `{x : Cx = t}` with `C` of full row rank.
///
/// Rank deficiency is rejected at construction; the error reports whether the
/// rows were at least consistent so callers can decide between dropping
/// redundant rows and switching to the exact-penalty path.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineConstraint {
    matrix: DMatrix<f64>,
    target: DVector<f64>,
}

impl AffineConstraint {
    pub fn new(matrix: DMatrix<f64>, target: DVector<f64>) -> Result<Self, CochainError> {
        assert_eq!(
            matrix.nrows(),
            target.len(),
            "constraint target length must match row count"
        );
        let rows = matrix.nrows();
        if rows > 0 {
            let rank = linalg::rank(&matrix);
            if rank < rows {
                // least-squares consistency: the minimum residual of Cx = t
                // is zero exactly when the system is solvable
                let svd = matrix.clone().svd(true, true);
                let x = svd
                    .solve(&target, linalg::RANK_TOL)
                    .unwrap_or_else(|_| DVector::zeros(matrix.ncols()));
                let residual = (&matrix * x - &target).norm();
                let scale = target.norm().max(1.0);
                return Err(CochainError::RankDeficient {
                    rank,
                    rows,
                    consistent: residual <= 1e-9 * scale,
                });
            }
        }
        Ok(Self { matrix, target })
    }

    /// The empty constraint over dimension `dim`; projection is the identity.
    pub fn unconstrained(dim: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(0, dim),
            target: DVector::zeros(0),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    /// Euclidean residual `|Cx - t|`.
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            (&self.matrix * x - &self.target).norm()
        }
    }

    /// Orthogonal projection onto the constraint set:
    /// `x - C^T (C C^T)^{-1} (Cx - t)`.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>, CochainError> {
        if x.len() != self.dim() {
            return Err(CochainError::ConstraintDim {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if self.is_empty() {
            return Ok(x.clone());
        }
        let gram = &self.matrix * self.matrix.transpose();
        let rhs = &self.matrix * x - &self.target;
        let y = linalg::solve_spd(&gram, &rhs)?;
        Ok(x - self.matrix.transpose() * y)
    }
}

/// Orthogonal projection onto an affine constraint set.
pub fn project_onto_constraints(
    x: &DVector<f64>,
    constraint: &AffineConstraint,
) -> Result<DVector<f64>, CochainError> {
    constraint.project(x)
}

type ValueFn = Box<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
type GradientFn = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

/// A smooth energy with known smoothness and strong-convexity constants.
///
/// Construction cross-checks the gradient against central finite differences
/// of the value on a few deterministic probe points, so a mistyped gradient
/// fails fast instead of silently degrading convergence.
pub struct EnergySpec {
    dim: usize,
    value: ValueFn,
    gradient: GradientFn,
    smoothness: f64,
    strong_convexity: f64,
}

impl EnergySpec {
    pub fn new(
        dim: usize,
        value: ValueFn,
        gradient: GradientFn,
        smoothness: f64,
        strong_convexity: f64,
    ) -> Result<Self, CochainError> {
        if !(smoothness.is_finite()
            && strong_convexity.is_finite()
            && strong_convexity >= 0.0
            && strong_convexity <= smoothness)
        {
            return Err(CochainError::BadCurvature {
                mu: strong_convexity,
                l: smoothness,
            });
        }
        let spec = Self {
            dim,
            value,
            gradient,
            smoothness,
            strong_convexity,
        };
        spec.check_gradient()?;
        Ok(spec)
    }

    /// Quadratic energy `x^T Q x / 2 + b^T x` with constants from the
    /// spectrum of `Q` (which must be symmetric PSD).
    pub fn quadratic(q: DMatrix<f64>, b: DVector<f64>) -> Result<Self, CochainError> {
        let dim = q.nrows();
        assert_eq!(dim, q.ncols(), "quadratic form must be square");
        assert_eq!(dim, b.len(), "linear term length must match");
        let vals = linalg::sym_eigenvalues(&q);
        let mu = vals[0].max(0.0);
        let l = vals[vals.len() - 1].max(0.0);
        let q2 = q.clone();
        let b2 = b.clone();
        Self::new(
            dim,
            Box::new(move |x| 0.5 * (x.transpose() * &q * x)[(0, 0)] + b.dot(x)),
            Box::new(move |x| &q2 * x + &b2),
            l,
            mu,
        )
    }

    /// The zero energy (used when only coupling and constraints matter).
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            value: Box::new(|_| 0.0),
            gradient: Box::new(|x| DVector::zeros(x.len())),
            smoothness: 0.0,
            strong_convexity: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.gradient)(x)
    }

    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    pub fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }

    /// Central-difference gradient check on three deterministic probes.
    fn check_gradient(&self) -> Result<(), CochainError> {
        for probe in 0..3 {
            let x = probe_point(self.dim, probe);
            let g = self.gradient(&x);
            if g.len() != self.dim {
                return Err(CochainError::DimensionMismatch {
                    energy: self.dim,
                    got: g.len(),
                });
            }
            let mut max_err = 0.0f64;
            let mut scale = 1.0f64;
            for i in 0..self.dim {
                let h = 1e-6 * (1.0 + x[i].abs());
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (self.value(&xp) - self.value(&xm)) / (2.0 * h);
                max_err = max_err.max((fd - g[i]).abs());
                scale = scale.max(g[i].abs());
            }
            if max_err > 1e-5 * scale {
                return Err(CochainError::GradientMismatch { probe, max_err });
            }
        }
        Ok(())
    }

    /// Finite-difference Hessian from the gradient, symmetrized.
    fn fd_hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim;
        let mut h = DMatrix::zeros(n, n);
        for j in 0..n {
            let step = 1e-6 * (1.0 + x[j].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += step;
            xm[j] -= step;
            let col = (self.gradient(&xp) - self.gradient(&xm)) / (2.0 * step);
            h.set_column(j, &col);
        }
        (&h + h.transpose()) * 0.5
    }
}

impl std::fmt::Debug for EnergySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EnergySpec")
            .field("dim", &self.dim)
            .field("smoothness", &self.smoothness)
            .field("strong_convexity", &self.strong_convexity)
            .finish()
    }
}

/// Deterministic pseudo-random probe in `[-1, 1]^dim`.
fn probe_point(dim: usize, probe: usize) -> DVector<f64> {
    DVector::from_iterator(
        dim,
        (0..dim).map(|i| {
            let t = ((probe * 31 + i * 17 + 1) as f64 * 12.9898).sin() * 43758.5453;
            2.0 * (t - t.floor()) - 1.0
        }),
    )
}

/// Solver knobs shared by the iterative routines.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Step size; `None` picks `1 / (L + |L1|)`.
    pub eta: Option<f64>,
    /// Stop when the iterate moves less than this between steps.
    pub tol: f64,
    pub k_max: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eta: None,
            tol: 1e-9,
            k_max: 10_000,
        }
    }
}

/// Trace of a projected-gradient run.
#[derive(Debug, Clone)]
pub struct IterationReport {
    /// Every iterate including the start point.
    pub iterates: Vec<DVector<f64>>,
    /// Distance of each iterate to the final one.
    pub distances: Vec<f64>,
    /// Constraint residual of each iterate after projection.
    pub constraint_residuals: Vec<f64>,
    /// Largest observed ratio of successive distances to the final iterate,
    /// ignoring steps already at numerical noise level.
    pub contraction_estimate: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_value: f64,
}

/// Total energy `E(x) + x^T L1 x / 2`.
pub fn consensus_energy(e: &EnergySpec, l1: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    e.value(x) + 0.5 * (x.transpose() * l1 * x)[(0, 0)]
}

fn consensus_gradient(e: &EnergySpec, l1: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    e.gradient(x) + l1 * x
}

/// Projected gradient iteration on `E(x) + x^T L1 x / 2` over `{Cx = t}`.
///
/// The step size must lie in `(0, 2/(L + |L1|))`; the default is the middle
/// of the classical range, `1/(L + |L1|)`. Iterates after the first are
/// feasible to working precision. Non-convergence within `k_max` is not an
/// error: the report says `converged: false` and carries the full history.
pub fn km_iterate(
    e: &EnergySpec,
    l1: &DMatrix<f64>,
    constraint: &AffineConstraint,
    x0: &DVector<f64>,
    config: &SolverConfig,
) -> Result<(DVector<f64>, IterationReport), CochainError> {
    let m = e.dim();
    if l1.nrows() != m || l1.ncols() != m {
        return Err(CochainError::CouplingShape {
            expected: m,
            rows: l1.nrows(),
            cols: l1.ncols(),
        });
    }
    if x0.len() != m {
        return Err(CochainError::DimensionMismatch {
            energy: m,
            got: x0.len(),
        });
    }
    if !constraint.is_empty() && constraint.dim() != m {
        return Err(CochainError::ConstraintDim {
            expected: m,
            got: constraint.dim(),
        });
    }

    let lipschitz = e.smoothness() + linalg::sym_spectral_norm(l1);
    let eta_max = if lipschitz > 0.0 {
        2.0 / lipschitz
    } else {
        f64::INFINITY
    };
    let eta = config
        .eta
        .unwrap_or(if lipschitz > 0.0 { 1.0 / lipschitz } else { 1.0 });
    if !(eta.is_finite() && eta > 0.0 && eta < eta_max) {
        return Err(CochainError::StepOutOfRange { eta, max: eta_max });
    }

    let mut iterates = vec![x0.clone()];
    let mut x = x0.clone();
    let mut converged = false;
    for _ in 0..config.k_max {
        let step = &x - consensus_gradient(e, l1, &x) * eta;
        let next = constraint.project(&step)?;
        let moved = (&next - &x).norm();
        x = next;
        iterates.push(x.clone());
        if moved <= config.tol {
            converged = true;
            break;
        }
    }

    let last = iterates.last().expect("at least the start point").clone();
    let distances: Vec<f64> = iterates.iter().map(|p| (p - &last).norm()).collect();
    let floor = (1e-9 * distances[0]).max(1e-13);
    let mut contraction: Option<f64> = None;
    for w in distances.windows(2) {
        if w[0] > floor && w[1] > floor {
            let r = w[1] / w[0];
            contraction = Some(contraction.map_or(r, |c: f64| c.max(r)));
        }
    }
    let residuals: Vec<f64> = iterates.iter().map(|p| constraint.residual(p)).collect();
    let report = IterationReport {
        iterations: iterates.len() - 1,
        distances,
        constraint_residuals: residuals,
        contraction_estimate: contraction,
        converged,
        final_value: consensus_energy(e, l1, &last),
        iterates,
    };
    Ok((x, report))
}

/// Newton iteration on the KKT system of `min E(x) s.t. Cx = t`.
///
/// Returns the stationary point and the multiplier vector. The Hessian is
/// rebuilt from gradient differences each step, so the energy only needs a
/// first-order interface.
fn constrained_stationary(
    e: &EnergySpec,
    constraint: &AffineConstraint,
) -> Result<(DVector<f64>, DVector<f64>), CochainError> {
    let m = e.dim();
    let q = constraint.rows();
    let mut x = constraint.project(&DVector::zeros(m))?;
    let mut lambda = DVector::zeros(q);
    let mut last_residual = f64::INFINITY;
    for _ in 0..60 {
        let grad = e.gradient(&x);
        let stat = &grad
            + if q > 0 {
                constraint.matrix().transpose() * &lambda
            } else {
                DVector::zeros(m)
            };
        let feas = if q > 0 {
            constraint.matrix() * &x - constraint.target()
        } else {
            DVector::zeros(0)
        };
        last_residual = stat.norm().max(feas.norm());
        let scale = 1.0 + grad.norm();
        if last_residual <= 1e-12 * scale {
            return Ok((x, lambda));
        }
        let h = e.fd_hessian(&x);
        let mut kkt = DMatrix::zeros(m + q, m + q);
        kkt.view_mut((0, 0), (m, m)).copy_from(&h);
        if q > 0 {
            kkt.view_mut((0, m), (m, q))
                .copy_from(&constraint.matrix().transpose());
            kkt.view_mut((m, 0), (q, m)).copy_from(constraint.matrix());
        }
        let mut rhs = DVector::zeros(m + q);
        rhs.rows_mut(0, m).copy_from(&(-&stat));
        rhs.rows_mut(m, q).copy_from(&(-&feas));
        let delta = linalg::solve_full_piv(&kkt, &rhs)?;
        x += delta.rows(0, m).clone_owned();
        lambda += delta.rows(m, q).clone_owned();
    }
    // quadratic energies converge in one step; only accept slow convergence
    // if the residual actually became small
    let grad = e.gradient(&x);
    let stat = &grad
        + if q > 0 {
            constraint.matrix().transpose() * &lambda
        } else {
            DVector::zeros(m)
        };
    let feas = if q > 0 {
        constraint.matrix() * &x - constraint.target()
    } else {
        DVector::zeros(0)
    };
    let resid = stat.norm().max(feas.norm());
    if resid <= 1e-8 * (1.0 + grad.norm()) {
        Ok((x, lambda))
    } else {
        Err(CochainError::NoStationaryPoint {
            residual: last_residual,
        })
    }
}

/// Penalty weight above which the exact-penalty minimizer is feasible,
/// estimated as twice the multiplier norm of one constrained solve.
pub fn estimate_penalty_threshold(
    e: &EnergySpec,
    constraint: &AffineConstraint,
) -> Result<f64, CochainError> {
    let (_, lambda) = constrained_stationary(e, constraint)?;
    Ok(2.0 * lambda.norm())
}

/// Outcome of an exact-penalty minimization.
#[derive(Debug, Clone)]
pub struct PenaltyReport {
    pub iterations: usize,
    pub final_residual: f64,
    /// Residual within 1e-6: the penalty weight was at or above threshold.
    pub feasible: bool,
    pub objective: f64,
}

/// Minimizes the exact-penalty objective `E(x) + rho * |Cx - t|`.
///
/// A diminishing-step subgradient phase localizes the solution; a graduated
/// smoothing phase (replacing `|r|` by `sqrt(|r|^2 + eps^2)` with shrinking
/// `eps`, each stage solved by damped Newton) then polishes it to working
/// precision, which plain subgradient steps cannot reach in bounded time.
/// Below the exact-penalty threshold the minimizer is infeasible; that is
/// reported, not an error.
pub fn exact_penalty_solve(
    e: &EnergySpec,
    constraint: &AffineConstraint,
    rho: f64,
    x0: &DVector<f64>,
) -> Result<(DVector<f64>, PenaltyReport), CochainError> {
    let m = e.dim();
    if !(rho.is_finite() && rho > 0.0) {
        return Err(CochainError::BadPenalty(rho));
    }
    if x0.len() != m {
        return Err(CochainError::DimensionMismatch {
            energy: m,
            got: x0.len(),
        });
    }
    if !constraint.is_empty() && constraint.dim() != m {
        return Err(CochainError::ConstraintDim {
            expected: m,
            got: constraint.dim(),
        });
    }

    let c = constraint.matrix();
    let t = constraint.target();
    let c_norm = if constraint.is_empty() {
        0.0
    } else {
        linalg::spectral_norm(c)
    };
    let mut x = x0.clone();
    let mut total_iters = 0usize;

    // phase 1: subgradient descent with diminishing steps
    let s0 = 1.0 / (e.smoothness() + rho * c_norm + 1.0);
    for k in 1..=400usize {
        let r = c * &x - t;
        let rn = r.norm();
        let sub = if rn > 0.0 {
            e.gradient(&x) + c.transpose() * r * (rho / rn)
        } else {
            e.gradient(&x)
        };
        x -= sub * (s0 / (k as f64).sqrt());
        total_iters += 1;
    }

    // phase 2: graduated smoothing with damped Newton per stage
    let mut eps = 1e-2;
    while eps >= 1e-15 {
        for _ in 0..40 {
            let r = c * &x - t;
            let s = (r.norm_squared() + eps * eps).sqrt();
            let grad = e.gradient(&x) + c.transpose() * &r * (rho / s);
            if grad.norm() <= 1e-13 * (1.0 + rho) {
                break;
            }
            let mut hess = e.fd_hessian(&x) + c.transpose() * c * (rho / s);
            if r.norm() > 0.0 {
                let cr = c.transpose() * &r;
                hess -= &cr * cr.transpose() * (rho / (s * s * s));
            }
            // regularize so the direction stays a descent direction
            for i in 0..m {
                hess[(i, i)] += 1e-12 + e.strong_convexity() * 1e-9;
            }
            let step = match linalg::solve_full_piv(&hess, &grad) {
                Ok(d) => d,
                Err(_) => grad.clone() * (1.0 / (e.smoothness() + rho * c_norm + 1.0)),
            };
            let value = |y: &DVector<f64>| {
                e.value(y) + rho * ((c * y - t).norm_squared() + eps * eps).sqrt()
            };
            let f0 = value(&x);
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..50 {
                let cand = &x - &step * alpha;
                if value(&cand) <= f0 - 1e-4 * alpha * grad.dot(&step) {
                    x = cand;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            total_iters += 1;
            if !accepted {
                break;
            }
        }
        eps *= 1e-2;
    }

    let final_residual = constraint.residual(&x);
    let report = PenaltyReport {
        iterations: total_iters,
        final_residual,
        feasible: final_residual <= 1e-6,
        objective: e.value(&x) + rho * final_residual,
    };
    Ok((x, report))
}

/// Tolerance by which each optimized level may exceed its optimum when the
/// next level is minimized over the near-argmin set.
pub const LEX_TOLERANCE: f64 = 1e-8;

/// Sequentially minimizes a hierarchy of energies over `{Cx = t}`.
///
/// Level `i` is minimized subject to every earlier level staying within
/// [`LEX_TOLERANCE`] of its achieved optimum, enforced through an escalating
/// squared-hinge penalty. Returns the final point and the attained value of
/// each level.
pub fn lexicographic_solve(
    levels: &[EnergySpec],
    constraint: &AffineConstraint,
    x0: &DVector<f64>,
) -> Result<(DVector<f64>, Vec<f64>), CochainError> {
    assert!(!levels.is_empty(), "at least one level is required");
    let m = levels[0].dim();
    for lv in levels {
        if lv.dim() != m {
            return Err(CochainError::DimensionMismatch {
                energy: m,
                got: lv.dim(),
            });
        }
    }
    if x0.len() != m {
        return Err(CochainError::DimensionMismatch {
            energy: m,
            got: x0.len(),
        });
    }

    let mut x = constraint.project(x0)?;
    let mut achieved: Vec<f64> = Vec::with_capacity(levels.len());

    for (i, level) in levels.iter().enumerate() {
        let caps: Vec<f64> = achieved.iter().map(|v| v + LEX_TOLERANCE).collect();
        let mut beta = 1e2;
        let mut solved = false;
        while beta <= 1e12 {
            let objective = |y: &DVector<f64>| {
                let mut v = level.value(y);
                for (j, cap) in caps.iter().enumerate() {
                    let over = (levels[j].value(y) - cap).max(0.0);
                    v += beta * over * over;
                }
                v
            };
            let grad = |y: &DVector<f64>| {
                let mut g = level.gradient(y);
                for (j, cap) in caps.iter().enumerate() {
                    let over = (levels[j].value(y) - cap).max(0.0);
                    if over > 0.0 {
                        g += levels[j].gradient(y) * (2.0 * beta * over);
                    }
                }
                g
            };
            x = projected_descent(&objective, &grad, constraint, &x, 4000, 1e-12)?;
            let worst_over = caps
                .iter()
                .enumerate()
                .map(|(j, cap)| (levels[j].value(&x) - cap).max(0.0))
                .fold(0.0f64, f64::max);
            let cap_scale = 1.0 + caps.iter().fold(0.0f64, |a, c| a.max(c.abs()));
            if worst_over <= LEX_TOLERANCE * cap_scale {
                solved = true;
                break;
            }
            beta *= 100.0;
        }
        if !solved {
            return Err(CochainError::LexicographicStage {
                level: i,
                reason: "sublevel constraints could not be met within penalty budget".into(),
            });
        }
        achieved.push(level.value(&x));
    }
    Ok((x, achieved))
}

/// Backtracking projected gradient descent on a black-box objective.
fn projected_descent(
    objective: &dyn Fn(&DVector<f64>) -> f64,
    gradient: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    constraint: &AffineConstraint,
    x0: &DVector<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<DVector<f64>, CochainError> {
    let mut x = constraint.project(x0)?;
    let mut step = 1.0;
    for _ in 0..max_iter {
        let g = gradient(&x);
        let f0 = objective(&x);
        let mut moved = 0.0;
        let mut improved = false;
        for _ in 0..60 {
            let cand = constraint.project(&(&x - &g * step))?;
            let fc = objective(&cand);
            if fc <= f0 - 1e-4 * (&cand - &x).norm_squared() / step.max(1e-300) {
                moved = (&cand - &x).norm();
                x = cand;
                improved = true;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
        if !improved || moved <= tol {
            break;
        }
    }
    Ok(x)
}
