//! Fusing class posteriors and aligning labeled point maps.

use nalgebra::{DMatrix, DVector};

use super::SemanticsError;

/// Normalized geometric mean of two class posteriors.
///
/// The product of independent evidence: `p_k ~ sqrt(a_k b_k)`, renormalized.
/// Inputs may be unnormalized but must be nonnegative with positive sum;
/// disjoint supports leave nothing to normalize and are an error.
pub fn fuse_class_posteriors(
    a: &DVector<f64>,
    b: &DVector<f64>,
) -> Result<DVector<f64>, SemanticsError> {
    if a.len() != b.len() {
        return Err(SemanticsError::PosteriorLength(a.len(), b.len()));
    }
    let valid = |p: &DVector<f64>| {
        p.iter().all(|v| v.is_finite() && *v >= 0.0) && p.iter().sum::<f64>() > 0.0
    };
    if !valid(a) || !valid(b) {
        return Err(SemanticsError::BadPosterior);
    }
    let mut fused = DVector::from_iterator(a.len(), a.iter().zip(b.iter()).map(|(x, y)| (x * y).sqrt()));
    let total: f64 = fused.iter().sum();
    if total <= 0.0 {
        return Err(SemanticsError::DisjointSupport);
    }
    fused /= total;
    Ok(fused)
}

/// A set of labeled points in a common frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticMap {
    positions: Vec<DVector<f64>>,
    labels: Vec<u64>,
}

impl SemanticMap {
    pub fn new(positions: Vec<DVector<f64>>, labels: Vec<u64>) -> Result<Self, SemanticsError> {
        if positions.len() != labels.len() {
            return Err(SemanticsError::MapLabelCount {
                positions: positions.len(),
                labels: labels.len(),
            });
        }
        if let Some(first) = positions.first() {
            let d = first.len();
            for p in &positions {
                if p.len() != d {
                    return Err(SemanticsError::MapDimension(d, p.len()));
                }
                if p.iter().any(|v| !v.is_finite()) {
                    return Err(SemanticsError::NonFinite);
                }
            }
        }
        Ok(Self { positions, labels })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.positions.first().map_or(0, |p| p.len())
    }

    pub fn positions(&self) -> &[DVector<f64>] {
        &self.positions
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FusionOptions {
    /// Correspondence radius: a point of `b` may only match a point of `a`
    /// within this distance after the current alignment.
    pub epsilon: f64,
    /// Cost added to the objective per label-mismatched correspondence.
    pub lambda: f64,
    /// Exclude label-mismatched pairs from correspondence entirely.
    pub strict: bool,
    pub max_rounds: usize,
}

impl Default for FusionOptions {
    fn default() -> Self {
        Self {
            epsilon: 0.5,
            lambda: 1.0,
            strict: false,
            max_rounds: 50,
        }
    }
}

/// A rigid alignment of map `b` onto map `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapFusion {
    /// Orthogonal with determinant +1.
    pub rotation: DMatrix<f64>,
    pub translation: DVector<f64>,
    /// Pairs `(index in a, index in b)`.
    pub correspondences: Vec<(usize, usize)>,
    /// Root-mean-square position error over the correspondences.
    pub rmsd: f64,
    /// Sum of squared errors plus `lambda` per label mismatch.
    pub objective: f64,
    pub rounds: usize,
    /// False when correspondences were still changing at `max_rounds`.
    pub converged: bool,
}

/// Aligns `b` onto `a` by alternating nearest-neighbor correspondence and
/// best rigid fit.
///
/// Correspondences pair each point of `b` with its nearest point of `a`
/// within `epsilon` (label mismatches excluded when `strict`); the rigid
/// fit is the classical SVD solution with the determinant guard that keeps
/// the rotation proper. Alternation stops when the correspondence set
/// repeats. Fewer than 3 correspondences or a degenerate (collinear)
/// configuration cannot pin down a rotation and are errors.
pub fn fuse_maps(
    a: &SemanticMap,
    b: &SemanticMap,
    options: &FusionOptions,
) -> Result<MapFusion, SemanticsError> {
    if a.dim() != b.dim() || a.dim() == 0 || a.is_empty() || b.is_empty() {
        return Err(SemanticsError::MapDimension(a.dim(), b.dim()));
    }
    if !(options.epsilon.is_finite() && options.epsilon > 0.0) {
        return Err(SemanticsError::BadParameter {
            name: "epsilon",
            value: options.epsilon,
        });
    }
    if !(options.lambda.is_finite() && options.lambda >= 0.0) {
        return Err(SemanticsError::BadParameter {
            name: "lambda",
            value: options.lambda,
        });
    }
    let d = a.dim();
    let mut rotation = DMatrix::identity(d, d);
    let mut translation = DVector::zeros(d);
    let mut correspondences: Vec<(usize, usize)> = Vec::new();
    let mut rounds = 0;
    let mut converged = false;

    for _ in 0..options.max_rounds.max(1) {
        rounds += 1;
        let mut next: Vec<(usize, usize)> = Vec::new();
        for (j, pb) in b.positions().iter().enumerate() {
            let moved = &rotation * pb + &translation;
            let mut best: Option<(usize, f64)> = None;
            for (i, pa) in a.positions().iter().enumerate() {
                if options.strict && a.labels()[i] != b.labels()[j] {
                    continue;
                }
                let dist = (pa - &moved).norm();
                if dist <= options.epsilon && best.map_or(true, |(_, bd)| dist < bd) {
                    best = Some((i, dist));
                }
            }
            if let Some((i, _)) = best {
                next.push((i, j));
            }
        }
        if next.len() < 3 {
            return Err(SemanticsError::InsufficientCorrespondences { got: next.len() });
        }
        let (r, t) = rigid_fit(a, b, &next)?;
        let stable = next == correspondences;
        rotation = r;
        translation = t;
        correspondences = next;
        if stable {
            converged = true;
            break;
        }
    }

    let mut sse = 0.0;
    let mut objective = 0.0;
    for &(i, j) in &correspondences {
        let err = (&rotation * &b.positions()[j] + &translation - &a.positions()[i])
            .norm_squared();
        sse += err;
        objective += err;
        if a.labels()[i] != b.labels()[j] {
            objective += options.lambda;
        }
    }
    Ok(MapFusion {
        rotation,
        translation,
        rmsd: (sse / correspondences.len() as f64).sqrt(),
        objective,
        correspondences,
        rounds,
        converged,
    })
}

/// Best proper rotation and translation mapping `b`-points onto `a`-points
/// over the given pairs.
fn rigid_fit(
    a: &SemanticMap,
    b: &SemanticMap,
    pairs: &[(usize, usize)],
) -> Result<(DMatrix<f64>, DVector<f64>), SemanticsError> {
    let d = a.dim();
    let n = pairs.len() as f64;
    let mut ca = DVector::zeros(d);
    let mut cb = DVector::zeros(d);
    for &(i, j) in pairs {
        ca += &a.positions()[i];
        cb += &b.positions()[j];
    }
    ca /= n;
    cb /= n;
    let mut h = DMatrix::zeros(d, d);
    for &(i, j) in pairs {
        let qa = &a.positions()[i] - &ca;
        let qb = &b.positions()[j] - &cb;
        h += qb * qa.transpose();
    }
    let svd = h.svd(true, true);
    let sing = &svd.singular_values;
    let max_sv = sing.max();
    // a unique rotation needs rank >= d-1
    let rank = sing.iter().filter(|s| **s > 1e-9 * max_sv).count();
    if rank < d - 1 || (d > 1 && max_sv <= 0.0) {
        return Err(SemanticsError::DegenerateCorrespondences);
    }
    let u = svd.u.as_ref().expect("requested");
    let vt = svd.v_t.as_ref().expect("requested");
    let mut r = vt.transpose() * u.transpose();
    if r.determinant() < 0.0 {
        // flip the weakest direction to stay in the rotation group
        let mut flip = DMatrix::identity(d, d);
        flip[(d - 1, d - 1)] = -1.0;
        r = vt.transpose() * flip * u.transpose();
    }
    let t = ca - &r * cb;
    Ok((r, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn posterior_fusion_example() {
        let fused = fuse_class_posteriors(
            &DVector::from_vec(vec![0.8, 0.2]),
            &DVector::from_vec(vec![0.5, 0.5]),
        )
        .unwrap();
        // sqrt(0.4) : sqrt(0.1) = 2 : 1 exactly
        assert_relative_eq!(fused[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(fused[1], 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn posterior_fusion_rejects_bad_inputs() {
        let p = DVector::from_vec(vec![0.5, 0.5]);
        assert!(matches!(
            fuse_class_posteriors(&p, &DVector::from_vec(vec![1.0])),
            Err(SemanticsError::PosteriorLength(2, 1))
        ));
        assert!(matches!(
            fuse_class_posteriors(&p, &DVector::from_vec(vec![-0.1, 1.1])),
            Err(SemanticsError::BadPosterior)
        ));
        assert!(matches!(
            fuse_class_posteriors(
                &DVector::from_vec(vec![1.0, 0.0]),
                &DVector::from_vec(vec![0.0, 1.0])
            ),
            Err(SemanticsError::DisjointSupport)
        ));
    }

    fn rotation2(theta: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(
            2,
            2,
            &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()],
        )
    }

    fn square_map(labels: &[u64]) -> SemanticMap {
        SemanticMap::new(
            vec![
                DVector::from_vec(vec![0.0, 0.0]),
                DVector::from_vec(vec![1.0, 0.0]),
                DVector::from_vec(vec![1.0, 1.0]),
                DVector::from_vec(vec![0.0, 1.0]),
            ],
            labels.to_vec(),
        )
        .unwrap()
    }

    /// Applies the inverse of (R, t) to a map: the fusion should recover
    /// (R, t) exactly.
    fn displaced(map: &SemanticMap, r: &DMatrix<f64>, t: &DVector<f64>) -> SemanticMap {
        let rt = r.transpose();
        SemanticMap::new(
            map.positions()
                .iter()
                .map(|p| &rt * (p - t))
                .collect(),
            map.labels().to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn recovers_known_rigid_motion() {
        let a = square_map(&[1, 2, 3, 4]);
        let r = rotation2(0.3);
        let t = DVector::from_vec(vec![0.5, -0.2]);
        let b = displaced(&a, &r, &t);
        let fusion = fuse_maps(&a, &b, &FusionOptions::default()).unwrap();
        assert!(fusion.converged);
        assert_relative_eq!(fusion.rotation, r, epsilon = 1e-9);
        assert_relative_eq!(fusion.translation, t, epsilon = 1e-9);
        assert!(fusion.rmsd <= 1e-9);
        assert_eq!(fusion.correspondences.len(), 4);
        assert_relative_eq!(fusion.rotation.determinant(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn strict_mode_drops_mismatched_labels() {
        let a = square_map(&[1, 2, 3, 4]);
        let b_labels = [1, 2, 3, 9]; // one label flipped
        let r = rotation2(0.1);
        let t = DVector::from_vec(vec![0.05, 0.0]);
        let mut b = displaced(&a, &r, &t);
        b = SemanticMap::new(b.positions().to_vec(), b_labels.to_vec()).unwrap();

        let strict = FusionOptions {
            strict: true,
            ..Default::default()
        };
        let fusion = fuse_maps(&a, &b, &strict).unwrap();
        assert_eq!(fusion.correspondences.len(), 3);
        assert!(fusion.objective <= 1e-12);

        let loose = fuse_maps(&a, &b, &FusionOptions::default()).unwrap();
        assert_eq!(loose.correspondences.len(), 4);
        // the mismatch costs exactly lambda on an otherwise exact fit
        assert_relative_eq!(loose.objective, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn too_few_or_degenerate_correspondences_fail() {
        let a = SemanticMap::new(
            vec![
                DVector::from_vec(vec![0.0, 0.0]),
                DVector::from_vec(vec![100.0, 0.0]),
                DVector::from_vec(vec![0.0, 100.0]),
            ],
            vec![1, 2, 3],
        )
        .unwrap();
        // only one point of b lands within epsilon of any a-point
        let b = SemanticMap::new(
            vec![
                DVector::from_vec(vec![0.1, 0.0]),
                DVector::from_vec(vec![50.0, 50.0]),
                DVector::from_vec(vec![-50.0, 3.0]),
            ],
            vec![1, 2, 3],
        )
        .unwrap();
        assert!(matches!(
            fuse_maps(&a, &b, &FusionOptions::default()),
            Err(SemanticsError::InsufficientCorrespondences { got: 1 })
        ));

        // coincident points leave the rotation undetermined
        let coincident = SemanticMap::new(
            vec![
                DVector::from_vec(vec![0.0, 0.0]),
                DVector::from_vec(vec![0.0, 0.0]),
                DVector::from_vec(vec![0.0, 0.0]),
            ],
            vec![1, 2, 3],
        )
        .unwrap();
        assert!(matches!(
            fuse_maps(&coincident, &coincident, &FusionOptions::default()),
            Err(SemanticsError::DegenerateCorrespondences)
        ));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = square_map(&[1, 2, 3, 4]);
        let b = SemanticMap::new(
            vec![DVector::from_vec(vec![0.0, 0.0, 0.0])],
            vec![1],
        )
        .unwrap();
        assert!(matches!(
            fuse_maps(&a, &b, &FusionOptions::default()),
            Err(SemanticsError::MapDimension(2, 3))
        ));
    }
}
