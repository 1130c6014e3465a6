//! Exact bottleneck distance between persistence diagrams.

use crate::topology::{PersistenceDiagram, TopologyError};

/// Bottleneck distance between two diagrams of the same dimension.
///
/// Finite points may match each other (cost `max(|b-b'|, |d-d'|)`) or the
/// diagonal (cost `(d-b)/2`); essential points must match essential points,
/// paired in sorted birth order. Diagrams whose essential counts differ are
/// at infinite distance. The finite part is solved exactly: the optimum is
/// one of the finitely many pairwise or diagonal costs, found by binary
/// search over that candidate set with a matching feasibility test.
pub fn bottleneck_distance(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
) -> Result<f64, TopologyError> {
    if a.dim != b.dim {
        return Err(TopologyError::DimensionMismatch(a.dim, b.dim));
    }

    let mut ea = a.essential_births();
    let mut eb = b.essential_births();
    if ea.len() != eb.len() {
        return Ok(f64::INFINITY);
    }
    ea.sort_by(|x, y| x.total_cmp(y));
    eb.sort_by(|x, y| x.total_cmp(y));
    let essential_cost = ea
        .iter()
        .zip(&eb)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));

    let p: Vec<(f64, f64)> = a
        .finite_points()
        .map(|pt| (pt.birth, pt.death.expect("finite")))
        .collect();
    let q: Vec<(f64, f64)> = b
        .finite_points()
        .map(|pt| (pt.birth, pt.death.expect("finite")))
        .collect();
    Ok(essential_cost.max(finite_bottleneck(&p, &q)))
}

fn pair_cost(x: (f64, f64), y: (f64, f64)) -> f64 {
    (x.0 - y.0).abs().max((x.1 - y.1).abs())
}

fn diag_cost(x: (f64, f64)) -> f64 {
    (x.1 - x.0) / 2.0
}

fn finite_bottleneck(p: &[(f64, f64)], q: &[(f64, f64)]) -> f64 {
    if p.is_empty() && q.is_empty() {
        return 0.0;
    }
    let mut candidates = vec![0.0f64];
    for &x in p {
        candidates.push(diag_cost(x));
        for &y in q {
            candidates.push(pair_cost(x, y));
        }
    }
    for &y in q {
        candidates.push(diag_cost(y));
    }
    candidates.sort_by(|x, y| x.total_cmp(y));
    candidates.dedup();

    // matching everything to the diagonal is feasible, so the largest
    // candidate always admits a perfect matching
    let mut lo = 0usize;
    let mut hi = candidates.len() - 1;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(p, q, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

/// Perfect-matching feasibility at threshold `lam`.
///
/// Left side: the points of `p` followed by one diagonal slot per point of
/// `q`; right side: the points of `q` followed by one diagonal slot per point
/// of `p`. Diagonal slots match each other freely.
fn feasible(p: &[(f64, f64)], q: &[(f64, f64)], lam: f64) -> bool {
    let n1 = p.len();
    let n2 = q.len();
    let total = n1 + n2;
    let admissible = |left: usize, right: usize| -> bool {
        match (left < n1, right < n2) {
            (true, true) => pair_cost(p[left], q[right]) <= lam,
            (true, false) => diag_cost(p[left]) <= lam,
            (false, true) => diag_cost(q[right]) <= lam,
            (false, false) => true,
        }
    };

    let mut match_right: Vec<Option<usize>> = vec![None; total];
    fn augment(
        left: usize,
        total: usize,
        admissible: &dyn Fn(usize, usize) -> bool,
        match_right: &mut [Option<usize>],
        visited: &mut [bool],
    ) -> bool {
        for right in 0..total {
            if visited[right] || !admissible(left, right) {
                continue;
            }
            visited[right] = true;
            let free = match match_right[right] {
                None => true,
                Some(prev) => augment(prev, total, admissible, match_right, visited),
            };
            if free {
                match_right[right] = Some(left);
                return true;
            }
        }
        false
    }

    for left in 0..total {
        let mut visited = vec![false; total];
        if !augment(left, total, &admissible, &mut match_right, &mut visited) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::PersistencePoint;
    use approx::assert_relative_eq;

    fn finite_diagram(dim: usize, pts: &[(f64, f64)]) -> PersistenceDiagram {
        PersistenceDiagram::new(
            dim,
            pts.iter()
                .map(|&(b, d)| PersistencePoint {
                    birth: b,
                    death: Some(d),
                })
                .collect(),
        )
    }

    fn essential_diagram(dim: usize, births: &[f64]) -> PersistenceDiagram {
        PersistenceDiagram::new(
            dim,
            births
                .iter()
                .map(|&b| PersistencePoint {
                    birth: b,
                    death: None,
                })
                .collect(),
        )
    }

    /// Brute-force bottleneck for small diagrams: enumerate every assignment
    /// of `p` points to distinct `q` points or the diagonal; unassigned `q`
    /// points go to the diagonal.
    fn oracle(p: &[(f64, f64)], q: &[(f64, f64)]) -> f64 {
        fn rec(p: &[(f64, f64)], q: &[(f64, f64)], i: usize, used: &mut Vec<bool>) -> f64 {
            if i == p.len() {
                let mut worst = 0.0f64;
                for (j, &y) in q.iter().enumerate() {
                    if !used[j] {
                        worst = worst.max(diag_cost(y));
                    }
                }
                return worst;
            }
            let mut best = rec(p, q, i + 1, used).max(diag_cost(p[i]));
            for j in 0..q.len() {
                if used[j] {
                    continue;
                }
                used[j] = true;
                let rest = rec(p, q, i + 1, used).max(pair_cost(p[i], q[j]));
                used[j] = false;
                best = best.min(rest);
            }
            best
        }
        let mut used = vec![false; q.len()];
        rec(p, q, 0, &mut used)
    }

    #[test]
    fn identical_diagrams_at_distance_zero() {
        let d = finite_diagram(0, &[(0.0, 1.0), (0.5, 3.0)]);
        assert_relative_eq!(bottleneck_distance(&d, &d).unwrap(), 0.0);
    }

    #[test]
    fn single_point_shift() {
        let a = finite_diagram(0, &[(0.0, 2.0)]);
        let b = finite_diagram(0, &[(0.0, 2.5)]);
        assert_relative_eq!(bottleneck_distance(&a, &b).unwrap(), 0.5);
    }

    #[test]
    fn point_against_empty_goes_diagonal() {
        let a = finite_diagram(0, &[(0.0, 2.0)]);
        let b = finite_diagram(0, &[]);
        assert_relative_eq!(bottleneck_distance(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn essential_count_mismatch_is_infinite() {
        let a = essential_diagram(1, &[1.0]);
        let b = essential_diagram(1, &[1.0, 2.0]);
        assert!(bottleneck_distance(&a, &b).unwrap().is_infinite());
    }

    #[test]
    fn essential_points_pair_in_sorted_order() {
        let a = essential_diagram(1, &[3.0, 1.0]);
        let b = essential_diagram(1, &[1.5, 2.8]);
        assert_relative_eq!(bottleneck_distance(&a, &b).unwrap(), 0.5);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = finite_diagram(0, &[]);
        let b = finite_diagram(1, &[]);
        assert!(matches!(
            bottleneck_distance(&a, &b),
            Err(TopologyError::DimensionMismatch(0, 1))
        ));
    }

    #[test]
    fn matches_brute_force_on_small_cases() {
        let cases: Vec<(Vec<(f64, f64)>, Vec<(f64, f64)>)> = vec![
            (vec![(0.0, 1.0)], vec![(0.0, 1.1), (2.0, 2.1)]),
            (
                vec![(0.0, 4.0), (1.0, 2.0), (3.0, 3.5)],
                vec![(0.2, 4.1), (1.0, 1.4)],
            ),
            (
                vec![(0.0, 1.0), (0.0, 2.0), (0.0, 3.0)],
                vec![(0.5, 1.2), (0.1, 2.3), (0.2, 2.9), (1.0, 1.3)],
            ),
            (vec![], vec![(5.0, 9.0)]),
            (
                vec![(0.0, 0.4), (2.0, 6.0), (2.5, 3.0), (4.0, 4.2)],
                vec![(0.1, 0.3), (2.2, 5.6), (2.4, 3.3)],
            ),
        ];
        for (p, q) in cases {
            let a = finite_diagram(0, &p);
            let b = finite_diagram(0, &q);
            let got = bottleneck_distance(&a, &b).unwrap();
            let want = oracle(&p, &q);
            assert_relative_eq!(got, want, epsilon = 1e-12);
            let sym = bottleneck_distance(&b, &a).unwrap();
            assert_relative_eq!(got, sym, epsilon = 1e-12);
        }
    }
}
