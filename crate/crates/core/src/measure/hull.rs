//! Convex hull of a finite lattice support, computed in exact integer
//! arithmetic.
//!
//! Facets are enumerated by brute force over k-subsets of the support
//! (k = affine dimension): a hyperplane through k affinely independent
//! support points with every other point on one side is a facet. When the
//! support spans a proper affine subspace the points are projected onto a
//! set of coordinate axes that is injective on that subspace, which keeps
//! the face structure intact.

use std::collections::BTreeSet;

use num_integer::Integer;
use serde::Serialize;

use super::{LatticeMeasure, LatticePoint};
use crate::error::{LcltError, Result};

/// Normalized distance below which a point counts as on (not inside) a facet.
pub const INTERIOR_MARGIN: f64 = 1e-12;

/// Half-space `normal · x ≤ offset`, with a primitive integer normal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub offset: i64,
}

impl Facet {
    /// Signed Euclidean distance from `x` to the facet plane, positive inside.
    pub fn slack(&self, x: &[f64]) -> f64 {
        let dot: f64 = self.normal.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum();
        let norm = self.normal.iter().map(|&a| (a as f64).powi(2)).sum::<f64>().sqrt();
        (self.offset as f64 - dot) / norm
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportHull {
    pub dim: usize,
    /// Dimension of the affine span of the support.
    pub affine_dim: usize,
    pub vertices: Vec<LatticePoint>,
    /// Present only when the hull is full-dimensional.
    pub facets: Vec<Facet>,
}

impl SupportHull {
    pub fn is_full_dimensional(&self) -> bool {
        self.affine_dim == self.dim
    }

    /// Closed-hull membership (up to the margin), for full-dimensional hulls.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        self.require_interior(x.len())?;
        Ok(self.facets.iter().all(|f| f.slack(x) >= -INTERIOR_MARGIN))
    }

    /// Strict interior test: every facet slack must exceed the margin.
    pub fn contains_interior(&self, xi: &[f64]) -> Result<bool> {
        self.require_interior(xi.len())?;
        Ok(self.facets.iter().all(|f| f.slack(xi) > INTERIOR_MARGIN))
    }

    fn require_interior(&self, got: usize) -> Result<()> {
        if got != self.dim {
            return Err(LcltError::DimensionMismatch {
                expected: self.dim,
                got,
            });
        }
        if !self.is_full_dimensional() {
            return Err(LcltError::DegenerateHull);
        }
        Ok(())
    }
}

pub fn support_hull(m: &LatticeMeasure) -> SupportHull {
    hull_of_points(m.dim(), m.points())
}

pub(crate) fn hull_of_points(dim: usize, points: &[LatticePoint]) -> SupportHull {
    let base = &points[0];
    let diffs: Vec<Vec<i128>> = points
        .iter()
        .map(|p| p.coords().iter().zip(base.coords()).map(|(a, b)| (a - b) as i128).collect())
        .collect();
    let pivots = pivot_columns(&diffs, dim);
    let k = pivots.len();
    if k == 0 {
        return SupportHull {
            dim,
            affine_dim: 0,
            vertices: vec![base.clone()],
            facets: Vec::new(),
        };
    }
    let proj: Vec<Vec<i64>> = points
        .iter()
        .map(|p| pivots.iter().map(|&c| p.coords()[c]).collect())
        .collect();

    let mut facets = BTreeSet::new();
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        if let Some(f) = facet_through(&proj, &subset) {
            facets.insert(f);
        }
        if !next_combination(&mut subset, proj.len()) {
            break;
        }
    }
    let facets: Vec<Facet> = facets.into_iter().collect();

    let mut vertices = Vec::new();
    for (i, q) in proj.iter().enumerate() {
        let tight: Vec<Vec<i128>> = facets
            .iter()
            .filter(|f| dot(&f.normal, q) == f.offset as i128)
            .map(|f| f.normal.iter().map(|&a| a as i128).collect())
            .collect();
        if rank(&tight, k) == k {
            vertices.push(points[i].clone());
        }
    }
    vertices.sort();

    SupportHull {
        dim,
        affine_dim: k,
        vertices,
        facets: if k == dim { facets } else { Vec::new() },
    }
}

/// Dimension of the affine span of `points`.
pub(crate) fn affine_rank(points: &[LatticePoint]) -> usize {
    let Some(base) = points.first() else {
        return 0;
    };
    let diffs: Vec<Vec<i128>> = points
        .iter()
        .map(|p| p.coords().iter().zip(base.coords()).map(|(a, b)| (a - b) as i128).collect())
        .collect();
    rank(&diffs, base.dim())
}

fn dot(a: &[i64], b: &[i64]) -> i128 {
    a.iter().zip(b).map(|(&x, &y)| x as i128 * y as i128).sum()
}

fn facet_through(proj: &[Vec<i64>], subset: &[usize]) -> Option<Facet> {
    let k = proj[0].len();
    let q0 = &proj[subset[0]];
    let rows: Vec<Vec<i128>> = subset[1..]
        .iter()
        .map(|&i| proj[i].iter().zip(q0).map(|(a, b)| (a - b) as i128).collect())
        .collect();
    let mut normal = generalized_cross(&rows, k);
    if normal.iter().all(|&a| a == 0) {
        return None;
    }
    let g = normal.iter().fold(0i128, |g, &a| g.gcd(&a));
    for a in &mut normal {
        *a /= g;
    }
    let normal: Vec<i64> = normal.into_iter().map(|a| a as i64).collect();
    let offset = dot(&normal, q0);
    let mut le = true;
    let mut ge = true;
    for q in proj {
        let s = dot(&normal, q) - offset;
        le &= s <= 0;
        ge &= s >= 0;
        if !le && !ge {
            return None;
        }
    }
    if le {
        Some(Facet {
            normal,
            offset: offset as i64,
        })
    } else {
        Some(Facet {
            normal: normal.iter().map(|a| -a).collect(),
            offset: -offset as i64,
        })
    }
}

/// Vector orthogonal to the k−1 rows of a (k−1)×k integer matrix, by
/// cofactor expansion. For k = 1 this is `[1]`.
fn generalized_cross(rows: &[Vec<i128>], k: usize) -> Vec<i128> {
    (0..k)
        .map(|col| {
            let minor: Vec<Vec<i128>> = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|&(c, _)| c != col)
                        .map(|(_, &v)| v)
                        .collect()
                })
                .collect();
            let sign = if col % 2 == 0 { 1 } else { -1 };
            sign * determinant(minor)
        })
        .collect()
}

/// Bareiss fraction-free determinant.
fn determinant(mut a: Vec<Vec<i128>>) -> i128 {
    let n = a.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Pivot columns of the row-echelon form of an integer matrix.
fn pivot_columns(rows: &[Vec<i128>], ncols: usize) -> Vec<usize> {
    let mut a: Vec<Vec<i128>> = rows.iter().filter(|r| r.iter().any(|&v| v != 0)).cloned().collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..a.len()).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(r, p);
        for i in r + 1..a.len() {
            if a[i][c] != 0 {
                let (x, y) = (a[r][c], a[i][c]);
                for j in c..ncols {
                    a[i][j] = a[i][j] * x - a[r][j] * y;
                }
                let g = a[i].iter().fold(0i128, |g, &v| g.gcd(&v));
                if g > 1 {
                    for v in &mut a[i] {
                        *v /= g;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == a.len() {
            break;
        }
    }
    pivots
}

fn rank(rows: &[Vec<i128>], ncols: usize) -> usize {
    pivot_columns(rows, ncols).len()
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    if k > n {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::test_measures::*;

    fn pts(v: &[&[i64]]) -> Vec<LatticePoint> {
        let mut p: Vec<LatticePoint> = v.iter().map(|c| LatticePoint(c.to_vec())).collect();
        p.sort();
        p
    }

    #[test]
    fn lazy_walk_interval() {
        let h = support_hull(&lazy());
        assert_eq!(h.vertices, pts(&[&[-1], &[1]]));
        assert!(h.contains_interior(&[0.0]).unwrap());
        assert!(!h.contains_interior(&[1.0]).unwrap());
        assert!(h.contains_interior(&[0.999]).unwrap());
        assert!(!h.contains_interior(&[-1.5]).unwrap());
    }

    #[test]
    fn diamond() {
        let points = pts(&[&[1, 0], &[-1, 0], &[0, 1], &[0, -1], &[0, 0]]);
        let h = hull_of_points(2, &points);
        assert_eq!(h.vertices, pts(&[&[1, 0], &[-1, 0], &[0, 1], &[0, -1]]));
        assert_eq!(h.facets.len(), 4);
        assert!(h.contains_interior(&[0.4, 0.4]).unwrap());
        assert!(!h.contains_interior(&[0.5, 0.5]).unwrap());
    }

    #[test]
    fn degenerate_hulls() {
        let h = hull_of_points(1, &pts(&[&[0]]));
        assert_eq!(h.affine_dim, 0);
        assert_eq!(h.vertices, pts(&[&[0]]));
        assert_eq!(h.contains_interior(&[0.0]), Err(LcltError::DegenerateHull));

        let h = hull_of_points(2, &pts(&[&[1, 0], &[-1, 0], &[0, 0]]));
        assert_eq!(h.affine_dim, 1);
        assert_eq!(h.vertices, pts(&[&[-1, 0], &[1, 0]]));
        assert!(!h.is_full_dimensional());
    }

    #[test]
    fn three_dimensional_octahedron() {
        let points = pts(&[&[1, 0, 0], &[-1, 0, 0], &[0, 1, 0], &[0, -1, 0], &[0, 0, 1], &[0, 0, -1], &[0, 0, 0]]);
        let h = hull_of_points(3, &points);
        assert_eq!(h.facets.len(), 8);
        assert_eq!(h.vertices.len(), 6);
        assert!(h.contains_interior(&[0.3, 0.3, 0.3]).unwrap());
        assert!(!h.contains_interior(&[0.4, 0.4, 0.4]).unwrap());
    }

    #[test]
    fn planar_support_in_three_dimensions() {
        let points = pts(&[&[1, 1, 0], &[-1, 1, 0], &[1, -1, 0], &[-1, -1, 0], &[0, 0, 0]]);
        let h = hull_of_points(3, &points);
        assert_eq!(h.affine_dim, 2);
        assert_eq!(h.vertices.len(), 4);
    }

    #[test]
    fn determinant_matches_hand_values() {
        assert_eq!(determinant(vec![vec![2, 1], vec![1, 3]]), 5);
        assert_eq!(determinant(vec![vec![0, 1], vec![1, 0]]), -1);
        assert_eq!(determinant(vec![vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 10]]), -3);
    }

    /// Rational points with denominator 8, classified independently by their
    /// barycentric coordinates in the triangle.
    #[test]
    fn interior_agrees_with_barycentric_oracle() {
        let points = pts(&[&[-1, -1], &[1, 0], &[0, 1]]);
        let h = hull_of_points(2, &points);
        // barycentric coordinates of xi w.r.t. the triangle
        let (a, b, c) = ([-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        for num_x in -12..=12 {
            for num_y in -12..=12 {
                let xi = [num_x as f64 / 8.0, num_y as f64 / 8.0];
                let l1 = ((b[0] - xi[0]) * (c[1] - xi[1]) - (c[0] - xi[0]) * (b[1] - xi[1])) / det;
                let l2 = ((c[0] - xi[0]) * (a[1] - xi[1]) - (a[0] - xi[0]) * (c[1] - xi[1])) / det;
                let l3 = 1.0 - l1 - l2;
                let inside = l1 > 1e-9 && l2 > 1e-9 && l3 > 1e-9;
                assert_eq!(h.contains_interior(&xi).unwrap(), inside, "{xi:?}");
            }
        }
    }
}
