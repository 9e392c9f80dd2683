//! Single-step distributions on Z^d and their elementary statistics.
//!
//! A [`LatticeMeasure`] is a finitely supported probability mass function
//! whose support lies in the Euclidean ball of radius `steplength`. Exact
//! rational weights are kept alongside the floats whenever the measure was
//! built from rationals, so the convolution oracle can run exactly.

mod format;
mod hull;
mod index;
mod period;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{LcltError, Result};

pub use format::{load_measure, parse_probability, write_measure};
pub use hull::{support_hull, Facet, SupportHull, INTERIOR_MARGIN};
pub use index::{indices_of_order, indices_up_to, LatticePoint, MultiIndex};
pub use period::{aperiodicity, Aperiodicity};

pub(crate) use hull::affine_rank;
pub(crate) use index::factorial;

/// Tolerance on |Σ G(x) − 1| for a step distribution.
pub const MASS_TOL: f64 = 1e-12;

/// Default number of convolution steps examined by [`validate`].
pub const DEFAULT_APERIODICITY_CAP: usize = 64;

/// Smallest eigenvalue (relative to max(1, λ_max)) below which a covariance
/// matrix is treated as singular.
pub const EIGEN_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeMeasure {
    dim: usize,
    steplength: u64,
    points: Vec<LatticePoint>,
    probs: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

impl LatticeMeasure {
    /// Builds a step distribution from float weights. Zero weights are
    /// dropped from the support.
    pub fn new<I>(dim: usize, steplength: u64, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (LatticePoint, f64)>,
    {
        let raw: Vec<(LatticePoint, f64)> = entries.into_iter().collect();
        Self::build(dim, steplength, raw, None, MASS_TOL)
    }

    /// Builds a step distribution from exact rational weights.
    pub fn from_rationals<I>(dim: usize, steplength: u64, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (LatticePoint, BigRational)>,
    {
        let raw: Vec<(LatticePoint, BigRational)> = entries.into_iter().collect();
        for (x, p) in &raw {
            if p < &BigRational::zero() {
                return Err(LcltError::Invariant(format!("negative probability at {x}")));
            }
        }
        let floats = raw
            .iter()
            .map(|(x, p)| (x.clone(), p.to_f64().unwrap_or(f64::NAN)))
            .collect();
        let exact = raw.into_iter().map(|(_, p)| p).collect();
        Self::build(dim, steplength, floats, Some(exact), MASS_TOL)
    }

    /// Used by the oracle for n-step distributions, whose float mass is only
    /// conserved to `mass_tol`.
    pub(crate) fn from_parts(
        dim: usize,
        steplength: u64,
        entries: Vec<(LatticePoint, f64)>,
        exact: Option<Vec<BigRational>>,
        mass_tol: f64,
    ) -> Result<Self> {
        Self::build(dim, steplength, entries, exact, mass_tol)
    }

    fn build(
        dim: usize,
        steplength: u64,
        entries: Vec<(LatticePoint, f64)>,
        exact: Option<Vec<BigRational>>,
        mass_tol: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(LcltError::Invariant("dimension must be positive".into()));
        }
        if steplength == 0 {
            return Err(LcltError::Invariant("steplength must be positive".into()));
        }
        let l2 = (steplength as i128) * (steplength as i128);
        let mut map: BTreeMap<LatticePoint, (f64, Option<BigRational>)> = BTreeMap::new();
        let mut exact_iter = exact.map(|v| v.into_iter());
        for (x, p) in entries {
            let q = exact_iter.as_mut().and_then(|it| it.next());
            if x.dim() != dim {
                return Err(LcltError::Invariant(format!(
                    "point {x} has dimension {}, expected {dim}",
                    x.dim()
                )));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(LcltError::Invariant(format!("invalid probability {p} at {x}")));
            }
            let n2: i128 = x.coords().iter().map(|&c| (c as i128) * (c as i128)).sum();
            if n2 > l2 {
                return Err(LcltError::Invariant(format!(
                    "point {x} lies outside the steplength ball of radius {steplength}"
                )));
            }
            if map.contains_key(&x) {
                return Err(LcltError::Invariant(format!("duplicate point {x}")));
            }
            if p == 0.0 && q.as_ref().is_none_or(|q| q.is_zero()) {
                continue;
            }
            map.insert(x, (p, q));
        }
        if map.is_empty() {
            return Err(LcltError::Invariant("support is empty".into()));
        }
        let mass: f64 = map.values().map(|(p, _)| p).sum();
        if (mass - 1.0).abs() > mass_tol {
            return Err(LcltError::Invariant(format!("total mass {mass} differs from 1")));
        }
        let has_exact = map.values().all(|(_, q)| q.is_some());
        let mut points = Vec::with_capacity(map.len());
        let mut probs = Vec::with_capacity(map.len());
        let mut exact = Vec::with_capacity(map.len());
        for (x, (p, q)) in map {
            points.push(x);
            probs.push(p);
            if let Some(q) = q {
                exact.push(q);
            }
        }
        Ok(LatticeMeasure {
            dim,
            steplength,
            points,
            probs,
            exact: has_exact.then_some(exact),
        })
    }

    /// The point mass at the origin.
    pub fn dirac(dim: usize, steplength: u64) -> Self {
        LatticeMeasure {
            dim,
            steplength,
            points: vec![LatticePoint::origin(dim)],
            probs: vec![1.0],
            exact: Some(vec![BigRational::from_integer(1.into())]),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steplength(&self) -> u64 {
        self.steplength
    }

    pub fn support_len(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn exact_probs(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    /// Support points with their (float) probabilities, in lattice order.
    pub fn iter(&self) -> impl Iterator<Item = (&LatticePoint, f64)> + '_ {
        self.points.iter().zip(self.probs.iter().copied())
    }

    /// G(x); zero off the support.
    pub fn prob(&self, x: &LatticePoint) -> f64 {
        match self.points.binary_search(x) {
            Ok(i) => self.probs[i],
            Err(_) => 0.0,
        }
    }

    pub fn exact_prob(&self, x: &LatticePoint) -> Option<BigRational> {
        let exact = self.exact.as_ref()?;
        Some(match self.points.binary_search(x) {
            Ok(i) => exact[i].clone(),
            Err(_) => BigRational::zero(),
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.dim];
        for (x, p) in self.iter() {
            for (ej, &xj) in e.iter_mut().zip(x.coords()) {
                *ej += p * xj as f64;
            }
        }
        e
    }

    /// True when the mean vanishes to within `tol` in every coordinate.
    pub fn is_centered(&self, tol: f64) -> bool {
        self.mean().iter().all(|e| e.abs() <= tol)
    }

    /// G(x) = G(−x) for every x, compared exactly when rationals are known.
    pub fn is_symmetric(&self) -> bool {
        self.points.iter().enumerate().all(|(i, x)| {
            let nx = x.neg();
            match self.points.binary_search(&nx) {
                Ok(j) => match &self.exact {
                    Some(q) => q[i] == q[j],
                    None => self.probs[i] == self.probs[j],
                },
                Err(_) => false,
            }
        })
    }

    /// Same support and steplength, new float weights (order of `points()`).
    pub(crate) fn with_weights(&self, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), self.points.len());
        LatticeMeasure {
            dim: self.dim,
            steplength: self.steplength,
            points: self.points.clone(),
            probs,
            exact: None,
        }
    }

    pub(crate) fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim {
            return Err(LcltError::DimensionMismatch {
                expected: self.dim,
                got,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentTable {
    pub dim: usize,
    pub max_order: u32,
    pub values: BTreeMap<MultiIndex, f64>,
    pub mean: Vec<f64>,
}

impl MomentTable {
    pub fn get(&self, nu: &MultiIndex) -> Option<f64> {
        self.values.get(nu).copied()
    }
}

/// μ_ν = Σ_x x^ν G(x) for every |ν| ≤ `max_order`.
pub fn moments(m: &LatticeMeasure, max_order: u32) -> MomentTable {
    let d = m.dim();
    let mut values = BTreeMap::new();
    for nu in indices_up_to(d, max_order) {
        let v = if nu.order() == 0 {
            // exact by the mass invariant
            1.0
        } else {
            m.iter().map(|(x, p)| p * nu.monomial_int(x.coords())).sum()
        };
        values.insert(nu, v);
    }
    let mean = (0..d)
        .map(|j| values.get(&MultiIndex::unit(d, j)).copied().unwrap_or_else(|| m.mean()[j]))
        .collect();
    MomentTable {
        dim: d,
        max_order,
        values,
        mean,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    matrix: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    inverse: Option<DMatrix<f64>>,
    determinant: f64,
}

impl CovarianceMatrix {
    /// Wraps a symmetric matrix; the input is symmetrized.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(LcltError::Invariant("covariance must be square".into()));
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let eigenvalues = SymmetricEigen::new(sym.clone()).eigenvalues;
        let lmax = eigenvalues.max().max(1.0);
        let gamma = eigenvalues.min();
        let inverse = if gamma > EIGEN_TOL * lmax {
            sym.clone().cholesky().map(|c| c.inverse())
        } else {
            None
        };
        let determinant = eigenvalues.iter().product();
        Ok(CovarianceMatrix {
            matrix: sym,
            eigenvalues,
            inverse,
            determinant,
        })
    }

    pub fn from_rows(d: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != d * d {
            return Err(LcltError::DimensionMismatch {
                expected: d * d,
                got: rows.len(),
            });
        }
        Self::from_matrix(DMatrix::from_row_slice(d, d, rows))
    }

    pub fn scalar(v: f64) -> Result<Self> {
        Self::from_rows(1, &[v])
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// γ, the smallest eigenvalue.
    pub fn smallest_eigenvalue(&self) -> f64 {
        self.eigenvalues.min()
    }

    pub fn largest_eigenvalue(&self) -> f64 {
        self.eigenvalues.max()
    }

    pub fn determinant(&self) -> f64 {
        self.determinant
    }

    pub fn is_positive_definite(&self) -> bool {
        self.inverse.is_some()
    }

    pub fn inverse(&self) -> Result<&DMatrix<f64>> {
        self.inverse.as_ref().ok_or(LcltError::SingularCovariance)
    }

    /// The same matrix multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::from_matrix(&self.matrix * s)
    }
}

/// V_jk = μ_{e_j+e_k} − E_j E_k, accumulated as a centered sum.
pub fn covariance(m: &LatticeMeasure) -> CovarianceMatrix {
    let d = m.dim();
    let e = m.mean();
    let mut v = DMatrix::<f64>::zeros(d, d);
    for (x, p) in m.iter() {
        let c: Vec<f64> = x.coords().iter().zip(&e).map(|(&xi, ei)| xi as f64 - ei).collect();
        for j in 0..d {
            for k in 0..d {
                v[(j, k)] += p * c[j] * c[k];
            }
        }
    }
    CovarianceMatrix::from_matrix(v).expect("square by construction")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub mass_ok: bool,
    pub steplength_ok: bool,
    pub maximal: bool,
    pub aperiodic: Aperiodicity,
    pub mean: Vec<f64>,
    pub gamma: f64,
}

impl ValidationReport {
    /// Every hypothesis of the local limit theorem holds.
    pub fn all_ok(&self) -> bool {
        self.mass_ok && self.steplength_ok && self.maximal && self.aperiodic == Aperiodicity::Yes
    }
}

/// Checks mass, steplength, maximality (integer affine rank of the support)
/// and aperiodicity (exact return-time search up to `aperiodicity_cap`).
pub fn validate(m: &LatticeMeasure, aperiodicity_cap: usize) -> ValidationReport {
    let l2 = (m.steplength() as i64).pow(2);
    let mass_ok = (m.total_mass() - 1.0).abs() <= MASS_TOL;
    let steplength_ok = m.points().iter().all(|x| x.norm_sq() <= l2);
    let maximal = affine_rank(m.points()) == m.dim();
    let cov = covariance(m);
    ValidationReport {
        mass_ok,
        steplength_ok,
        maximal,
        aperiodic: aperiodicity(m, aperiodicity_cap),
        mean: m.mean(),
        gamma: cov.smallest_eigenvalue(),
    }
}

#[cfg(test)]
pub(crate) mod test_measures {
    use super::*;

    pub fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    pub fn lazy() -> LatticeMeasure {
        LatticeMeasure::from_rationals(
            1,
            1,
            vec![
                (LatticePoint(vec![-1]), rat(1, 4)),
                (LatticePoint(vec![0]), rat(1, 2)),
                (LatticePoint(vec![1]), rat(1, 4)),
            ],
        )
        .unwrap()
    }

    pub fn simple() -> LatticeMeasure {
        LatticeMeasure::from_rationals(
            1,
            1,
            vec![
                (LatticePoint(vec![-1]), rat(1, 2)),
                (LatticePoint(vec![1]), rat(1, 2)),
            ],
        )
        .unwrap()
    }

    /// {−1: 0.4, 0: 0.3, 1: 0.2, 2: 0.1}, mean zero, ℓ = 2.
    pub fn skewed() -> LatticeMeasure {
        LatticeMeasure::from_rationals(
            1,
            2,
            vec![
                (LatticePoint(vec![-1]), rat(2, 5)),
                (LatticePoint(vec![0]), rat(3, 10)),
                (LatticePoint(vec![1]), rat(1, 5)),
                (LatticePoint(vec![2]), rat(1, 10)),
            ],
        )
        .unwrap()
    }

    /// Product of two independent lazy walks on Z^2 (ℓ = 2 covers the corners).
    pub fn lazy2() -> LatticeMeasure {
        let w = [rat(1, 4), rat(1, 2), rat(1, 4)];
        let mut entries = Vec::new();
        for (i, a) in w.iter().enumerate() {
            for (j, b) in w.iter().enumerate() {
                entries.push((LatticePoint(vec![i as i64 - 1, j as i64 - 1]), a * b));
            }
        }
        LatticeMeasure::from_rationals(2, 2, entries).unwrap()
    }
}
