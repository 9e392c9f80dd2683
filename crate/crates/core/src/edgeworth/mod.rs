//! Edgeworth corrections of order n⁻¹ for lattice walks.
//!
//! Cumulants come from the logarithm of the moment series. Each operator
//! χ_r(D) acting on φ_V is turned into a polynomial factor through the
//! Hermite table, so that for instance χ₄(D)φ_V = q₄ φ_V. The squared
//! operator χ₃*²(D) is the operator whose Fourier symbol is χ₃(it)², i.e.
//! the polynomial square of χ₃ read as a polynomial in D.
//!
//! Because φ_{nV}(x) = n^{−d/2} φ_V(x/√n), the local approximant
//!
//! ```text
//! n^{−d/2} [1 − q₃(y)/(6√n) + q₄(y)/(24n) + q₃₃(y)/(72n)] φ_V(y),  y = (x − nE)/√n
//! ```
//!
//! can be rewritten for centered walks as `[1 + P₃(y)/√n + P₆(y)/n] φ_{nV}(x)`
//! with P₃ = −q₃/6 and P₆ = q₄/24 + q₃₃/72.

mod hermite;
mod poly;
mod series;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

pub use hermite::{apply_operator, gaussian_density, hermite_factor, HermiteFactor, HermiteTable, MAX_HERMITE_ORDER};
pub use poly::Polynomial;
pub use series::{
    cumulant_polynomial, cumulants, cumulants_from_moments, series_log, CumulantPolynomial, CumulantTable,
    TruncatedSeries, CUMULANT_ORDER,
};

use crate::error::{LcltError, Result};
use crate::measure::{covariance, CovarianceMatrix, LatticeMeasure, LatticePoint, MultiIndex};

/// |E_j| below this counts as mean zero.
pub const CENTERED_TOL: f64 = 1e-12;

/// A value kept as `mantissa · exp(log_scale)` so deep-tail approximants do not underflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl Scaled {
    pub fn value(&self) -> f64 {
        self.mantissa * self.log_scale.exp()
    }

    /// |a − b| / max(|a|, |b|), computed on a common scale; 0 when both vanish.
    pub fn relative_difference(&self, other: &Scaled) -> f64 {
        let m = self.log_scale.max(other.log_scale);
        let a = self.mantissa * (self.log_scale - m).exp();
        let b = other.mantissa * (other.log_scale - m).exp();
        let den = a.abs().max(b.abs());
        if den == 0.0 {
            0.0
        } else {
            (a - b).abs() / den
        }
    }
}

/// The operator with symbol χ_r(it)², as a coefficient map in D.
pub fn squared_operator(p: &CumulantPolynomial) -> Result<Polynomial> {
    if p.order != 3 {
        return Err(LcltError::Precondition(format!(
            "squared operator is defined for r = 3, got {}",
            p.order
        )));
    }
    Ok(&p.poly * &p.poly)
}

#[derive(Clone, Debug)]
pub struct EdgeworthModel {
    dim: usize,
    mean: Vec<f64>,
    cov: CovarianceMatrix,
    cumulants: CumulantTable,
    chi3: CumulantPolynomial,
    chi4: CumulantPolynomial,
    chi3_sq: Polynomial,
    q3: Polynomial,
    q4: Polynomial,
    q33: Polynomial,
    p3: Polynomial,
    p6: Polynomial,
    l: f64,
}

impl EdgeworthModel {
    /// Requires a maximal measure (positive definite covariance).
    pub fn build(m: &LatticeMeasure) -> Result<Self> {
        let cov = covariance(m);
        cov.inverse()?;
        let cumulants = cumulants(m)?;
        let chi3 = cumulant_polynomial(&cumulants, 3)?;
        let chi4 = cumulant_polynomial(&cumulants, 4)?;
        let chi3_sq = squared_operator(&chi3)?;
        let table = HermiteTable::new(&cov, MAX_HERMITE_ORDER)?;
        let q3 = table.operator_factor(&chi3.poly)?;
        let q4 = table.operator_factor(&chi4.poly)?;
        let q33 = table.operator_factor(&chi3_sq)?;
        let p3 = q3.scale(-1.0 / 6.0);
        let p6 = &q4.scale(1.0 / 24.0) + &q33.scale(1.0 / 72.0);
        let origin = vec![0.0; m.dim()];
        let l = q4.eval(&origin) / 24.0 + q33.eval(&origin) / 72.0;
        Ok(EdgeworthModel {
            dim: m.dim(),
            mean: m.mean(),
            cov,
            cumulants,
            chi3,
            chi4,
            chi3_sq,
            q3,
            q4,
            q33,
            p3,
            p6,
            l,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &CovarianceMatrix {
        &self.cov
    }

    pub fn cumulants(&self) -> &CumulantTable {
        &self.cumulants
    }

    pub fn chi3(&self) -> &CumulantPolynomial {
        &self.chi3
    }

    pub fn chi4(&self) -> &CumulantPolynomial {
        &self.chi4
    }

    pub fn chi3_squared(&self) -> &Polynomial {
        &self.chi3_sq
    }

    /// χ₃(D)φ_V = q₃ φ_V.
    pub fn q3(&self) -> &Polynomial {
        &self.q3
    }

    pub fn q4(&self) -> &Polynomial {
        &self.q4
    }

    pub fn q33(&self) -> &Polynomial {
        &self.q33
    }

    pub fn is_centered(&self) -> bool {
        self.mean.iter().all(|e| e.abs() <= CENTERED_TOL)
    }

    fn require_centered(&self) -> Result<()> {
        if self.is_centered() {
            Ok(())
        } else {
            Err(LcltError::Precondition(format!(
                "theorem approximant needs mean zero, mean is {:?}",
                self.mean
            )))
        }
    }

    fn phi(&self, y: &[f64]) -> f64 {
        gaussian_density(&self.cov, y).expect("positive definite by construction")
    }

    fn rescaled(&self, n: usize, x: &[f64]) -> Vec<f64> {
        let s = (n as f64).sqrt();
        x.iter().zip(&self.mean).map(|(xi, e)| (xi - n as f64 * e) / s).collect()
    }

    /// n^{−d/2} [1 − χ₃(D)/(6√n) + χ₄(D)/(24n) + χ₃*²(D)/(72n)] φ_V at (x − nE)/√n.
    pub fn lemma_approximant(&self, n: usize, x: &LatticePoint) -> f64 {
        self.lemma_approximant_at(n, &x.to_f64())
    }

    pub fn lemma_approximant_at(&self, n: usize, x: &[f64]) -> f64 {
        let nf = n as f64;
        let y = self.rescaled(n, x);
        let bracket =
            1.0 - self.q3.eval(&y) / (6.0 * nf.sqrt()) + self.q4.eval(&y) / (24.0 * nf) + self.q33.eval(&y) / (72.0 * nf);
        nf.powf(-(self.dim as f64) / 2.0) * bracket * self.phi(&y)
    }

    /// The lemma approximant with its Gaussian factor kept in log form.
    pub fn lemma_approximant_scaled(&self, n: usize, x: &[f64]) -> Scaled {
        let nf = n as f64;
        let y = self.rescaled(n, x);
        let bracket =
            1.0 - self.q3.eval(&y) / (6.0 * nf.sqrt()) + self.q4.eval(&y) / (24.0 * nf) + self.q33.eval(&y) / (72.0 * nf);
        let d = self.dim as f64;
        Scaled {
            mantissa: bracket,
            log_scale: -0.5 * d * nf.ln() + self.log_phi(&y, 1.0),
        }
    }

    /// log φ_{sV}(y).
    fn log_phi(&self, y: &[f64], s: f64) -> f64 {
        let inv = self.cov.inverse().expect("positive definite by construction");
        let mut quad = 0.0;
        for j in 0..self.dim {
            for k in 0..self.dim {
                quad += y[j] * inv[(j, k)] * y[k];
            }
        }
        let d = self.dim as f64;
        -0.5 * d * (2.0 * PI * s).ln() - 0.5 * self.cov.determinant().ln() - 0.5 * quad / s
    }

    /// Plain local CLT term n^{−d/2} φ_V((x − nE)/√n).
    pub fn gaussian_approximant(&self, n: usize, x: &LatticePoint) -> f64 {
        let y = self.rescaled(n, &x.to_f64());
        (n as f64).powf(-(self.dim as f64) / 2.0) * self.phi(&y)
    }

    /// L = q₄(0)/24 + q₃₃(0)/72.
    pub fn corollary_constant(&self) -> f64 {
        self.l
    }

    /// (2πn)^{−d/2} (det V)^{−1/2} (1 + L/n), the approximation of H^{*n}(nE).
    pub fn corollary_value(&self, n: usize) -> f64 {
        corollary_value(self.dim, self.cov.determinant(), self.l, n)
    }

    /// (P₃, P₆); only for centered walks.
    pub fn theorem_polynomials(&self) -> Result<(&Polynomial, &Polynomial)> {
        self.require_centered()?;
        Ok((&self.p3, &self.p6))
    }

    /// [1 + n^{−1/2} P₃(x/√n) + n^{−1} P₆(x/√n)] φ_{nV}(x).
    pub fn theorem_approximant(&self, n: usize, x: &LatticePoint) -> Result<f64> {
        self.theorem_approximant_at(n, &x.to_f64())
    }

    pub fn theorem_approximant_at(&self, n: usize, x: &[f64]) -> Result<f64> {
        self.require_centered()?;
        let nf = n as f64;
        let s = nf.sqrt();
        let y: Vec<f64> = x.iter().map(|v| v / s).collect();
        let bracket = 1.0 + self.p3.eval(&y) / s + self.p6.eval(&y) / nf;
        Ok(bracket * self.phi_nv(n, x))
    }

    /// The theorem approximant with φ_{nV} kept in log form.
    pub fn theorem_approximant_scaled(&self, n: usize, x: &[f64]) -> Result<Scaled> {
        self.require_centered()?;
        let nf = n as f64;
        let s = nf.sqrt();
        let y: Vec<f64> = x.iter().map(|v| v / s).collect();
        Ok(Scaled {
            mantissa: 1.0 + self.p3.eval(&y) / s + self.p6.eval(&y) / nf,
            log_scale: self.log_phi(x, nf),
        })
    }

    /// φ_{nV}(x) from nV directly.
    pub fn phi_nv(&self, n: usize, x: &[f64]) -> f64 {
        let d = self.dim;
        let nf = n as f64;
        let inv = self.cov.inverse().expect("positive definite by construction");
        let mut quad = 0.0;
        for j in 0..d {
            for k in 0..d {
                quad += x[j] * inv[(j, k)] * x[k];
            }
        }
        (2.0 * PI * nf).powf(-(d as f64) / 2.0) / self.cov.determinant().sqrt() * (-0.5 * quad / nf).exp()
    }

    /// Fixed-order JSON dump of every model ingredient.
    pub fn dump(&self) -> ModelDump {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
        };
        let centered = self.is_centered();
        ModelDump {
            dim: self.dim,
            mean: self.mean.clone(),
            covariance: rows(self.cov.matrix()),
            covariance_inverse: rows(self.cov.inverse().expect("positive definite")),
            det_covariance: self.cov.determinant(),
            cumulants: self
                .cumulants
                .values
                .iter()
                .map(|(nu, &v)| CumulantEntry {
                    exponents: nu.exponents().to_vec(),
                    value: v,
                })
                .collect(),
            q3: self.q3.clone(),
            q4: self.q4.clone(),
            q33: self.q33.clone(),
            p3: centered.then(|| self.p3.clone()),
            p6: centered.then(|| self.p6.clone()),
            l: self.l,
        }
    }
}

/// (2πn)^{−d/2} (det V)^{−1/2} (1 + L/n).
pub fn corollary_value(dim: usize, det_v: f64, l: f64, n: usize) -> f64 {
    let nf = n as f64;
    (2.0 * PI * nf).powf(-(dim as f64) / 2.0) / det_v.sqrt() * (1.0 + l / nf)
}

#[derive(Clone, Debug, Serialize)]
pub struct CumulantEntry {
    pub exponents: Vec<u32>,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelDump {
    pub dim: usize,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub covariance_inverse: Vec<Vec<f64>>,
    pub det_covariance: f64,
    pub cumulants: Vec<CumulantEntry>,
    pub q3: Polynomial,
    pub q4: Polynomial,
    pub q33: Polynomial,
    pub p3: Option<Polynomial>,
    pub p6: Option<Polynomial>,
    #[serde(rename = "L")]
    pub l: f64,
}

impl ModelDump {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

/// Convenience: the monomial basis index for a one-dimensional power.
pub fn power_index(k: u32) -> MultiIndex {
    MultiIndex::new(vec![k])
}
