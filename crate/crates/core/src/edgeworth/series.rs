use std::collections::BTreeMap;

use serde::Serialize;

use super::poly::Polynomial;
use crate::error::{LcltError, Result};
use crate::measure::{factorial, indices_of_order, moments, LatticeMeasure, MomentTable, MultiIndex};

/// Formal power series in d variables, truncated at total degree `max_degree`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries {
    max_degree: u32,
    coeffs: Polynomial,
}

impl TruncatedSeries {
    pub fn new(coeffs: Polynomial, max_degree: u32) -> Self {
        TruncatedSeries {
            max_degree,
            coeffs: coeffs.truncate(max_degree),
        }
    }

    /// Σ_ν μ_ν u^ν / ν!, the moment series in u = it.
    pub fn from_moments(table: &MomentTable, max_degree: u32) -> Self {
        let mut p = Polynomial::zero(table.dim);
        for (nu, &mu) in &table.values {
            if nu.order() <= max_degree {
                p.add_term(nu.clone(), mu / nu.factorial());
            }
        }
        Self::new(p, max_degree)
    }

    pub fn dim(&self) -> usize {
        self.coeffs.dim()
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn coeffs(&self) -> &Polynomial {
        &self.coeffs
    }

    pub fn coefficient(&self, nu: &MultiIndex) -> f64 {
        self.coeffs.coefficient(nu)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let r = self.max_degree.min(other.max_degree);
        Self::new(self.coeffs.mul_truncated(&other.coeffs, r), r)
    }
}

/// log s = Σ_{k≥1} (−1)^{k+1} (s − 1)^k / k, truncated.
///
/// Applied to the moment series in u = it this yields the cumulant series
/// Σ χ_ν u^ν/ν!: since the substitution t → it scales each homogeneous
/// degree-r part by i^r on both sides, it commutes with the logarithm and the
/// real coefficients can be equated directly.
pub fn series_log(s: &TruncatedSeries) -> Result<TruncatedSeries> {
    let d = s.dim();
    let c0 = s.coefficient(&MultiIndex::zero(d));
    if (c0 - 1.0).abs() > 1e-12 {
        return Err(LcltError::Precondition(format!("series constant term is {c0}, expected 1")));
    }
    if s.max_degree() < 1 {
        return Err(LcltError::Precondition("truncation degree must be at least 1".into()));
    }
    let r = s.max_degree();
    let mut w = s.coeffs().clone();
    w.add_term(MultiIndex::zero(d), -c0);
    let w = TruncatedSeries::new(w, r);
    let mut acc = Polynomial::zero(d);
    let mut power = w.clone();
    for k in 1..=r {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        acc = &acc + &power.coeffs().scale(sign / k as f64);
        power = power.mul(&w);
    }
    Ok(TruncatedSeries::new(acc, r))
}

/// Cumulants χ_ν for 1 ≤ |ν| ≤ 4.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CumulantTable {
    pub dim: usize,
    pub values: BTreeMap<MultiIndex, f64>,
}

impl CumulantTable {
    pub fn get(&self, nu: &MultiIndex) -> f64 {
        self.values.get(nu).copied().unwrap_or(0.0)
    }

    /// χ_{e_j}.
    pub fn mean(&self) -> Vec<f64> {
        (0..self.dim).map(|j| self.get(&MultiIndex::unit(self.dim, j))).collect()
    }
}

/// Truncation degree of the cumulant series.
pub const CUMULANT_ORDER: u32 = 4;

pub fn cumulants_from_moments(table: &MomentTable) -> Result<CumulantTable> {
    let series = TruncatedSeries::from_moments(table, CUMULANT_ORDER);
    let log = series_log(&series)?;
    let mut values = BTreeMap::new();
    for r in 1..=CUMULANT_ORDER {
        for nu in indices_of_order(table.dim, r) {
            let c = log.coefficient(&nu) * nu.factorial();
            values.insert(nu, c);
        }
    }
    Ok(CumulantTable {
        dim: table.dim,
        values,
    })
}

pub fn cumulants(m: &LatticeMeasure) -> Result<CumulantTable> {
    cumulants_from_moments(&moments(m, CUMULANT_ORDER))
}

/// χ_r(z) = Σ_{|ν|=r} (r!/ν!) χ_ν z^ν.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CumulantPolynomial {
    pub order: u32,
    pub poly: Polynomial,
}

pub fn cumulant_polynomial(c: &CumulantTable, r: u32) -> Result<CumulantPolynomial> {
    if !(1..=CUMULANT_ORDER).contains(&r) {
        return Err(LcltError::Precondition(format!("cumulant polynomial order {r} not in 1..=4")));
    }
    let rf = factorial(r);
    let mut poly = Polynomial::zero(c.dim);
    for nu in indices_of_order(c.dim, r) {
        poly.add_term(nu.clone(), rf / nu.factorial() * c.get(&nu));
    }
    Ok(CumulantPolynomial { order: r, poly })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::covariance;
    use crate::measure::test_measures::*;

    #[test]
    fn log_of_one_plus_t() {
        let mut p = Polynomial::constant(1, 1.0);
        p.add_term(MultiIndex::new(vec![1]), 1.0);
        let log = series_log(&TruncatedSeries::new(p, 4)).unwrap();
        let expect = [0.0, 1.0, -0.5, 1.0 / 3.0, -0.25];
        for (k, e) in expect.iter().enumerate() {
            assert!((log.coefficient(&MultiIndex::new(vec![k as u32])) - e).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_term_must_be_one() {
        let p = Polynomial::constant(1, 2.0);
        assert!(matches!(series_log(&TruncatedSeries::new(p, 4)), Err(LcltError::Precondition(_))));
    }

    #[test]
    fn lazy_walk_cumulants() {
        let c = cumulants(&lazy()).unwrap();
        let k = |r| c.get(&MultiIndex::new(vec![r]));
        assert!(k(1).abs() < 1e-15);
        assert!((k(2) - 0.5).abs() < 1e-15);
        assert!(k(3).abs() < 1e-15);
        // μ₄ − 3μ₂² = 1/2 − 3/4
        assert!((k(4) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn product_measure_has_no_mixed_cumulants() {
        let c = cumulants(&lazy2()).unwrap();
        for (nu, v) in &c.values {
            if nu.support_size() == 2 {
                assert!(v.abs() < 1e-15, "{nu} -> {v}");
            }
        }
    }

    #[test]
    fn low_order_polynomials() {
        let m = skewed();
        let c = cumulants(&m).unwrap();
        let v = covariance(&m);
        let chi1 = cumulant_polynomial(&c, 1).unwrap();
        let chi2 = cumulant_polynomial(&c, 2).unwrap();
        for z in [-1.3, 0.2, 2.0] {
            assert!((chi1.poly.eval(&[z]) - m.mean()[0] * z).abs() < 1e-14);
            assert!((chi2.poly.eval(&[z]) - z * v.matrix()[(0, 0)] * z).abs() < 1e-14);
        }
        assert!(cumulant_polynomial(&cumulants(&lazy()).unwrap(), 3).unwrap().poly.is_zero());
        assert!(cumulant_polynomial(&c, 5).is_err());
        for r in 1..=4 {
            assert!(cumulant_polynomial(&c, r).unwrap().poly.is_homogeneous(r));
        }
    }

    #[test]
    fn second_cumulants_assemble_covariance_in_2d() {
        let m = LatticeMeasure::new(
            2,
            1,
            vec![
                (crate::measure::LatticePoint(vec![1, 0]), 0.3),
                (crate::measure::LatticePoint(vec![0, 1]), 0.2),
                (crate::measure::LatticePoint(vec![0, 0]), 0.1),
                (crate::measure::LatticePoint(vec![-1, 0]), 0.15),
                (crate::measure::LatticePoint(vec![0, -1]), 0.25),
            ],
        )
        .unwrap();
        let c = cumulants(&m).unwrap();
        let v = covariance(&m);
        assert!((c.get(&MultiIndex::new(vec![2, 0])) - v.matrix()[(0, 0)]).abs() < 1e-15);
        assert!((c.get(&MultiIndex::new(vec![1, 1])) - v.matrix()[(0, 1)]).abs() < 1e-15);
        assert!((c.get(&MultiIndex::new(vec![0, 2])) - v.matrix()[(1, 1)]).abs() < 1e-15);
        let e = c.mean();
        assert!((e[0] - 0.15).abs() < 1e-15 && (e[1] + 0.05).abs() < 1e-15);
    }
}
