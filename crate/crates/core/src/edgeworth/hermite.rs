use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use super::poly::Polynomial;
use crate::error::{LcltError, Result};
use crate::measure::{indices_up_to, CovarianceMatrix, MultiIndex};

/// Highest derivative order the Hermite tables support.
pub const MAX_HERMITE_ORDER: u32 = 6;

/// φ_V(x) = (2π)^{−d/2} (det V)^{−1/2} exp[−x·V⁻¹x / 2].
pub fn gaussian_density(v: &CovarianceMatrix, x: &[f64]) -> Result<f64> {
    let inv = v.inverse()?;
    let d = v.dim();
    if x.len() != d {
        return Err(LcltError::DimensionMismatch { expected: d, got: x.len() });
    }
    let mut quad = 0.0;
    for j in 0..d {
        for k in 0..d {
            quad += x[j] * inv[(j, k)] * x[k];
        }
    }
    Ok((2.0 * PI).powf(-(d as f64) / 2.0) / v.determinant().sqrt() * (-0.5 * quad).exp())
}

/// Polynomial h_ν with D^ν φ_V = h_ν φ_V.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HermiteFactor {
    pub index: MultiIndex,
    pub poly: Polynomial,
}

/// All h_ν for |ν| ≤ `max_order`, built by
/// h_{ν+e_j} = ∂_j h_ν − (V⁻¹x)_j h_ν from h_0 = 1.
#[derive(Clone, Debug)]
pub struct HermiteTable {
    max_order: u32,
    factors: BTreeMap<MultiIndex, Polynomial>,
}

impl HermiteTable {
    pub fn new(v: &CovarianceMatrix, max_order: u32) -> Result<Self> {
        if max_order > MAX_HERMITE_ORDER {
            return Err(LcltError::Precondition(format!(
                "derivative order {max_order} exceeds {MAX_HERMITE_ORDER}"
            )));
        }
        let inv = v.inverse()?;
        let d = v.dim();
        let linear: Vec<Polynomial> = (0..d)
            .map(|j| Polynomial::linear(&(0..d).map(|k| inv[(j, k)]).collect::<Vec<_>>()))
            .collect();
        let mut factors = BTreeMap::new();
        factors.insert(MultiIndex::zero(d), Polynomial::constant(d, 1.0));
        // graded order guarantees the parent is already present
        for nu in indices_up_to(d, max_order).into_iter().skip(1) {
            let j = nu.exponents().iter().position(|&k| k > 0).unwrap();
            let parent = nu.decrement(j).unwrap();
            let h = &factors[&parent];
            let next = &h.derivative(j) - &(&linear[j] * h);
            factors.insert(nu, next);
        }
        Ok(HermiteTable { max_order, factors })
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn get(&self, nu: &MultiIndex) -> Option<&Polynomial> {
        self.factors.get(nu)
    }

    /// The polynomial q with p(D) φ_V = q φ_V for an operator p of degree ≤ max_order.
    pub fn operator_factor(&self, op: &Polynomial) -> Result<Polynomial> {
        let mut q = Polynomial::zero(op.dim());
        for (nu, c) in op.terms() {
            let h = self.get(nu).ok_or_else(|| {
                LcltError::Precondition(format!("operator term {nu} exceeds derivative order {}", self.max_order))
            })?;
            q = &q + &h.scale(c);
        }
        Ok(q)
    }
}

pub fn hermite_factor(v: &CovarianceMatrix, nu: &MultiIndex) -> Result<HermiteFactor> {
    let table = HermiteTable::new(v, nu.order())?;
    Ok(HermiteFactor {
        index: nu.clone(),
        poly: table.get(nu).cloned().expect("table covers the index"),
    })
}

/// p(D) φ_V evaluated at x, for an operator p with coefficient map ν ↦ c_ν.
pub fn apply_operator(op: &Polynomial, v: &CovarianceMatrix, x: &[f64]) -> Result<f64> {
    let table = HermiteTable::new(v, op.degree())?;
    let q = table.operator_factor(op)?;
    Ok(q.eval(x) * gaussian_density(v, x)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v1(v: f64) -> CovarianceMatrix {
        CovarianceMatrix::scalar(v).unwrap()
    }

    #[test]
    fn standard_density_values() {
        assert!((gaussian_density(&v1(1.0), &[0.0]).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!((gaussian_density(&v1(0.5), &[0.0]).unwrap() - 0.564_189_583_547_756_3).abs() < 1e-15);
        let v = CovarianceMatrix::from_rows(2, &[1.0, 0.3, 0.3, 2.0]).unwrap();
        for x in [[0.4, -1.2], [2.0, 0.1]] {
            let a = gaussian_density(&v, &x).unwrap();
            let b = gaussian_density(&v, &[-x[0], -x[1]]).unwrap();
            assert_eq!(a, b);
        }
        let singular = CovarianceMatrix::from_rows(2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(gaussian_density(&singular, &[0.0, 0.0]), Err(LcltError::SingularCovariance));
    }

    #[test]
    fn first_and_second_factors() {
        let v = CovarianceMatrix::from_rows(2, &[2.0, 0.5, 0.5, 1.0]).unwrap();
        let inv = v.inverse().unwrap().clone();
        let h = hermite_factor(&v, &MultiIndex::unit(2, 1)).unwrap();
        let x = [0.7, -0.3];
        let expect = -(inv[(1, 0)] * x[0] + inv[(1, 1)] * x[1]);
        assert!((h.poly.eval(&x) - expect).abs() < 1e-14);

        let h2 = hermite_factor(&v1(1.0), &MultiIndex::new(vec![2])).unwrap();
        assert!((h2.poly.coefficient(&MultiIndex::new(vec![2])) - 1.0).abs() < 1e-15);
        assert!((h2.poly.coefficient(&MultiIndex::new(vec![0])) + 1.0).abs() < 1e-15);
        assert_eq!(h2.poly.degree(), 2);
    }

    #[test]
    fn fourth_factor_at_half_variance() {
        // (V⁻¹y)⁴ − 6V⁻¹(V⁻¹y)² + 3V⁻² at V = 1/2 is 16y⁴ − 48y² + 12
        let h4 = hermite_factor(&v1(0.5), &MultiIndex::new(vec![4])).unwrap();
        for y in [0.0f64, 0.3, -1.1] {
            let expect = 16.0 * y.powi(4) - 48.0 * y * y + 12.0;
            assert!((h4.poly.eval(&[y]) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn degree_and_parity() {
        let v = CovarianceMatrix::from_rows(2, &[1.5, -0.4, -0.4, 0.8]).unwrap();
        let table = HermiteTable::new(&v, 6).unwrap();
        for nu in indices_up_to(2, 6) {
            let h = table.get(&nu).unwrap();
            assert_eq!(h.degree(), nu.order());
            let wrong = h.max_coeff_with_parity(nu.order() % 2 == 0);
            assert!(wrong == 0.0, "{nu}");
        }
        assert!(HermiteTable::new(&v, 7).is_err());
    }

    #[test]
    fn one_dimensional_derivative_matches_finite_difference() {
        let v = v1(0.7);
        let h = hermite_factor(&v, &MultiIndex::new(vec![1])).unwrap();
        let dlt = 1e-5;
        for x in [-1.0, 0.2, 1.9] {
            let fd = (gaussian_density(&v, &[x + dlt]).unwrap() - gaussian_density(&v, &[x - dlt]).unwrap()) / (2.0 * dlt);
            let exact = h.poly.eval(&[x]) * gaussian_density(&v, &[x]).unwrap();
            assert!((fd - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn operator_application() {
        let v = v1(0.5);
        let one = Polynomial::constant(1, 1.0);
        assert_eq!(apply_operator(&one, &v, &[0.3]).unwrap(), gaussian_density(&v, &[0.3]).unwrap());
        let odd = Polynomial::monomial(MultiIndex::new(vec![3]), 2.5);
        assert!(apply_operator(&odd, &v, &[0.0]).unwrap().abs() < 1e-15);
        let too_high = Polynomial::monomial(MultiIndex::new(vec![7]), 1.0);
        assert!(apply_operator(&too_high, &v, &[0.0]).is_err());
    }
}
