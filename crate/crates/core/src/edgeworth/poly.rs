use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

use crate::measure::MultiIndex;

/// Real polynomial in d variables, stored as a map from exponent vectors to
/// coefficients. Used both for polynomials in x and for operators in D.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

#[derive(Serialize)]
struct Term<'a> {
    exponents: &'a [u32],
    coeff: f64,
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let terms: Vec<Term<'_>> = self
            .terms
            .iter()
            .map(|(nu, &c)| Term {
                exponents: nu.exponents(),
                coeff: c,
            })
            .collect();
        terms.serialize(s)
    }
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Polynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(MultiIndex::zero(dim), c);
        p
    }

    pub fn monomial(nu: MultiIndex, c: f64) -> Self {
        let mut p = Self::zero(nu.dim());
        p.add_term(nu, c);
        p
    }

    /// Σ_j a_j x_j.
    pub fn linear(coeffs: &[f64]) -> Self {
        let d = coeffs.len();
        let mut p = Self::zero(d);
        for (j, &a) in coeffs.iter().enumerate() {
            p.add_term(MultiIndex::unit(d, j), a);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add_term(&mut self, nu: MultiIndex, c: f64) {
        debug_assert_eq!(nu.dim(), self.dim);
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(nu).or_insert(0.0);
        *entry += c;
    }

    pub fn coefficient(&self, nu: &MultiIndex) -> f64 {
        self.terms.get(nu).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> + '_ {
        self.terms.iter().map(|(k, &v)| (k, v))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|&c| c == 0.0)
    }

    /// Highest total degree with a nonzero coefficient (0 for the zero polynomial).
    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .filter(|(_, &c)| c != 0.0)
            .map(|(k, _)| k.order())
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut p = Self::zero(self.dim);
        for (nu, c) in self.terms() {
            p.add_term(nu.clone(), c * s);
        }
        p
    }

    /// ∂/∂x_j.
    pub fn derivative(&self, j: usize) -> Self {
        let mut p = Self::zero(self.dim);
        for (nu, c) in self.terms() {
            if let Some(lower) = nu.decrement(j) {
                p.add_term(lower, c * nu.exponents()[j] as f64);
            }
        }
        p
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(nu, &c)| c * nu.monomial(x)).sum()
    }

    /// Terms of total degree ≤ `max_degree`.
    pub fn truncate(&self, max_degree: u32) -> Self {
        Polynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.order() <= max_degree)
                .map(|(k, &v)| (k.clone(), v))
                .collect(),
        }
    }

    /// Product truncated at total degree `max_degree`.
    pub fn mul_truncated(&self, other: &Self, max_degree: u32) -> Self {
        let mut p = Self::zero(self.dim);
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                if a.order() + b.order() <= max_degree {
                    p.add_term(a.add(b), ca * cb);
                }
            }
        }
        p
    }

    /// Largest |coefficient| among monomials whose degree has the given parity.
    pub fn max_coeff_with_parity(&self, odd: bool) -> f64 {
        self.terms
            .iter()
            .filter(|(k, _)| (k.order() % 2 == 1) == odd)
            .map(|(_, c)| c.abs())
            .fold(0.0, f64::max)
    }

    pub fn is_homogeneous(&self, degree: u32) -> bool {
        self.terms.iter().all(|(k, &c)| c == 0.0 || k.order() == degree)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut p = self.clone();
        for (nu, c) in rhs.terms() {
            p.add_term(nu.clone(), c);
        }
        p
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.mul_truncated(rhs, u32::MAX)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(k: u32) -> MultiIndex {
        MultiIndex::new(vec![k])
    }

    #[test]
    fn arithmetic() {
        let p = &Polynomial::constant(1, 1.0) + &Polynomial::monomial(x(1), 2.0); // 1 + 2x
        let sq = &p * &p; // 1 + 4x + 4x²
        assert_eq!(sq.coefficient(&x(0)), 1.0);
        assert_eq!(sq.coefficient(&x(1)), 4.0);
        assert_eq!(sq.coefficient(&x(2)), 4.0);
        assert_eq!(sq.degree(), 2);
        assert_eq!(sq.eval(&[0.5]), 4.0);
        assert_eq!(sq.derivative(0).eval(&[1.0]), 12.0);
        assert_eq!(sq.mul_truncated(&p, 1).degree(), 1);
        assert!((&sq - &sq).is_zero());
    }

    #[test]
    fn parity_and_homogeneity() {
        let mut p = Polynomial::zero(2);
        p.add_term(MultiIndex::new(vec![2, 1]), 1.5);
        p.add_term(MultiIndex::new(vec![0, 3]), -2.0);
        assert!(p.is_homogeneous(3));
        assert_eq!(p.max_coeff_with_parity(false), 0.0);
        assert_eq!(p.max_coeff_with_parity(true), 2.0);
    }
}
