use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

/// A point of the integer lattice Z^d.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct LatticePoint(pub Vec<i64>);

impl LatticePoint {
    pub fn new(coords: Vec<i64>) -> Self {
        LatticePoint(coords)
    }

    pub fn origin(dim: usize) -> Self {
        LatticePoint(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn norm_sq(&self) -> i64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }

    pub fn neg(&self) -> LatticePoint {
        LatticePoint(self.0.iter().map(|c| -c).collect())
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl From<Vec<i64>> for LatticePoint {
    fn from(v: Vec<i64>) -> Self {
        LatticePoint(v)
    }
}

/// Exponent vector ν of a monomial x^ν.
///
/// Ordered by total degree first, then lexicographically with larger leading
/// exponents first, so `x²` sorts before `xy` before `y²`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn unit(dim: usize, j: usize) -> Self {
        let mut e = vec![0; dim];
        e[j] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// Total degree |ν|.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&k| factorial(k)).product()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn increment(&self, j: usize) -> MultiIndex {
        let mut e = self.0.clone();
        e[j] += 1;
        MultiIndex(e)
    }

    /// `None` when the j-th exponent is already zero.
    pub fn decrement(&self, j: usize) -> Option<MultiIndex> {
        if self.0[j] == 0 {
            return None;
        }
        let mut e = self.0.clone();
        e[j] -= 1;
        Some(MultiIndex(e))
    }

    /// Number of nonzero exponents.
    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|&&k| k > 0).count()
    }

    /// x^ν for a real point.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&k, &xi)| xi.powi(k as i32))
            .product()
    }

    /// x^ν for a lattice point, as a float.
    pub fn monomial_int(&self, x: &[i64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&k, &xi)| (xi as f64).powi(k as i32))
            .product()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub(crate) fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// All multi-indices of dimension `dim` with exactly total degree `order`.
pub fn indices_of_order(dim: usize, order: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut current = vec![0u32; dim];
    fill(dim, 0, order, &mut current, &mut out);
    out.sort();
    out
}

fn fill(dim: usize, pos: usize, remaining: u32, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if dim == 0 {
        if remaining == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return;
    }
    if pos == dim - 1 {
        current[pos] = remaining;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for k in (0..=remaining).rev() {
        current[pos] = k;
        fill(dim, pos + 1, remaining - k, current, out);
    }
    current[pos] = 0;
}

/// All multi-indices with total degree at most `max_order`, in graded order.
pub fn indices_up_to(dim: usize, max_order: u32) -> Vec<MultiIndex> {
    (0..=max_order)
        .flat_map(|r| indices_of_order(dim, r))
        .collect()
}
