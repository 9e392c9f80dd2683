#![allow(dead_code)]

use lclt_core::measure::{load_measure, LatticeMeasure};
use proptest::prelude::*;

pub fn measure(text: &str) -> LatticeMeasure {
    load_measure(text).expect("fixture parses")
}

pub fn lazy() -> LatticeMeasure {
    measure("dim 1\nsteplength 1\n-1 1/4\n0 1/2\n1 1/4\n")
}

/// Mean zero, χ₃ ≠ 0.
pub fn skewed() -> LatticeMeasure {
    measure("dim 1\nsteplength 2\n-1 2/5\n0 3/10\n1 1/5\n2 1/10\n")
}

/// Product of two lazy walks.
pub fn lazy2() -> LatticeMeasure {
    measure(
        "dim 2\nsteplength 2\n\
         -1 -1 1/16\n-1 0 1/8\n-1 1 1/16\n\
         0 -1 1/8\n0 0 1/4\n0 1 1/8\n\
         1 -1 1/16\n1 0 1/8\n1 1 1/16\n",
    )
}

/// Two-dimensional, correlated, with drift.
pub fn tilted2() -> LatticeMeasure {
    measure("dim 2\nsteplength 1\n0 0 0.3\n1 0 0.25\n0 1 0.2\n-1 0 0.1\n0 -1 0.15\n")
}

/// Two-dimensional, mean zero, correlated, χ₃ ≠ 0.
pub fn skewed2() -> LatticeMeasure {
    measure("dim 2\nsteplength 2\n0 0 0.4\n1 1 0.2\n-1 0 0.2\n0 -1 0.2\n")
}

fn binomial(k: u32, m: u32) -> f64 {
    (0..m).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64)
}

/// Central difference estimate of ∂^ν f at x with step h (error O(h²)).
fn central<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], nu: &[u32], h: f64) -> f64 {
    fn rec<F: Fn(&[f64]) -> f64>(f: &F, y: &mut Vec<f64>, nu: &[u32], j: usize, h: f64) -> f64 {
        if j == nu.len() {
            return f(y);
        }
        let k = nu[j];
        if k == 0 {
            return rec(f, y, nu, j + 1, h);
        }
        let base = y[j];
        let mut s = 0.0;
        for m in 0..=k {
            y[j] = base + (k as f64 / 2.0 - m as f64) * h;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * binomial(k, m) * rec(f, y, nu, j + 1, h);
        }
        y[j] = base;
        s / h.powi(k as i32)
    }
    rec(f, &mut x.to_vec(), nu, 0, h)
}

/// ∂^ν f(x) by central differences with two Richardson steps (error O(h⁶)).
pub fn richardson<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], nu: &[u32], h: f64) -> f64 {
    let d0 = central(&f, x, nu, h);
    let d1 = central(&f, x, nu, h / 2.0);
    let d2 = central(&f, x, nu, h / 4.0);
    let r0 = (4.0 * d1 - d0) / 3.0;
    let r1 = (4.0 * d2 - d1) / 3.0;
    (16.0 * r1 - r0) / 15.0
}

/// Random measure on {−1,0,1}^d with every weight at least `floor`; always
/// maximal and aperiodic (0 and ±e_j are in the support).
pub fn random_measure(dim: usize) -> impl Strategy<Value = LatticeMeasure> {
    let cells = 3usize.pow(dim as u32);
    prop::collection::vec(1u32..100, cells).prop_map(move |w| {
        let total: u32 = w.iter().sum();
        let mut text = format!("dim {dim}\nsteplength {dim}\n");
        for (i, wi) in w.iter().enumerate() {
            let mut c = i;
            for _ in 0..dim {
                text.push_str(&format!("{} ", (c % 3) as i64 - 1));
                c /= 3;
            }
            text.push_str(&format!("{wi}/{total}\n"));
        }
        measure(&text)
    })
}

/// Random symmetric measure on {−2,…,2}: mean zero by construction.
pub fn random_symmetric_1d() -> impl Strategy<Value = LatticeMeasure> {
    (1u32..50, 1u32..50, 0u32..50).prop_map(|(a, b, c)| {
        let total = a + 2 * b + 2 * c;
        measure(&format!(
            "dim 1\nsteplength 2\n0 {a}/{total}\n-1 {b}/{total}\n1 {b}/{total}\n-2 {c}/{total}\n2 {c}/{total}\n"
        ))
    })
}

/// Random mean-zero measure on {−2,…,2} with free weights on −1, 0, 1 and
/// the ±2 weights chosen to cancel the drift.
pub fn random_centered_1d() -> impl Strategy<Value = LatticeMeasure> {
    (1u32..40, 1u32..40, 1u32..40, 1u32..20).prop_map(|(a, b, c, e)| {
        // drift of {−1: b, 1: c} is c − b, cancelled by 2·(w₂ − w₋₂)
        let (wm2, w2) = if c >= b { (2 * e + (c - b), 2 * e) } else { (2 * e, 2 * e + (b - c)) };
        let (b, c, a) = (2 * b, 2 * c, 2 * a);
        let t = a + b + c + wm2 + w2;
        measure(&format!(
            "dim 1\nsteplength 2\n-2 {wm2}/{t}\n-1 {b}/{t}\n0 {a}/{t}\n1 {c}/{t}\n2 {w2}/{t}\n"
        ))
    })
}
