//! χ₃*²(D)φ_V is the convolution of χ₃(D)φ_{V/2} with itself: both sides
//! have Fourier transform χ₃(it)² e^{−t·Vt/2}. The left side is evaluated by
//! trapezoid quadrature, independently of the polynomial-square construction.

mod common;

use common::*;
use lclt_core::edgeworth::{gaussian_density, EdgeworthModel, HermiteTable};
use lclt_core::measure::LatticeMeasure;

fn half_factor(model: &EdgeworthModel) -> (lclt_core::edgeworth::Polynomial, lclt_core::measure::CovarianceMatrix) {
    let half = model.covariance().scaled(0.5).unwrap();
    let q = HermiteTable::new(&half, 3).unwrap().operator_factor(&model.chi3().poly).unwrap();
    (q, half)
}

fn check(m: &LatticeMeasure, step: f64, points: &[Vec<f64>]) {
    let model = EdgeworthModel::build(m).unwrap();
    let (q, half) = half_factor(&model);
    let d = m.dim();
    let f = |y: &[f64]| q.eval(y) * gaussian_density(&half, y).unwrap();
    let reach = 10.0 * half.largest_eigenvalue().sqrt();
    let k = (reach / step).ceil() as i64;
    let nodes: Vec<f64> = (-k..=k).map(|i| i as f64 * step).collect();
    for x in points {
        let mut total = 0.0;
        let mut idx = vec![0usize; d];
        'outer: loop {
            let y: Vec<f64> = idx.iter().map(|&i| nodes[i]).collect();
            let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            total += f(&y) * f(&z);
            for j in 0..d {
                idx[j] += 1;
                if idx[j] < nodes.len() {
                    continue 'outer;
                }
                idx[j] = 0;
            }
            break;
        }
        // trapezoid weights are 1 except at the ends, where f is negligible
        let quad = total * step.powi(d as i32);
        let direct = model.q33().eval(x) * gaussian_density(model.covariance(), x).unwrap();
        assert!((quad - direct).abs() < 1e-6, "x = {x:?}: quadrature {quad} vs {direct}");
    }
}

#[test]
fn squared_operator_is_self_convolution_1d() {
    let pts: Vec<Vec<f64>> = [-1.7, -0.4, 0.0, 0.9, 2.3].iter().map(|&x| vec![x]).collect();
    check(&skewed(), 1e-3, &pts);
}

#[test]
fn squared_operator_is_self_convolution_2d() {
    let pts = vec![vec![0.0, 0.0], vec![0.3, -0.2], vec![-0.5, 0.4], vec![0.8, 0.8], vec![-0.2, -0.9]];
    check(&skewed2(), 0.02, &pts);
    check(&tilted2(), 0.02, &pts);
}
