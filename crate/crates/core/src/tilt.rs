//! Exponential tilting: G_t(x) = G(x) e^{t·x} / Z(t).
//!
//! The gradient of log Z is the mean of G_t and its Hessian the covariance of
//! G_t, so the tilt equation D log Z(t) = ξ is solved by Newton's method with
//! the tilted covariance as Jacobian. All sums subtract max t·x first.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{LcltError, Result};
use crate::measure::{covariance, support_hull, CovarianceMatrix, LatticeMeasure, LatticePoint};
use crate::oracle::power_dp;

pub const NEWTON_TOL: f64 = 1e-11;
pub const NEWTON_MAX_ITER: usize = 200;
const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-12;
/// ln(f64::MAX), the largest log Z that still exponentiates.
const LOG_MAX: f64 = 709.78;

#[derive(Clone, Debug)]
pub struct TiltSolution {
    pub xi: Vec<f64>,
    pub t: Vec<f64>,
    pub log_z: f64,
    pub rate: f64,
    pub tilted: LatticeMeasure,
    pub tilted_cov: CovarianceMatrix,
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn exponents(m: &LatticeMeasure, t: &[f64]) -> Vec<f64> {
    m.points().iter().map(|x| dot(t, &x.to_f64())).collect()
}

/// (max t·x, Σ G(x) e^{t·x − max}).
fn shifted_sum(m: &LatticeMeasure, t: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
    m.check_dim(t.len())?;
    if t.iter().any(|v| !v.is_finite()) {
        return Err(LcltError::Overflow(format!("non-finite tilt parameter {t:?}")));
    }
    let s = exponents(m, t);
    let shift = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = m.probs().iter().zip(&s).map(|(p, si)| p * (si - shift).exp()).collect();
    let total = w.iter().sum();
    Ok((shift, w, total))
}

pub fn log_partition(m: &LatticeMeasure, t: &[f64]) -> Result<f64> {
    let (shift, _, total) = shifted_sum(m, t)?;
    Ok(shift + f64::ln(total))
}

/// Z(t) = Σ_x e^{t·x} G(x).
pub fn partition_fn(m: &LatticeMeasure, t: &[f64]) -> Result<f64> {
    let lz = log_partition(m, t)?;
    if lz > LOG_MAX {
        return Err(LcltError::Overflow(format!("log Z(t) = {lz} exceeds the double range")));
    }
    Ok(lz.exp())
}

/// Normalized tilted weights, in the order of `m.points()`.
fn tilted_weights(m: &LatticeMeasure, t: &[f64]) -> Result<Vec<f64>> {
    let (_, w, total) = shifted_sum(m, t)?;
    Ok(w.into_iter().map(|v| v / total).collect())
}

fn mean_cov(m: &LatticeMeasure, w: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let d = m.dim();
    let mut mean = vec![0.0; d];
    for (x, &p) in m.points().iter().zip(w) {
        for (mj, &xj) in mean.iter_mut().zip(x.coords()) {
            *mj += p * xj as f64;
        }
    }
    let mut cov = DMatrix::zeros(d, d);
    for (x, &p) in m.points().iter().zip(w) {
        let c: Vec<f64> = x.coords().iter().zip(&mean).map(|(&a, b)| a as f64 - b).collect();
        for j in 0..d {
            for k in 0..d {
                cov[(j, k)] += p * c[j] * c[k];
            }
        }
    }
    (mean, cov)
}

/// (D log Z(t), D² log Z(t)): mean and covariance of G_t.
pub fn grad_hess_log_z(m: &LatticeMeasure, t: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let w = tilted_weights(m, t)?;
    Ok(mean_cov(m, &w))
}

pub fn tilt_measure(m: &LatticeMeasure, t: &[f64]) -> Result<LatticeMeasure> {
    Ok(m.with_weights(tilted_weights(m, t)?))
}

fn residual_at(m: &LatticeMeasure, t: &[f64], xi: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>, f64)> {
    let (g, h) = grad_hess_log_z(m, t)?;
    let f: Vec<f64> = g.iter().zip(xi).map(|(a, b)| a - b).collect();
    let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok((f, h, norm))
}

/// Solves D log Z(t) = ξ by damped Newton from t = 0.
pub fn solve_tilt(m: &LatticeMeasure, xi: &[f64]) -> Result<TiltSolution> {
    m.check_dim(xi.len())?;
    covariance(m).inverse()?;
    if !support_hull(m).contains_interior(xi)? {
        return Err(LcltError::NotInterior(xi.to_vec()));
    }
    let d = m.dim();
    let mut t = vec![0.0; d];
    let (mut f, mut h, mut norm) = residual_at(m, &t, xi)?;
    let mut iterations = 0;
    while norm > NEWTON_TOL {
        if iterations == NEWTON_MAX_ITER {
            return Err(LcltError::NoConvergence {
                iterations,
                residual: norm,
            });
        }
        iterations += 1;
        let rhs = DVector::from_iterator(d, f.iter().map(|v| -v));
        let step = h
            .clone()
            .cholesky()
            .map(|c| c.solve(&rhs))
            .ok_or_else(|| LcltError::NumericalFailure(format!("tilted covariance not positive definite at t = {t:?}")))?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = t.iter().zip(step.iter()).map(|(a, s)| a + lambda * s).collect();
            let (tf, th, tn) = residual_at(m, &trial, xi)?;
            if tn <= (1.0 - ARMIJO_C * lambda) * norm || (lambda < MIN_STEP && tn < norm) {
                t = trial;
                f = tf;
                h = th;
                norm = tn;
                break;
            }
            lambda *= 0.5;
            if lambda < MIN_STEP {
                return Err(LcltError::NoConvergence {
                    iterations,
                    residual: norm,
                });
            }
        }
    }
    let log_z = log_partition(m, &t)?;
    // I ≥ 0 exactly; rounding can leave a tiny negative value near ξ = E
    let rate = (dot(&t, xi) - log_z).max(0.0);
    let tilted = tilt_measure(m, &t)?;
    let tilted_cov = CovarianceMatrix::from_matrix(h)?;
    Ok(TiltSolution {
        xi: xi.to_vec(),
        t,
        log_z,
        rate,
        tilted,
        tilted_cov,
        iterations,
        residual: norm,
    })
}

/// I(ξ) = sup_t {t·ξ − log Z(t)}.
pub fn rate_fn(m: &LatticeMeasure, xi: &[f64]) -> Result<f64> {
    Ok(solve_tilt(m, xi)?.rate)
}

/// (exp[−nI(x/n)], G_{t_ξ}^{*n}(x)); their product is G^{*n}(x).
pub fn factorize(m: &LatticeMeasure, n: usize, x: &LatticePoint) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(LcltError::Precondition("n must be at least 1".into()));
    }
    m.check_dim(x.dim())?;
    let xi: Vec<f64> = x.to_f64().iter().map(|v| v / n as f64).collect();
    let sol = solve_tilt(m, &xi)?;
    let local = power_dp(&sol.tilted, n, false)?.prob(x);
    Ok(((-(n as f64) * sol.rate).exp(), local))
}

/// exp[−|x|²/(2dℓ²n)], an upper bound for G^{*n}(x) when E = 0.
pub fn tail_bound(m: &LatticeMeasure, n: usize, x: &LatticePoint) -> Result<f64> {
    if n == 0 {
        return Err(LcltError::Precondition("n must be at least 1".into()));
    }
    m.check_dim(x.dim())?;
    if !m.is_centered(1e-12) {
        return Err(LcltError::Precondition(format!(
            "tail bound needs mean zero, mean is {:?}",
            m.mean()
        )));
    }
    let l = m.steplength() as f64;
    Ok((-(x.norm_sq() as f64) / (2.0 * m.dim() as f64 * l * l * n as f64)).exp())
}

/// φ_η(x) with η = 2dℓ²n.
pub fn comparison_gaussian(d: usize, steplength: u64, n: usize, x: &LatticePoint) -> f64 {
    comparison_gaussian_at(d, steplength, n, &x.to_f64())
}

pub fn comparison_gaussian_at(d: usize, steplength: u64, n: usize, x: &[f64]) -> f64 {
    let l = steplength as f64;
    let eta = 2.0 * d as f64 * l * l * n as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (2.0 * PI * eta).powf(-(d as f64) / 2.0) * (-r2 / (2.0 * eta)).exp()
}
