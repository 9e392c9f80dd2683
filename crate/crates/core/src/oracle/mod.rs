//! Exact n-step distributions G^{*n}, by two independent routes:
//! repeated convolution (optionally in rational arithmetic) and inversion of
//! the characteristic function on an alias-free frequency grid.

mod grid;

use std::sync::Arc;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

pub use grid::Grid;

use crate::error::{LcltError, Result};
use crate::measure::{write_measure, LatticeMeasure, LatticePoint};
use crate::par;

/// Float values below this are flushed to zero.
pub const UNDERFLOW_FLUSH: f64 = 1e-300;
/// Largest imaginary residue tolerated after the inverse transform.
pub const IMAG_TOL: f64 = 1e-10;
/// Mass tolerance for float n-step distributions.
pub const CONVOLVED_MASS_TOL: f64 = 1e-9;
/// Default cap on the number of grid cells an oracle may allocate.
pub const DEFAULT_MAX_CELLS: usize = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Dp,
    Dft,
}

/// G^{*n} on the box of lattice points it can charge.
#[derive(Clone, Debug)]
pub struct ConvolvedMeasure {
    pub n: usize,
    /// n·ℓ, the steplength bound of the n-step distribution.
    pub steplength: u64,
    pub provenance: Provenance,
    grid: Grid<f64>,
    exact: Option<Grid<BigRational>>,
}

impl ConvolvedMeasure {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.grid
    }

    pub fn prob(&self, x: &LatticePoint) -> f64 {
        self.grid.get(x.coords()).copied().unwrap_or(0.0)
    }

    pub fn prob_at(&self, x: &[i64]) -> f64 {
        self.grid.get(x).copied().unwrap_or(0.0)
    }

    /// Exact value; only on the rational DP route.
    pub fn exact_prob(&self, x: &LatticePoint) -> Option<BigRational> {
        let g = self.exact.as_ref()?;
        Some(g.get(x.coords()).cloned().unwrap_or_else(BigRational::zero))
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Every cell of the stored box, zeros included.
    pub fn cells(&self) -> impl Iterator<Item = (LatticePoint, f64)> + '_ {
        (0..self.grid.len()).map(move |i| (LatticePoint(self.grid.coords_of(i)), self.grid.data[i]))
    }

    /// Points with positive probability.
    pub fn support(&self) -> impl Iterator<Item = (LatticePoint, f64)> + '_ {
        self.cells().filter(|(_, p)| *p > 0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.grid.data.iter().sum()
    }

    pub fn exact_total_mass(&self) -> Option<BigRational> {
        self.exact
            .as_ref()
            .map(|g| g.data.iter().fold(BigRational::zero(), |acc, v| acc + v))
    }

    pub fn to_measure(&self) -> Result<LatticeMeasure> {
        let mut entries = Vec::new();
        let mut exact = Vec::new();
        for i in 0..self.grid.len() {
            let p = self.grid.data[i];
            let q = self.exact.as_ref().map(|g| &g.data[i]);
            let nonzero = match q {
                Some(q) => !q.is_zero(),
                None => p > 0.0,
            };
            if nonzero {
                entries.push((LatticePoint(self.grid.coords_of(i)), p));
                if let Some(q) = q {
                    exact.push(q.clone());
                }
            }
        }
        let exact = self.exact.is_some().then_some(exact);
        LatticeMeasure::from_parts(self.dim(), self.steplength, entries, exact, CONVOLVED_MASS_TOL)
    }

    /// Measure file text with a `# n = <n>` header.
    pub fn to_text(&self) -> Result<String> {
        Ok(write_measure(&self.to_measure()?, &[format!("n = {}", self.n)]))
    }
}

/// Limits shared by both oracle routes.
#[derive(Clone, Copy, Debug)]
pub struct OracleLimits {
    pub max_cells: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_cells: DEFAULT_MAX_CELLS,
        }
    }
}

fn float_grid(m: &LatticeMeasure) -> Grid<f64> {
    let d = m.dim();
    let lo: Vec<i64> = (0..d).map(|j| m.points().iter().map(|x| x.coords()[j]).min().unwrap()).collect();
    let hi: Vec<i64> = (0..d).map(|j| m.points().iter().map(|x| x.coords()[j]).max().unwrap()).collect();
    let shape = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as usize).collect();
    let mut g = Grid::filled(lo, shape, 0.0);
    for (x, p) in m.iter() {
        let i = g.index_of(x.coords()).unwrap();
        g.data[i] = p;
    }
    g
}

fn exact_grid(m: &LatticeMeasure) -> Grid<BigRational> {
    let f = float_grid(m);
    let mut g = Grid::filled(f.lo.clone(), f.shape.clone(), BigRational::zero());
    let exact: Vec<BigRational> = match m.exact_probs() {
        Some(q) => q.to_vec(),
        // every finite double is a dyadic rational
        None => m.probs().iter().map(|&p| BigRational::from_float(p).unwrap()).collect(),
    };
    for (x, q) in m.points().iter().zip(exact) {
        let i = g.index_of(x.coords()).unwrap();
        g.data[i] = q;
    }
    g
}

fn conv_f64(a: &Grid<f64>, b: &Grid<f64>) -> Grid<f64> {
    let mut g = grid::convolve(a, b, || 0.0, |v| *v == 0.0, |acc, x, y| *acc += x * y);
    for v in &mut g.data {
        if *v < UNDERFLOW_FLUSH {
            *v = 0.0;
        }
    }
    g
}

fn conv_exact(a: &Grid<BigRational>, b: &Grid<BigRational>) -> Grid<BigRational> {
    grid::convolve(a, b, BigRational::zero, |v| v.is_zero(), |acc, x, y| *acc += x * y)
}

/// (a * b)(x) = Σ_y a(y) b(x − y); exact when both inputs carry rationals.
pub fn convolve(a: &LatticeMeasure, b: &LatticeMeasure) -> Result<LatticeMeasure> {
    a.check_dim(b.dim())?;
    let steplength = a.steplength() + b.steplength();
    if a.exact_probs().is_some() && b.exact_probs().is_some() {
        let (ea, eb) = (exact_grid(a), exact_grid(b));
        let c = conv_exact(&ea, &eb);
        let floats = Grid {
            lo: c.lo.clone(),
            shape: c.shape.clone(),
            strides: c.strides.clone(),
            data: c.data.iter().map(|q| q.to_f64().unwrap_or(0.0)).collect(),
        };
        ConvolvedMeasure {
            n: 2,
            steplength,
            provenance: Provenance::Dp,
            grid: floats,
            exact: Some(c),
        }
        .to_measure()
    } else {
        let c = conv_f64(&float_grid(a), &float_grid(b));
        ConvolvedMeasure {
            n: 2,
            steplength,
            provenance: Provenance::Dp,
            grid: c,
            exact: None,
        }
        .to_measure()
    }
}

fn check_cells(m: &LatticeMeasure, n: usize, limits: OracleLimits) -> Result<()> {
    let f = float_grid(m);
    let mut cells: usize = 1;
    for &s in &f.shape {
        let side = n
            .checked_mul(s - 1)
            .and_then(|v| v.checked_add(1))
            .ok_or_else(|| LcltError::ResourceLimit("grid side overflows".into()))?;
        cells = cells
            .checked_mul(side)
            .ok_or_else(|| LcltError::ResourceLimit("grid size overflows".into()))?;
    }
    if cells > limits.max_cells {
        return Err(LcltError::ResourceLimit(format!(
            "G^*{n} needs {cells} cells, cap is {}",
            limits.max_cells
        )));
    }
    Ok(())
}

/// G^{*n} by binary exponentiation of the convolution.
pub fn power_dp(m: &LatticeMeasure, n: usize, exact: bool) -> Result<ConvolvedMeasure> {
    power_dp_with(m, n, exact, OracleLimits::default())
}

pub fn power_dp_with(m: &LatticeMeasure, n: usize, exact: bool, limits: OracleLimits) -> Result<ConvolvedMeasure> {
    if n == 0 {
        return Err(LcltError::Precondition("n must be at least 1".into()));
    }
    check_cells(m, n, limits)?;
    let steplength = n as u64 * m.steplength();
    if exact {
        let g = binary_power(exact_grid(m), n, conv_exact);
        let floats = Grid {
            lo: g.lo.clone(),
            shape: g.shape.clone(),
            strides: g.strides.clone(),
            data: g.data.iter().map(|q| q.to_f64().unwrap_or(0.0)).collect(),
        };
        Ok(ConvolvedMeasure {
            n,
            steplength,
            provenance: Provenance::Dp,
            grid: floats,
            exact: Some(g),
        })
    } else {
        Ok(ConvolvedMeasure {
            n,
            steplength,
            provenance: Provenance::Dp,
            grid: binary_power(float_grid(m), n, conv_f64),
            exact: None,
        })
    }
}

fn binary_power<T: Clone>(base: Grid<T>, mut n: usize, mul: impl Fn(&Grid<T>, &Grid<T>) -> Grid<T>) -> Grid<T> {
    let mut acc: Option<Grid<T>> = None;
    let mut base = base;
    loop {
        if n & 1 == 1 {
            acc = Some(match acc {
                Some(a) => mul(&a, &base),
                None => base.clone(),
            });
        }
        n >>= 1;
        if n == 0 {
            break;
        }
        base = mul(&base, &base);
    }
    acc.expect("n >= 1")
}

/// Ĥ(t) = Σ_x e^{i t·x} H(x).
pub fn char_fn(m: &LatticeMeasure, t: &[f64]) -> Result<Complex64> {
    m.check_dim(t.len())?;
    Ok(m.iter()
        .map(|(x, p)| {
            let phase: f64 = x.coords().iter().zip(t).map(|(&xi, ti)| xi as f64 * ti).sum();
            Complex64::from_polar(p, phase)
        })
        .sum())
}

/// Grid size per axis: the smallest power of two ≥ 2ℓn + 1.
pub fn dft_grid_side(steplength: u64, n: usize) -> usize {
    (2 * steplength as usize * n + 1).next_power_of_two()
}

/// G^{*n} by Fourier inversion: Ĥ on M^d equispaced frequencies, raised to
/// the n-th power, transformed back. Since the support of G^{*n} fits in the
/// grid there is no wrap-around, so the values are exact up to rounding.
pub fn power_dft(m: &LatticeMeasure, n: usize) -> Result<ConvolvedMeasure> {
    power_dft_with(m, n, OracleLimits::default())
}

pub fn power_dft_with(m: &LatticeMeasure, n: usize, limits: OracleLimits) -> Result<ConvolvedMeasure> {
    if n == 0 {
        return Err(LcltError::Precondition("n must be at least 1".into()));
    }
    let d = m.dim();
    let side = dft_grid_side(m.steplength(), n);
    let total = side
        .checked_pow(d as u32)
        .filter(|&c| c <= limits.max_cells)
        .ok_or_else(|| LcltError::ResourceLimit(format!("DFT grid {side}^{d} exceeds cap {}", limits.max_cells)))?;

    let shape = vec![side; d];
    let strides = grid::strides_for(&shape);
    let mut data = vec![Complex64::new(0.0, 0.0); total];
    let wrap = |x: &[i64]| -> usize {
        x.iter()
            .zip(&strides)
            .map(|(&c, &s)| c.rem_euclid(side as i64) as usize * s)
            .sum()
    };
    for (x, p) in m.iter() {
        data[wrap(x.coords())] = Complex64::new(p, 0.0);
    }

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(side);
    let inverse = planner.plan_fft_inverse(side);
    fft_all_axes(&mut data, &shape, &forward);
    let n32 = u32::try_from(n).map_err(|_| LcltError::ResourceLimit("n too large".into()))?;
    par::for_each_chunk_mut(&mut data, 4096, |chunk| {
        for v in chunk {
            *v = v.powu(n32);
        }
    });
    fft_all_axes(&mut data, &shape, &inverse);
    let scale = 1.0 / total as f64;

    let nl = n as i64 * m.steplength() as i64;
    let out_shape = vec![2 * nl as usize + 1; d];
    let mut out = Grid::filled(vec![-nl; d], out_shape, 0.0);
    let mut worst_imag: f64 = 0.0;
    for i in 0..out.len() {
        let x = out.coords_of(i);
        let r2: i64 = x.iter().map(|c| c * c).sum();
        if r2 > nl * nl {
            continue;
        }
        let v = data[wrap(&x)] * scale;
        worst_imag = worst_imag.max(v.im.abs());
        out.data[i] = if v.re < UNDERFLOW_FLUSH { 0.0 } else { v.re };
    }
    if worst_imag > IMAG_TOL {
        return Err(LcltError::NumericalFailure(format!(
            "imaginary residue {worst_imag:e} exceeds {IMAG_TOL:e}"
        )));
    }
    Ok(ConvolvedMeasure {
        n,
        steplength: nl as u64,
        provenance: Provenance::Dft,
        grid: out,
        exact: None,
    })
}

fn fft_all_axes(data: &mut [Complex64], shape: &[usize], fft: &Arc<dyn Fft<f64>>) {
    let strides = grid::strides_for(shape);
    let total = data.len();
    for axis in 0..shape.len() {
        let len = shape[axis];
        let stride = strides[axis];
        let lines = total / len;
        // start offset of each line along `axis`
        let start = |l: usize| {
            let outer = l / stride;
            let inner = l % stride;
            outer * stride * len + inner
        };
        let src: &[Complex64] = data;
        let transformed: Vec<Vec<Complex64>> = par::map_range(lines, |l| {
            let s = start(l);
            let mut buf: Vec<Complex64> = (0..len).map(|k| src[s + k * stride]).collect();
            fft.process(&mut buf);
            buf
        });
        for (l, buf) in transformed.into_iter().enumerate() {
            let s = start(l);
            for (k, v) in buf.into_iter().enumerate() {
                data[s + k * stride] = v;
            }
        }
    }
}
