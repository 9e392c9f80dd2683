//! Error sweeps of the approximants against the exact oracle.
//!
//! A sweep computes G^{*n} once per n, evaluates the chosen approximant on
//! every lattice point of the ball |x| ≤ nℓ and records the sup error. In
//! theorem mode it also records the weighted error
//! E(n) = max_x |err(x)| / (n^{−1−α} φ_{2dℓ²n}(x)); cells whose weight falls
//! below [`WEIGHT_CUTOFF`] are instead checked against the Gaussian tail bound.

mod fit;
mod report;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

pub use fit::{fit_slope, SlopeFit, MIN_FIT_POINTS};
pub use report::{render_corollary, render_tilt, render_validation, ApproxRow};

use crate::edgeworth::EdgeworthModel;
use crate::error::{LcltError, Result};
use crate::measure::{LatticeMeasure, LatticePoint};
use crate::oracle::{power_dft, power_dp, ConvolvedMeasure};
use crate::par;
use crate::tilt::{comparison_gaussian, tail_bound};

/// Weights below this are too small for a meaningful ratio in doubles.
pub const WEIGHT_CUTOFF: f64 = 1e-280;
pub const DEFAULT_ALPHA: f64 = 0.25;
/// |nE − round(nE)| below this counts as a lattice point.
const INTEGRAL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Theorem,
    Lemma,
    Corollary,
    GaussianOnly,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Theorem, Mode::Lemma, Mode::Corollary, Mode::GaussianOnly];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Theorem => "theorem",
            Mode::Lemma => "lemma",
            Mode::Corollary => "corollary",
            Mode::GaussianOnly => "gaussian-only",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = LcltError;
    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| LcltError::Config(format!("unknown mode {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    /// Label written into the report, usually the measure file path.
    pub measure: String,
    pub n_list: Vec<usize>,
    pub alpha: f64,
    pub mode: Mode,
    /// Worker threads; 0 uses the library default.
    pub threads: usize,
}

impl SweepConfig {
    pub fn new(measure: impl Into<String>, n_list: Vec<usize>, alpha: f64, mode: Mode) -> Result<Self> {
        let c = SweepConfig {
            measure: measure.into(),
            n_list,
            alpha,
            mode,
            threads: 0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(LcltError::Config(format!("alpha must lie in (0, 1/2), got {}", self.alpha)));
        }
        if self.n_list.first().is_some_and(|&n| n == 0) {
            return Err(LcltError::Config("n values must be at least 1".into()));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LcltError::Config("n values must be strictly increasing".into()));
        }
        if self.n_list.len() < MIN_FIT_POINTS {
            return Err(LcltError::Config(format!(
                "a slope fit needs at least {MIN_FIT_POINTS} values of n, got {}",
                self.n_list.len()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRow {
    pub n: usize,
    pub sup_abs_err: f64,
    pub argmax_x: LatticePoint,
    /// E(n); theorem mode only.
    pub weighted_err: Option<f64>,
    pub skipped_cells: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub measure: String,
    pub mode: Mode,
    pub alpha: f64,
    pub rows: Vec<ErrorRow>,
    #[serde(rename = "C_hat")]
    pub c_hat: Option<f64>,
    pub slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl ErrorReport {
    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "sup_abs_err", "argmax_x", "weighted_err", "skipped_cells"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                format!("{:e}", r.sup_abs_err),
                r.argmax_x.to_string(),
                r.weighted_err.map(|e| format!("{e:e}")).unwrap_or_default(),
                r.skipped_cells.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }
}

/// All lattice points with |x| ≤ r.
pub fn ball_points(dim: usize, r: i64) -> Vec<LatticePoint> {
    let mut out = Vec::new();
    let mut x = vec![-r; dim];
    loop {
        if x.iter().map(|c| c * c).sum::<i64>() <= r * r {
            out.push(LatticePoint(x.clone()));
        }
        let mut j = 0;
        loop {
            if j == dim {
                return out;
            }
            if x[j] < r {
                x[j] += 1;
                break;
            }
            x[j] = -r;
            j += 1;
        }
    }
}

/// nE when it is a lattice point.
pub fn integral_mean_point(m: &LatticeMeasure, n: usize) -> Option<LatticePoint> {
    let mut coords = Vec::with_capacity(m.dim());
    for e in m.mean() {
        let v = e * n as f64;
        let r = v.round();
        if (v - r).abs() > INTEGRAL_TOL {
            return None;
        }
        coords.push(r as i64);
    }
    Some(LatticePoint(coords))
}

fn approximant(model: &EdgeworthModel, mode: Mode, n: usize, x: &LatticePoint) -> Result<f64> {
    match mode {
        Mode::Theorem => model.theorem_approximant(n, x),
        Mode::Lemma => Ok(model.lemma_approximant(n, x)),
        Mode::GaussianOnly => Ok(model.gaussian_approximant(n, x)),
        Mode::Corollary => Ok(model.corollary_value(n)),
    }
}

/// Weight n^{−1−α} φ_{2dℓ²n}(x) of the weighted error.
pub fn theorem_weight(m: &LatticeMeasure, n: usize, alpha: f64, x: &LatticePoint) -> f64 {
    (n as f64).powf(-1.0 - alpha) * comparison_gaussian(m.dim(), m.steplength(), n, x)
}

enum RowOutcome {
    Row(ErrorRow),
    /// nE is not a lattice point (corollary mode).
    Skipped,
    Violation(ErrorRow, String),
}

fn sweep_row(m: &LatticeMeasure, model: &EdgeworthModel, cfg: &SweepConfig, n: usize) -> Result<RowOutcome> {
    let exact = power_dp(m, n, false)?;
    if cfg.mode == Mode::Corollary {
        let Some(x) = integral_mean_point(m, n) else {
            return Ok(RowOutcome::Skipped);
        };
        let err = (exact.prob(&x) - model.corollary_value(n)).abs();
        return Ok(RowOutcome::Row(ErrorRow {
            n,
            sup_abs_err: err,
            argmax_x: x,
            weighted_err: None,
            skipped_cells: 0,
        }));
    }
    let radius = (m.steplength() as usize * n) as i64;
    let theorem = cfg.mode == Mode::Theorem;
    let mut sup = -1.0;
    let mut argmax = LatticePoint::origin(m.dim());
    let mut weighted = 0.0f64;
    let mut skipped = 0;
    let mut violation = None;
    for x in ball_points(m.dim(), radius) {
        let g = exact.prob(&x);
        let err = (g - approximant(model, cfg.mode, n, &x)?).abs();
        if err > sup {
            sup = err;
            argmax = x.clone();
        }
        if theorem {
            let w = theorem_weight(m, n, cfg.alpha, &x);
            if w >= WEIGHT_CUTOFF {
                weighted = weighted.max(err / w);
            } else {
                skipped += 1;
                let bound = tail_bound(m, n, &x)?;
                if g > bound && violation.is_none() {
                    violation = Some(format!("tail bound violated at n = {n}, x = {x}: {g:e} > {bound:e}"));
                }
            }
        }
    }
    let row = ErrorRow {
        n,
        sup_abs_err: sup,
        argmax_x: argmax,
        weighted_err: theorem.then_some(weighted),
        skipped_cells: skipped,
    };
    Ok(match violation {
        Some(msg) => RowOutcome::Violation(row, msg),
        None => RowOutcome::Row(row),
    })
}

/// Runs the sweep; rows come back sorted by n whatever the schedule.
///
/// A tail-bound violation does not raise: the report keeps the rows computed
/// so far and carries the message in `failure`.
pub fn sweep(m: &LatticeMeasure, cfg: &SweepConfig) -> Result<ErrorReport> {
    cfg.validate()?;
    let model = EdgeworthModel::build(m)?;
    if cfg.mode == Mode::Theorem {
        model.theorem_polynomials()?;
    }
    let outcomes = par::with_threads(cfg.threads, || {
        par::map_slice(&cfg.n_list, |&n| sweep_row(m, &model, cfg, n))
    });
    let mut rows = Vec::new();
    let mut failure = None;
    for outcome in outcomes {
        match outcome? {
            RowOutcome::Row(r) => rows.push(r),
            RowOutcome::Skipped => {}
            RowOutcome::Violation(r, msg) => {
                rows.push(r);
                failure = Some(msg);
                break;
            }
        }
    }
    let c_hat = if cfg.mode == Mode::Theorem {
        rows.iter().filter_map(|r| r.weighted_err).reduce(f64::max)
    } else {
        None
    };
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.sup_abs_err).collect();
    let fit = fit_slope(&xs, &ys);
    Ok(ErrorReport {
        measure: cfg.measure.clone(),
        mode: cfg.mode,
        alpha: cfg.alpha,
        rows,
        c_hat,
        slope: fit.map(|f| f.slope),
        slope_stderr: fit.map(|f| f.stderr),
        failure,
    })
}

/// One exact-vs-approximant comparison at (n, x).
pub fn approx(m: &LatticeMeasure, n: usize, x: &LatticePoint, mode: Mode, alpha: f64) -> Result<ApproxRow> {
    if n == 0 {
        return Err(LcltError::Precondition("n must be at least 1".into()));
    }
    m.check_dim(x.dim())?;
    let model = EdgeworthModel::build(m)?;
    if mode == Mode::Corollary && integral_mean_point(m, n).as_ref() != Some(x) {
        return Err(LcltError::Precondition(format!("corollary mode evaluates at x = nE only, got x = {x}")));
    }
    let value = approximant(&model, mode, n, x)?;
    let dp = power_dp(m, n, false)?;
    let dft = power_dft(m, n)?;
    let exact_dp = dp.prob(x);
    Ok(ApproxRow {
        n,
        x: x.clone(),
        mode,
        exact_dp,
        exact_dft: dft.prob(x),
        approximant: value,
        abs_err: (exact_dp - value).abs(),
        weight: theorem_weight(m, n, alpha, x),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorollaryRow {
    pub n: usize,
    /// None when nE is not a lattice point.
    pub point: Option<LatticePoint>,
    pub exact: Option<f64>,
    pub approx: f64,
    pub diff: Option<f64>,
    /// diff · n^{(d+3)/2}.
    pub scaled: Option<f64>,
}

/// H^{*n}(nE) against (2πn)^{−d/2} (det V)^{−1/2} (1 + L/n).
pub fn corollary_table(m: &LatticeMeasure, n_list: &[usize]) -> Result<Vec<CorollaryRow>> {
    if n_list.contains(&0) {
        return Err(LcltError::Config("n values must be at least 1".into()));
    }
    let model = EdgeworthModel::build(m)?;
    let d = m.dim() as f64;
    let rows = par::map_slice(n_list, |&n| -> Result<CorollaryRow> {
        let approx = model.corollary_value(n);
        let Some(x) = integral_mean_point(m, n) else {
            return Ok(CorollaryRow {
                n,
                point: None,
                exact: None,
                approx,
                diff: None,
                scaled: None,
            });
        };
        let exact = power_dp(m, n, false)?.prob(&x);
        let diff = exact - approx;
        Ok(CorollaryRow {
            n,
            point: Some(x),
            exact: Some(exact),
            approx,
            diff: Some(diff),
            scaled: Some(diff * (n as f64).powf((d + 3.0) / 2.0)),
        })
    });
    rows.into_iter().collect()
}

/// Largest |G^{*n} computed two ways| over the stored cells.
pub fn oracle_gap(a: &ConvolvedMeasure, b: &ConvolvedMeasure) -> f64 {
    a.cells()
        .map(|(x, p)| (p - b.prob(&x)).abs())
        .chain(b.cells().map(|(x, p)| (p - a.prob(&x)).abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::test_measures::*;

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
        assert!("edgeworth".parse::<Mode>().is_err());
        assert_eq!(serde_json::to_string(&Mode::GaussianOnly).unwrap(), "\"gaussian-only\"");
    }

    #[test]
    fn config_validation() {
        let n = vec![10, 20, 30, 40, 50];
        assert!(SweepConfig::new("m", n.clone(), 0.25, Mode::Lemma).is_ok());
        for alpha in [0.0, 0.5, -0.1, f64::NAN] {
            assert!(SweepConfig::new("m", n.clone(), alpha, Mode::Lemma).is_err());
        }
        assert!(SweepConfig::new("m", vec![10, 20, 20, 30, 40], 0.25, Mode::Lemma).is_err());
        assert!(SweepConfig::new("m", vec![0, 20, 25, 30, 40], 0.25, Mode::Lemma).is_err());
        assert!(SweepConfig::new("m", vec![10, 20, 30, 40], 0.25, Mode::Lemma).is_err());
    }

    #[test]
    fn ball_enumeration() {
        assert_eq!(ball_points(1, 3).len(), 7);
        assert_eq!(ball_points(2, 1).len(), 5);
        assert_eq!(ball_points(2, 2).len(), 13);
        assert_eq!(ball_points(3, 1).len(), 7);
    }

    #[test]
    fn lazy_approx_rows() {
        let m = lazy();
        let row = approx(&m, 100, &LatticePoint(vec![0]), Mode::Lemma, 0.25).unwrap();
        assert!((row.approximant - 0.056_35).abs() < 1e-5);
        assert!(row.abs_err < 1e-4);
        assert!((row.exact_dp - row.exact_dft).abs() < 1e-12);
        let row = approx(&m, 1, &LatticePoint(vec![0]), Mode::GaussianOnly, 0.25).unwrap();
        assert_eq!(row.exact_dp, 0.5);
        assert!((row.approximant - 0.564_19).abs() < 1e-5);
        assert!((row.abs_err - 0.064).abs() < 1e-3);
    }

    #[test]
    fn theorem_mode_needs_centered_measure() {
        let m = LatticeMeasure::new(1, 2, vec![(LatticePoint(vec![0]), 0.5), (LatticePoint(vec![2]), 0.5)]).unwrap();
        let err = approx(&m, 4, &LatticePoint(vec![4]), Mode::Theorem, 0.25).unwrap_err();
        assert!(matches!(err, LcltError::Precondition(_)));
        let cfg = SweepConfig::new("m", vec![1, 2, 3, 4, 5], 0.25, Mode::Theorem).unwrap();
        assert!(matches!(sweep(&m, &cfg), Err(LcltError::Precondition(_))));
    }

    #[test]
    fn small_sweep_is_sorted_and_consistent() {
        let cfg = SweepConfig::new("lazy", vec![10, 20, 40, 80, 160], 0.25, Mode::Theorem).unwrap();
        let r = sweep(&lazy(), &cfg).unwrap();
        assert!(r.is_ok());
        assert_eq!(r.rows.iter().map(|r| r.n).collect::<Vec<_>>(), cfg.n_list);
        let c = r.c_hat.unwrap();
        assert!(r.rows.iter().all(|row| row.weighted_err.unwrap() <= c && row.weighted_err.unwrap() >= 0.0));
        assert!(r.slope_stderr.is_some());
        let csv = r.to_csv();
        assert!(csv.starts_with("n,sup_abs_err,argmax_x,weighted_err,skipped_cells\n"));
        assert_eq!(csv.lines().count(), 6);
    }

    #[test]
    fn sweep_is_schedule_independent() {
        let mut cfg = SweepConfig::new("skewed", vec![5, 10, 15, 20, 25], 0.25, Mode::Theorem).unwrap();
        cfg.threads = 1;
        let a = sweep(&skewed(), &cfg).unwrap();
        cfg.threads = 4;
        let b = sweep(&skewed(), &cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn corollary_rows_skip_fractional_means() {
        let m = LatticeMeasure::new(
            1,
            2,
            vec![(LatticePoint(vec![0]), 0.5), (LatticePoint(vec![1]), 0.25), (LatticePoint(vec![2]), 0.25)],
        )
        .unwrap();
        // E = 3/4, so nE is integral only for n divisible by 4
        let rows = corollary_table(&m, &[3, 4, 8]).unwrap();
        assert!(rows[0].exact.is_none());
        assert_eq!(rows[1].point, Some(LatticePoint(vec![3])));
        assert_eq!(rows[2].point, Some(LatticePoint(vec![6])));
    }

    #[test]
    fn corollary_for_shifted_measure() {
        let m = LatticeMeasure::new(1, 2, vec![(LatticePoint(vec![0]), 0.5), (LatticePoint(vec![2]), 0.5)]).unwrap();
        let rows = corollary_table(&m, &[10, 20]).unwrap();
        assert_eq!(rows[0].point, Some(LatticePoint(vec![10])));
        assert!((rows[0].exact.unwrap() - 252.0 / 1024.0).abs() < 1e-15);
        assert_eq!(rows[1].point, Some(LatticePoint(vec![20])));
    }
}
