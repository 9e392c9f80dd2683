use std::fmt::Write;

use serde::Serialize;

use super::{CorollaryRow, Mode};
use crate::measure::{write_measure, LatticePoint, ValidationReport};
use crate::tilt::TiltSolution;

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn ok_fail(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

fn vector(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    parts.join(",")
}

pub fn render_validation(r: &ValidationReport) -> String {
    let mut s = String::new();
    writeln!(s, "mass: {}", ok_fail(r.mass_ok)).unwrap();
    writeln!(s, "steplength: {}", ok_fail(r.steplength_ok)).unwrap();
    writeln!(s, "maximal: {}", yes_no(r.maximal)).unwrap();
    writeln!(s, "aperiodic: {}", r.aperiodic).unwrap();
    writeln!(s, "mean: {}", vector(&r.mean)).unwrap();
    writeln!(s, "gamma: {}", r.gamma).unwrap();
    s
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApproxRow {
    pub n: usize,
    pub x: LatticePoint,
    pub mode: Mode,
    pub exact_dp: f64,
    pub exact_dft: f64,
    pub approximant: f64,
    pub abs_err: f64,
    /// n^{−1−α} φ_{2dℓ²n}(x).
    pub weight: f64,
}

impl ApproxRow {
    pub fn render(&self) -> String {
        let mut s = String::new();
        writeln!(s, "n: {}", self.n).unwrap();
        writeln!(s, "x: {}", self.x).unwrap();
        writeln!(s, "mode: {}", self.mode).unwrap();
        writeln!(s, "exact (dp): {:.12e}", self.exact_dp).unwrap();
        writeln!(s, "exact (dft): {:.12e}", self.exact_dft).unwrap();
        writeln!(s, "approximant: {:.12e}", self.approximant).unwrap();
        writeln!(s, "abs error: {:.6e}", self.abs_err).unwrap();
        writeln!(s, "weight: {:.6e}", self.weight).unwrap();
        s
    }
}

pub fn render_tilt(sol: &TiltSolution) -> String {
    let mut s = String::new();
    writeln!(s, "xi: {}", vector(&sol.xi)).unwrap();
    writeln!(s, "t: {}", vector(&sol.t)).unwrap();
    writeln!(s, "log Z: {}", sol.log_z).unwrap();
    writeln!(s, "rate: {}", sol.rate).unwrap();
    let v = sol.tilted_cov.matrix();
    for i in 0..v.nrows() {
        let row: Vec<f64> = (0..v.ncols()).map(|j| v[(i, j)]).collect();
        writeln!(s, "cov[{i}]: {}", vector(&row)).unwrap();
    }
    writeln!(s, "residual: {:e}", sol.residual).unwrap();
    writeln!(s, "iterations: {}", sol.iterations).unwrap();
    s.push_str(&write_measure(&sol.tilted, &["tilted measure".to_string()]));
    s
}

pub fn render_corollary(rows: &[CorollaryRow]) -> String {
    let mut s = String::from("n\tx\texact\tapprox\tdiff\tscaled\n");
    for r in rows {
        match (&r.point, r.exact, r.diff, r.scaled) {
            (Some(x), Some(e), Some(d), Some(sc)) => {
                writeln!(s, "{}\t{x}\t{e:.12e}\t{:.12e}\t{d:.6e}\t{sc:.6e}", r.n, r.approx).unwrap()
            }
            _ => writeln!(s, "{}\t-\t-\t{:.12e}\t-\t- (nE not a lattice point, skipped)", r.n, r.approx).unwrap(),
        }
    }
    s
}
