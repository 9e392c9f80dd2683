//! Text format for lattice measures:
//!
//! ```text
//! # comment
//! dim 1
//! steplength 1
//! -1 1/4
//! 0  1/2
//! 1  1/4
//! ```
//!
//! Probabilities are decimals (optionally with an exponent) or exact
//! rationals `p/q`; both are parsed exactly.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{LatticeMeasure, LatticePoint};
use crate::error::{LcltError, Result};

pub fn load_measure(text: &str) -> Result<LatticeMeasure> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let dim = header(lines.next(), "dim")?;
    let steplength = header(lines.next(), "steplength")?;
    if dim == 0 {
        return Err(LcltError::Invariant("dimension must be positive".into()));
    }
    let mut entries = Vec::new();
    for (no, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != dim as usize + 1 {
            return Err(LcltError::Invariant(format!(
                "line {no}: expected {dim} coordinates and a probability, found {} fields",
                fields.len()
            )));
        }
        let coords = fields[..dim as usize]
            .iter()
            .map(|f| {
                f.parse::<i64>().map_err(|_| LcltError::Parse {
                    line: no,
                    msg: format!("bad coordinate '{f}'"),
                })
            })
            .collect::<Result<Vec<i64>>>()?;
        let p = parse_probability(fields[dim as usize]).map_err(|msg| LcltError::Parse { line: no, msg })?;
        entries.push((LatticePoint(coords), p));
    }
    LatticeMeasure::from_rationals(dim as usize, steplength, entries)
}

fn header(line: Option<(usize, &str)>, key: &str) -> Result<u64> {
    let (no, line) = line.ok_or_else(|| LcltError::Parse {
        line: 0,
        msg: format!("missing '{key}' header"),
    })?;
    let mut it = line.split_whitespace();
    match (it.next(), it.next(), it.next()) {
        (Some(k), Some(v), None) if k == key => v.parse::<u64>().map_err(|_| LcltError::Parse {
            line: no,
            msg: format!("bad value for '{key}': '{v}'"),
        }),
        _ => Err(LcltError::Parse {
            line: no,
            msg: format!("expected '{key} <integer>'"),
        }),
    }
}

/// Parses `p/q`, `0.25`, `-3`, `2.5e-3` exactly.
pub fn parse_probability(s: &str) -> std::result::Result<BigRational, String> {
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| format!("bad numerator in '{s}'"))?;
        let q: BigInt = q.trim().parse().map_err(|_| format!("bad denominator in '{s}'"))?;
        if q.is_zero() {
            return Err(format!("zero denominator in '{s}'"));
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = s[i + 1..].parse().map_err(|_| format!("bad exponent in '{s}'"))?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(format!("bad number '{s}'"));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(format!("bad number '{s}'"));
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().unwrap() };
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(numer);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -r } else { r })
}

/// Serializes a measure; `comments` become leading `#` lines.
pub fn write_measure(m: &LatticeMeasure, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "dim {}", m.dim());
    let _ = writeln!(out, "steplength {}", m.steplength());
    let exact = m.exact_probs();
    for (i, (x, p)) in m.iter().enumerate() {
        let coords: Vec<String> = x.coords().iter().map(|c| c.to_string()).collect();
        let prob = match exact {
            Some(q) if q[i].denom().is_one() => q[i].numer().to_string(),
            Some(q) => format!("{}/{}", q[i].numer(), q[i].denom()),
            None => format_float(p),
        };
        let _ = writeln!(out, "{} {}", coords.join(" "), prob);
    }
    out
}

fn format_float(p: f64) -> String {
    if p == 0.0 || (1e-4..1e6).contains(&p.abs()) {
        format!("{p}")
    } else {
        format!("{p:e}")
    }
}
