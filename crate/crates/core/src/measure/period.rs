use std::collections::HashSet;

use num_integer::Integer;
use serde::Serialize;

use super::LatticeMeasure;

/// Sumset sizes beyond this stop the return-time search.
const MAX_REACHABLE: usize = 1 << 22;
/// Largest residue search p^d attempted for a period certificate.
const MAX_CERTIFICATE_SEARCH: u64 = 1 << 24;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Aperiodicity {
    Yes,
    No { period: u64 },
    /// No decision within the step cap.
    Undetermined { cap: usize },
}

impl std::fmt::Display for Aperiodicity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Aperiodicity::Yes => write!(f, "yes"),
            Aperiodicity::No { period } => write!(f, "no (period {period})"),
            Aperiodicity::Undetermined { cap } => write!(f, "undetermined (cap {cap} reached)"),
        }
    }
}

/// Running gcd of the return times n ≤ `cap` with G^{*n}(0) > 0.
///
/// Positivity is decided on supports only (sumsets), so no rounding is
/// involved. A gcd p > 1 is reported as a period only with a certificate: a
/// residue map c: Z^d → Z/p with c(s) ≡ 1 for every support point s, which
/// forces every return time to be a multiple of p.
pub fn aperiodicity(m: &LatticeMeasure, cap: usize) -> Aperiodicity {
    let d = m.dim();
    let steps: Vec<Vec<i64>> = m.points().iter().map(|x| x.coords().to_vec()).collect();
    let origin = vec![0i64; d];
    if steps.contains(&origin) {
        return Aperiodicity::Yes;
    }
    let l = m.steplength() as i128;
    let mut g: u64 = 0;
    let mut reach: HashSet<Vec<i64>> = steps.iter().cloned().collect();
    for n in 2..=cap {
        // only points that can still return within the remaining steps matter
        let radius = (cap - n) as i128 * l;
        let mut next = HashSet::with_capacity(reach.len() * 2);
        for x in &reach {
            for s in &steps {
                let y: Vec<i64> = x.iter().zip(s).map(|(a, b)| a + b).collect();
                let n2: i128 = y.iter().map(|&c| (c as i128) * (c as i128)).sum();
                if n2 <= radius * radius {
                    next.insert(y);
                }
            }
        }
        reach = next;
        if reach.contains(&origin) {
            g = g.gcd(&(n as u64));
            if g == 1 {
                return Aperiodicity::Yes;
            }
        }
        if reach.len() > MAX_REACHABLE {
            break;
        }
    }
    if g > 1 && has_residue_certificate(&steps, g) {
        return Aperiodicity::No { period: g };
    }
    Aperiodicity::Undetermined { cap }
}

fn has_residue_certificate(steps: &[Vec<i64>], p: u64) -> bool {
    let d = steps[0].len();
    let Some(total) = p.checked_pow(d as u32) else {
        return false;
    };
    if total > MAX_CERTIFICATE_SEARCH {
        return false;
    }
    let p = p as i64;
    let mut c = vec![0i64; d];
    for code in 0..total {
        let mut r = code;
        for cj in c.iter_mut() {
            *cj = (r % p as u64) as i64;
            r /= p as u64;
        }
        let ok = steps.iter().all(|s| {
            let v: i64 = s.iter().zip(&c).map(|(a, b)| a * b).sum();
            v.rem_euclid(p) == 1 % p
        });
        if ok {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::test_measures::*;
    use crate::measure::LatticePoint;

    #[test]
    fn lazy_is_aperiodic_at_once() {
        assert_eq!(aperiodicity(&lazy(), 64), Aperiodicity::Yes);
    }

    #[test]
    fn simple_walk_has_period_two() {
        assert_eq!(aperiodicity(&simple(), 64), Aperiodicity::No { period: 2 });
    }

    #[test]
    fn skewed_without_zero_still_aperiodic() {
        // returns at n = 2 (−1 + 1) and n = 3 (−1 − 1 + 2)
        let m = LatticeMeasure::new(
            1,
            2,
            vec![
                (LatticePoint(vec![-1]), 0.5),
                (LatticePoint(vec![1]), 0.25),
                (LatticePoint(vec![2]), 0.25),
            ],
        )
        .unwrap();
        assert_eq!(aperiodicity(&m, 64), Aperiodicity::Yes);
    }

    #[test]
    fn period_three() {
        let m = LatticeMeasure::new(
            1,
            2,
            vec![(LatticePoint(vec![-1]), 0.5), (LatticePoint(vec![2]), 0.5)],
        )
        .unwrap();
        assert_eq!(aperiodicity(&m, 64), Aperiodicity::No { period: 3 });
    }

    #[test]
    fn two_dimensional_checkerboard() {
        let m = LatticeMeasure::new(
            2,
            1,
            vec![
                (LatticePoint(vec![1, 0]), 0.25),
                (LatticePoint(vec![-1, 0]), 0.25),
                (LatticePoint(vec![0, 1]), 0.25),
                (LatticePoint(vec![0, -1]), 0.25),
            ],
        )
        .unwrap();
        assert_eq!(aperiodicity(&m, 32), Aperiodicity::No { period: 2 });
    }

    #[test]
    fn drifting_walk_never_returns() {
        let m = LatticeMeasure::new(
            1,
            2,
            vec![(LatticePoint(vec![1]), 0.5), (LatticePoint(vec![2]), 0.5)],
        )
        .unwrap();
        assert_eq!(aperiodicity(&m, 16), Aperiodicity::Undetermined { cap: 16 });
    }
}
