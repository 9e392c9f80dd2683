mod common;

use common::*;
use lclt_core::edgeworth::{gaussian_density, HermiteTable};
use lclt_core::measure::{covariance, indices_up_to, CovarianceMatrix};
use proptest::prelude::*;

fn check_table(v: &CovarianceMatrix, x: &[f64]) -> Result<(), TestCaseError> {
    let d = v.dim();
    let table = HermiteTable::new(v, 4).unwrap();
    for nu in indices_up_to(d, 4) {
        let exact = table.get(&nu).unwrap().eval(x) * gaussian_density(v, x).unwrap();
        let fd = richardson(|y: &[f64]| gaussian_density(v, y).unwrap(), x, nu.exponents(), 0.04);
        prop_assert!(
            (fd - exact).abs() <= 1e-5 * exact.abs().max(1.0),
            "nu {} at {:?}: fd {} vs {}",
            nu,
            x,
            fd,
            exact
        );
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn hermite_factors_match_nested_differences_1d(x in -2.5f64..2.5) {
        check_table(&covariance(&skewed()), &[x])?;
        check_table(&covariance(&lazy()), &[x / 2.0])?;
    }

    #[test]
    fn hermite_factors_match_nested_differences_2d(x in -1.5f64..1.5, y in -1.5f64..1.5) {
        check_table(&covariance(&skewed2()), &[x, y])?;
        check_table(&covariance(&tilted2()), &[x, y])?;
    }
}
