/// Fewest n values a sweep accepts.
pub const MIN_FIT_POINTS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; NaN with only two points.
    pub stderr: f64,
    pub points: usize,
}

/// Least squares line through (log x, log y), skipping pairs with y ≤ 0.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<SlopeFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x > 0.0 && y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    let k = lx.len();
    if k < 2 {
        return None;
    }
    let kf = k as f64;
    let mx = lx.iter().sum::<f64>() / kf;
    let my = ly.iter().sum::<f64>() / kf;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = if k > 2 { (ssr / (kf - 2.0) / sxx).sqrt() } else { f64::NAN };
    Some(SlopeFit {
        slope,
        intercept,
        stderr,
        points: k,
    })
}
