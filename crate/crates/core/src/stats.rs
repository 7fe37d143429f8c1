//! Small statistics helpers for trend detection.

/// Least-squares slope of `y` against `x`. Returns `None` for fewer than two
/// points or a degenerate abscissa.
pub fn ls_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for i in 0..n {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if sxx <= 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Slope of `ln v` against `ln n`, skipping non-positive or non-finite values.
pub fn log_log_slope(ns: &[f64], values: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = ns
        .iter()
        .zip(values)
        .filter(|(n, v)| **n > 0.0 && **v > 0.0 && v.is_finite())
        .map(|(n, v)| (n.ln(), v.ln()))
        .unzip();
    ls_slope(&lx, &ly)
}

/// Median of a slice (NaNs are ignored).
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}
