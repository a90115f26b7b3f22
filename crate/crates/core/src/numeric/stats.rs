//! Small descriptive statistics used by the Monte Carlo checks.

use super::sum::{sum, CompensatedSum};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    sum(xs.iter().copied()) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    sum(xs.iter().map(|x| (x - m) * (x - m))) / (n - 1) as f64
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Sample variance of vector-valued observations with a jackknife standard error.
///
/// `sq_dev[i]` must hold `‖Y_i − Ȳ‖²`. Leave-one-out variances follow from
/// `Σ_{j≠i} ‖Y_j − Ȳ₍ᵢ₎‖² = S − dᵢ·n/(n−1)`, so the jackknife costs O(n).
pub fn variance_with_jackknife(sq_dev: &[f64]) -> (f64, f64) {
    let n = sq_dev.len();
    if n < 3 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let total = sum(sq_dev.iter().copied());
    let estimate = total / (nf - 1.0);
    let loo: Vec<f64> = sq_dev.iter().map(|d| (total - d * nf / (nf - 1.0)) / (nf - 2.0)).collect();
    let loo_mean = mean(&loo);
    let spread = sum(loo.iter().map(|v| (v - loo_mean) * (v - loo_mean)));
    (estimate, ((nf - 1.0) / nf * spread).sqrt())
}

/// Jackknife standard error of `Σa / Σb` over paired observations.
pub fn ratio_jackknife(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let sa = sum(a.iter().copied());
    let sb = sum(b.iter().copied());
    let ratio = sa / sb;
    if n < 2 {
        return (ratio, f64::NAN);
    }
    let loo: Vec<f64> = a.iter().zip(b).map(|(x, y)| (sa - x) / (sb - y)).collect();
    let m = mean(&loo);
    let nf = n as f64;
    let spread = sum(loo.iter().map(|v| (v - m) * (v - m)));
    (ratio, ((nf - 1.0) / nf * spread).sqrt())
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// Root mean square of the residuals.
    pub residual_rms: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return None;
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxx = CompensatedSum::new();
    let mut sxy = CompensatedSum::new();
    for (a, b) in x.iter().zip(y) {
        sxx.add((a - mx) * (a - mx));
        sxy.add((a - mx) * (b - my));
    }
    let sxx = sxx.value();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy.value() / sxx;
    let intercept = my - slope * mx;
    let rss = sum(x.iter().zip(y).map(|(a, b)| {
        let r = b - intercept - slope * a;
        r * r
    }));
    let slope_stderr = if n > 2 { (rss / (n - 2) as f64 / sxx).sqrt() } else { f64::NAN };
    Some(LinearFit { slope, intercept, slope_stderr, residual_rms: (rss / n as f64).sqrt() })
}
