//! Small statistics helpers shared by the Monte Carlo estimators.

use thiserror::Error;

/// z quantile for two-sided 95% coverage.
pub const Z_95: f64 = 1.959963984540054;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} usable points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("degenerate fit: zero weighted variance in x")]
    DegenerateAbscissa,
}

/// Wilson score interval for a binomial proportion at 95% coverage.
///
/// Behaves sensibly at k = 0 and k = n, unlike the normal approximation.
pub fn wilson_95(k: u64, n: u64) -> (f64, f64) {
    assert!(n > 0, "empty sample");
    assert!(k <= n);
    let z = Z_95;
    let nf = n as f64;
    let phat = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = phat + z2 / (2.0 * nf);
    let half = z * (phat * (1.0 - phat) / nf + z2 / (4.0 * nf * nf)).sqrt();
    // pin the degenerate endpoints exactly (sqrt(z^2) can miss z by an ulp)
    let lo = if k == 0 {
        0.0
    } else {
        ((center - half) / denom).max(0.0)
    };
    let hi = if k == n {
        1.0
    } else {
        ((center + half) / denom).min(1.0)
    };
    (lo, hi)
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n > 0);
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, ss / (n - 1) as f64)
}

/// Weighted least-squares line fit y = intercept + slope x.
#[derive(Debug, Clone)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_se: f64,
    pub n_used: usize,
}

/// Fit over `(x, y, w)` triples with weights w > 0 (inverse variances).
///
/// The slope standard error is scaled by the residual variance, so it stays
/// honest when the supplied weights are only proportional to inverse variance.
pub fn weighted_line_fit(points: &[(f64, f64, f64)]) -> Result<LineFit, FitError> {
    let pts: Vec<_> = points.iter().filter(|p| p.2 > 0.0).collect();
    let m = pts.len();
    if m < 3 {
        return Err(FitError::InsufficientPoints { needed: 3, got: m });
    }
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &&(x, y, w) in &pts {
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let delta = sw * sxx - sx * sx;
    if delta <= 0.0 || delta < 1e-12 * sw * sxx {
        return Err(FitError::DegenerateAbscissa);
    }
    let slope = (sw * sxy - sx * sy) / delta;
    let intercept = (sy - slope * sx) / sw;
    let ybar = sy / sw;
    let (mut ssr, mut sst) = (0.0, 0.0);
    for &&(x, y, w) in &pts {
        let r = y - intercept - slope * x;
        ssr += w * r * r;
        sst += w * (y - ybar) * (y - ybar);
    }
    let r_squared = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    let sigma2 = if m > 2 { ssr / (m - 2) as f64 } else { 0.0 };
    let slope_se = (sigma2 * sw / delta).sqrt();
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
        slope_se,
        n_used: m,
    })
}
