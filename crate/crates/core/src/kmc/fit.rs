use super::KmcError;
use crate::stats::{self, FitError};

/// Decay rate extracted from a positive, roughly exponential curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub rate: f64,
    pub intercept: f64,
    /// Time span of the points that entered the fit.
    pub window: (f64, f64),
    pub r_squared: f64,
    pub rate_se: f64,
    pub n_used: usize,
    /// Set when the log-curve is visibly not a line (r-squared below 0.9);
    /// the rate is then at best an effective scale, not a spectral quantity.
    pub poor_fit: bool,
}

const MIN_POINTS: usize = 5;
const POOR_FIT_R2: f64 = 0.9;

/// Fits `ln v = a - rate * t` by weighted least squares over the points with
/// `value_window.0 <= v <= value_window.1`.
///
/// Points below the Monte Carlo noise floor `10 / sqrt(n_samples)` are
/// dropped regardless of the window: down there the log transform is biased
/// and a single lucky count swings the tail. Weights are the inverse
/// variance of `ln v` for a binomial proportion, `n v / (1 - v)`, so early
/// high-statistics points count more.
pub fn fit_exponential_rate(
    times: &[f64],
    values: &[f64],
    n_samples: u64,
    value_window: (f64, f64),
) -> Result<RateFit, KmcError> {
    if times.len() != values.len() {
        return Err(KmcError::BadGrid("times and values differ in length"));
    }
    if n_samples == 0 {
        return Err(KmcError::Fit(FitError::InsufficientPoints { needed: MIN_POINTS, got: 0 }));
    }
    let n = n_samples as f64;
    let floor = 10.0 / n.sqrt();
    let mut pts = Vec::new();
    let (mut t_lo, mut t_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (&t, &v) in times.iter().zip(values) {
        if !t.is_finite() || !v.is_finite() {
            continue;
        }
        if v < value_window.0 || v > value_window.1 || v <= floor || v <= 0.0 {
            continue;
        }
        let w = n * v / (1.0 - v).max(0.5 / n);
        pts.push((t, v.ln(), w));
        t_lo = t_lo.min(t);
        t_hi = t_hi.max(t);
    }
    if pts.len() < MIN_POINTS {
        return Err(KmcError::Fit(FitError::InsufficientPoints {
            needed: MIN_POINTS,
            got: pts.len(),
        }));
    }
    let line = stats::weighted_line_fit(&pts)?;
    Ok(RateFit {
        rate: -line.slope,
        intercept: line.intercept,
        window: (t_lo, t_hi),
        r_squared: line.r_squared,
        rate_se: line.slope_se,
        n_used: line.n_used,
        poor_fit: line.r_squared < POOR_FIT_R2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn geometric_times(t0: f64, t1: f64, f: f64) -> Vec<f64> {
        let mut t = t0;
        let mut out = Vec::new();
        while t <= t1 {
            out.push(t);
            t *= f;
        }
        out
    }

    #[test]
    fn exact_decay_recovers_rate() {
        let times = geometric_times(0.05, 10.0, 1.3);
        let values: Vec<f64> = times.iter().map(|&t| (-2.0 * t).exp()).collect();
        let fit = fit_exponential_rate(&times, &values, 1 << 40, (1e-8, 1.0)).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-9, "rate {}", fit.rate);
        assert!(fit.intercept.abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(!fit.poor_fit);
        // the deep tail sits below the noise floor for this sample count
        assert!(fit.n_used >= 15, "n_used {}", fit.n_used);
    }

    #[test]
    fn binomial_noise_stays_within_error_bars() {
        let mut rng = ChaCha12Rng::seed_from_u64(0x5eed_f17);
        let times = geometric_times(0.1, 8.0, 1.25);
        let n = 200_000u64;
        let rate = 0.7;
        let values: Vec<f64> = times
            .iter()
            .map(|&t| {
                let p = (-rate * t).exp();
                let mut k = 0u64;
                for _ in 0..n {
                    k += (rng.gen::<f64>() < p) as u64;
                }
                k as f64 / n as f64
            })
            .collect();
        let fit = fit_exponential_rate(&times, &values, n, (0.01, 0.9)).unwrap();
        assert!(!fit.poor_fit, "r2 {}", fit.r_squared);
        assert!(
            (fit.rate - rate).abs() < 3.0 * fit.rate_se,
            "rate {} +- {} vs {}",
            fit.rate,
            fit.rate_se,
            rate
        );
    }

    #[test]
    fn two_scale_curve_is_flagged() {
        let times = geometric_times(0.05, 100.0, 1.3);
        let values: Vec<f64> = times
            .iter()
            .map(|&t| 0.5 * (-3.0 * t).exp() + 0.5 * (-0.03 * t).exp())
            .collect();
        let fit = fit_exponential_rate(&times, &values, 1 << 40, (1e-6, 1.0)).unwrap();
        assert!(fit.poor_fit, "r2 {}", fit.r_squared);
    }

    #[test]
    fn too_few_usable_points_is_an_error() {
        let times = vec![0.1, 0.2, 0.3];
        let values = vec![0.9, 0.8, 0.7];
        assert!(matches!(
            fit_exponential_rate(&times, &values, 1000, (0.0, 1.0)),
            Err(KmcError::Fit(FitError::InsufficientPoints { .. }))
        ));
        // window excludes everything
        let times = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let values = vec![0.9; 6];
        assert!(fit_exponential_rate(&times, &values, 1000, (0.0, 0.5)).is_err());
    }
}
