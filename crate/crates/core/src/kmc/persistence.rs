use rayon::prelude::*;

use super::fit::RateFit;
use super::sim::{run_trajectory, TimeGrid, TrajectoryObservables};
use super::KmcError;
use crate::lattice::{BoundaryCondition, ConstraintTable, DensityParams, ModelSpec, Region};
use crate::rng::{stream_rng, Domain};
use crate::stats::{self, FitError};

/// Monte Carlo estimate of the persistence function F(t): the probability
/// that the spin at site 0 has not changed value by time t, started from
/// equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceCurve {
    pub times: Vec<f64>,
    /// Raw surviving-trajectory counts per grid time.
    pub survival: Vec<u64>,
    pub n: u64,
    pub f_hat: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub seed: u64,
}

fn sample_merged(
    table: &ConstraintTable,
    params: DensityParams,
    grid: &TimeGrid,
    tracked: &[usize],
    n_samples: u64,
    seed: u64,
) -> TrajectoryObservables {
    // one private stream per trajectory; integer merge makes the result
    // identical for every thread count and work split
    (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i, Domain::Kmc);
            let mut out = TrajectoryObservables::empty(grid, tracked, seed);
            run_trajectory(table, params, grid, tracked, None, &mut rng, &mut out);
            out
        })
        .reduce(
            || TrajectoryObservables::empty(grid, tracked, seed),
            |mut a, b| {
                a.merge(&b);
                a
            },
        )
}

/// Runs `n_samples` equilibrium trajectories and returns F(t) with Wilson
/// 95% intervals. F(0) = 1 exactly and the curve is nonincreasing by
/// construction.
pub fn persistence_curve(
    model: &ModelSpec,
    region: &Region,
    bc: &BoundaryCondition,
    params: DensityParams,
    grid: &TimeGrid,
    n_samples: u64,
    seed: u64,
) -> Result<PersistenceCurve, KmcError> {
    if n_samples == 0 {
        return Err(KmcError::BadGrid("need at least one sample"));
    }
    let table = ConstraintTable::new(model, region, bc)?;
    let obs = sample_merged(&table, params, grid, &[], n_samples, seed);
    let mut f_hat = Vec::with_capacity(grid.len());
    let mut ci_lo = Vec::with_capacity(grid.len());
    let mut ci_hi = Vec::with_capacity(grid.len());
    for &k in &obs.origin_survival {
        let (lo, hi) = stats::wilson_95(k, n_samples);
        f_hat.push(k as f64 / n_samples as f64);
        ci_lo.push(lo);
        ci_hi.push(hi);
    }
    Ok(PersistenceCurve {
        times: grid.times().to_vec(),
        survival: obs.origin_survival,
        n: n_samples,
        f_hat,
        ci_lo,
        ci_hi,
        seed,
    })
}

/// Connected time autocorrelation of the spin at site 0, with a weighted
/// exponential fit of its decay.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrEstimate {
    pub times: Vec<f64>,
    /// C(t) = E[s(0) s(t)] - p^2; C(0) = p q.
    pub c_hat: Vec<f64>,
    pub se: Vec<f64>,
    pub n: u64,
    pub fit: RateFit,
    pub seed: u64,
}

/// Estimates C(t) for site 0 from `n_samples` equilibrium trajectories and
/// fits `ln C` over the decade below C(0)/2, stopping at the sampling noise
/// floor. The fitted rate upper-bounds the spectral gap up to Monte Carlo
/// error when the slow modes overlap the single-site observable.
pub fn autocorrelation_rate(
    model: &ModelSpec,
    region: &Region,
    bc: &BoundaryCondition,
    params: DensityParams,
    grid: &TimeGrid,
    n_samples: u64,
    seed: u64,
) -> Result<AutocorrEstimate, KmcError> {
    let q = params.q();
    if !(q > 0.0 && q < 1.0) {
        return Err(KmcError::DegenerateDensity(q));
    }
    if n_samples == 0 {
        return Err(KmcError::BadGrid("need at least one sample"));
    }
    let table = ConstraintTable::new(model, region, bc)?;
    let obs = sample_merged(&table, params, grid, &[0], n_samples, seed);
    let p = params.p();
    let n = n_samples as f64;
    let counts = &obs.product_counts[0];
    let mut c_hat = Vec::with_capacity(grid.len());
    let mut se = Vec::with_capacity(grid.len());
    for &k in counts {
        let m = k as f64 / n;
        c_hat.push(m - p * p);
        se.push((m * (1.0 - m) / n).sqrt());
    }

    let floor = 10.0 * (p * q).sqrt() / n.sqrt();
    let ceiling = 0.5 * c_hat[0];
    let mut pts = Vec::new();
    let (mut t_lo, mut t_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for ((&t, &c), &s) in grid.times().iter().zip(&c_hat).zip(&se) {
        if c < floor || c > ceiling || s <= 0.0 {
            continue;
        }
        pts.push((t, c.ln(), (c / s) * (c / s)));
        t_lo = t_lo.min(t);
        t_hi = t_hi.max(t);
    }
    if pts.len() < 5 {
        return Err(KmcError::Fit(FitError::InsufficientPoints { needed: 5, got: pts.len() }));
    }
    let line = stats::weighted_line_fit(&pts)?;
    let fit = RateFit {
        rate: -line.slope,
        intercept: line.intercept,
        window: (t_lo, t_hi),
        r_squared: line.r_squared,
        rate_se: line.slope_se,
        n_used: line.n_used,
        poor_fit: line.r_squared < 0.9,
    };
    Ok(AutocorrEstimate {
        times: grid.times().to_vec(),
        c_hat,
        se,
        n: n_samples,
        fit,
        seed,
    })
}
