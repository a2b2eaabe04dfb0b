use rayon::prelude::*;

use super::KmcError;
use crate::lattice::{
    BoundaryCondition, ConstraintTable, Coord, ModelSpec, Region, SpinConfig,
};
use crate::rng::{stream_rng, Domain};
use crate::stats::mean_var;

/// Side of the largest fully occupied cube anchored at the region's origin:
/// the greatest `l` with every site of `[0, l)^d` occupied (0 when the origin
/// itself is empty, capped by the shortest region side).
pub fn xi_corner(cfg: &SpinConfig, region: &Region) -> usize {
    let d = region.dim();
    let cap = *region.sides().iter().min().unwrap();
    let mut l = 0usize;
    'grow: while l < cap {
        let mut all = true;
        for_each_layer(d, l as i64, |c| {
            let idx = region.index(c).expect("layer site inside region");
            all &= cfg.occupied(idx);
        });
        if !all {
            break 'grow;
        }
        l += 1;
    }
    l
}

/// Visits every point of `[0, side)^d` (no-op when `side <= 0`).
fn for_each_box<F: FnMut(&Coord)>(d: usize, side: i64, mut f: F) {
    if side <= 0 {
        return;
    }
    let mut c = Coord::default();
    loop {
        f(&c);
        let mut k = 0;
        loop {
            if k == d {
                return;
            }
            c[k] += 1;
            if c[k] < side {
                break;
            }
            c[k] = 0;
            k += 1;
        }
    }
}

/// Visits the points of `[0, l+1)^d` with maximum coordinate exactly `l`.
fn for_each_layer<F: FnMut(&Coord)>(d: usize, l: i64, mut f: F) {
    for_each_box(d, l + 1, |c| {
        if (0..d).any(|k| c[k] == l) {
            f(c);
        }
    });
}

/// Smooth bump profile on the rescaled corner size `alpha = xi / ell_q`,
/// centered and normalized against the continuum weight
/// `alpha^(d-1) exp(-c0 alpha^d)` so that it has zero mean and unit second
/// moment in quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct TestProfile {
    pub d: usize,
    pub q: f64,
    /// Rescaled grid points `k / ell_q`, k = 0..=ceil(ell_q).
    pub alpha: Vec<f64>,
    /// Profile value at corner size k.
    pub values: Vec<f64>,
    /// Centering residual (0 up to roundoff by construction).
    pub quad_zero: f64,
    /// Normalization residual (1 up to roundoff by construction).
    pub quad_one: f64,
    /// Corner scale: the side at which an all-occupied corner cube has
    /// probability `1 - q0`.
    pub ell_q: f64,
}

fn raised_cosine(alpha: f64) -> f64 {
    if alpha <= 0.25 || alpha >= 0.75 {
        0.0
    } else {
        0.5 * (1.0 - (4.0 * std::f64::consts::PI * (alpha - 0.25)).cos())
    }
}

impl TestProfile {
    /// Builds the standard profile for dimension `d` and empty-density `q`.
    /// `q0` sets the reference occupation level defining the corner scale
    /// (default `1 - 1/e`, which makes `P(corner cube of side k full)`
    /// exactly `exp(-(k/ell_q)^d)`).
    pub fn standard(d: usize, q: f64, q0: Option<f64>) -> Result<Self, KmcError> {
        if !(q > 0.0 && q < 1.0) {
            return Err(KmcError::DegenerateDensity(q));
        }
        let q0 = q0.unwrap_or(1.0 - (-1.0f64).exp());
        if !(q0 > 0.0 && q0 < 1.0) {
            return Err(KmcError::BadGrid("corner reference level must be in (0,1)"));
        }
        if d == 0 {
            return Err(KmcError::BadGrid("dimension must be positive"));
        }
        let p = 1.0 - q;
        let c0 = -(1.0 - q0).ln();
        let ell = ((1.0 - q0).ln() / p.ln()).powf(1.0 / d as f64);
        let kmax = ell.ceil() as usize;

        let alpha: Vec<f64> = (0..=kmax).map(|k| k as f64 / ell).collect();
        let w: Vec<f64> = alpha
            .iter()
            .map(|&a| a.powi(d as i32 - 1) * (-c0 * a.powi(d as i32)).exp())
            .collect();
        let b: Vec<f64> = alpha.iter().map(|&a| raised_cosine(a)).collect();

        let support_points = b.iter().filter(|&&v| v > 0.0).count();
        if support_points < 2 {
            return Err(KmcError::ProfileTooCoarse { support_points });
        }

        let wb: f64 = w.iter().zip(&b).map(|(wi, bi)| wi * bi).sum();
        let wba: f64 = w
            .iter()
            .zip(&b)
            .zip(&alpha)
            .map(|((wi, bi), ai)| wi * bi * ai)
            .sum();
        let center = wba / wb;

        let raw: Vec<f64> = b.iter().zip(&alpha).map(|(bi, ai)| bi * (ai - center)).collect();
        let da = 1.0 / ell;
        let norm2: f64 = w.iter().zip(&raw).map(|(wi, gi)| wi * gi * gi * da).sum();
        let scale = norm2.sqrt().recip();
        let values: Vec<f64> = raw.iter().map(|gi| gi * scale).collect();

        let quad_zero: f64 = w.iter().zip(&values).map(|(wi, gi)| wi * gi * da).sum();
        let quad_one: f64 = w.iter().zip(&values).map(|(wi, gi)| wi * gi * gi * da).sum();

        Ok(TestProfile { d, q, alpha, values, quad_zero, quad_one, ell_q: ell })
    }

    /// Profile value at integer corner size `k` (0 beyond the grid: the bump
    /// support ends at `0.75 * ell_q`).
    pub fn at(&self, k: usize) -> f64 {
        self.values.get(k).copied().unwrap_or(0.0)
    }

    /// Exact mean and variance of the profile applied to the corner size of
    /// an iid occupied-with-probability-p configuration.
    pub fn exact_moments(&self) -> (f64, f64) {
        let p = 1.0 - self.q;
        let lp = p.ln();
        let cube = |k: usize| ((k as f64).powi(self.d as i32) * lp).exp();
        let mut mean = 0.0;
        let mut ex2 = 0.0;
        for (k, &g) in self.values.iter().enumerate() {
            let mu = cube(k) - cube(k + 1);
            mean += mu * g;
            ex2 += mu * g * g;
        }
        (mean, ex2 - mean * mean)
    }
}

/// Monte Carlo certificate for the variational ratio of the corner-size
/// observable under the one-neighbor facilitated model.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionProbe {
    pub d: usize,
    pub q: f64,
    pub ell_q: f64,
    pub profile: TestProfile,
    /// Exact variance of the observable under the product measure.
    pub var_exact: f64,
    /// Estimated Dirichlet form of the observable.
    pub d_hat: f64,
    pub d_se: f64,
    /// `d_hat / var_exact`: an unbiased-in-numerator upper estimate of the
    /// spectral gap of the matching box with a single empty boundary site.
    pub ratio: f64,
    pub ratio_se: f64,
    pub box_side: usize,
    pub n_samples: u64,
    pub seed: u64,
}

/// Sum over sites whose flip changes the corner size, of
/// `constraint * (profile difference)^2`, for one sampled configuration.
fn flip_sum(
    cfg: &SpinConfig,
    region: &Region,
    table: &ConstraintTable,
    profile: &TestProfile,
) -> f64 {
    let d = region.dim();
    let xi = xi_corner(cfg, region);
    let g_xi = profile.at(xi);
    let mut s = 0.0;

    // emptying a site of the full corner cube shrinks it to the site's
    // largest coordinate
    for_each_box(d, xi as i64, |c| {
        let new_xi = (0..d).map(|k| c[k]).max().unwrap() as usize;
        let dg = profile.at(new_xi) - g_xi;
        if dg != 0.0 {
            let idx = region.index(c).unwrap();
            if table.satisfied(cfg, idx) {
                s += dg * dg;
            }
        }
    });

    // occupying the unique empty site of the next layer (if it is unique)
    // grows the cube; rescan for the new size
    let cap = *region.sides().iter().min().unwrap();
    if xi < cap {
        let mut empties = 0usize;
        let mut last_idx = 0usize;
        for_each_layer(d, xi as i64, |c| {
            let idx = region.index(c).unwrap();
            if !cfg.occupied(idx) {
                empties += 1;
                last_idx = idx;
            }
        });
        if empties == 1 {
            let grown = cfg.flipped(last_idx);
            let new_xi = xi_corner(&grown, region);
            let dg = profile.at(new_xi) - g_xi;
            if dg != 0.0 && table.satisfied(cfg, last_idx) {
                s += dg * dg;
            }
        }
    }
    s
}

/// Estimates the Dirichlet-form-to-variance ratio of the corner-size bump
/// observable for the one-neighbor facilitated model on `[0, box_side)^d`
/// with a fully occupied frozen exterior.
///
/// The observable depends only on sites within `0.75 * ell_q` of the origin,
/// so every move unlocked by a single far-corner empty boundary site leaves
/// it unchanged: the ratio upper-bounds (in expectation) the spectral gap of
/// the same box with that minimal boundary relaxation. The box must be at
/// least twice the corner scale so the variance of the observable matches
/// its infinite-volume value exactly.
pub fn fa1f_bound_probe(
    d: usize,
    q: f64,
    q0: Option<f64>,
    profile: Option<&TestProfile>,
    box_side: usize,
    n_samples: u64,
    seed: u64,
) -> Result<TestFunctionProbe, KmcError> {
    let profile = match profile {
        Some(p) => {
            if p.d != d || p.q != q {
                return Err(KmcError::BadGrid("profile built for different parameters"));
            }
            p.clone()
        }
        None => TestProfile::standard(d, q, q0)?,
    };
    let needed = (2.0 * profile.ell_q).ceil() as usize;
    if box_side < needed {
        return Err(KmcError::BoxTooSmall { given: box_side, needed });
    }
    if n_samples < 2 {
        return Err(KmcError::BadGrid("need at least two samples"));
    }

    let region = Region::cube(d, box_side)?;
    let model = ModelSpec::fa(d, 1)?;
    let table = ConstraintTable::new(&model, &region, &BoundaryCondition::occupied_halo())?;
    let n = region.n_sites();

    // indexed collect keeps the sample order fixed, so the reduction below
    // is identical for every thread count
    let sums: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i, Domain::Probe);
            let cfg = SpinConfig::sample(n, q, &mut rng);
            flip_sum(&cfg, &region, &table, &profile)
        })
        .collect();

    let (mean_s, var_s) = mean_var(&sums);
    let p = 1.0 - q;
    let d_hat = p * q * mean_s;
    let d_se = p * q * (var_s / n_samples as f64).sqrt();
    let (_, var_exact) = profile.exact_moments();
    Ok(TestFunctionProbe {
        d,
        q,
        ell_q: profile.ell_q,
        var_exact,
        d_hat,
        d_se,
        ratio: d_hat / var_exact,
        ratio_se: d_se / var_exact,
        box_side,
        n_samples,
        seed,
        profile,
    })
}
