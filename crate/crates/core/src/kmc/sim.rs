use rand::{Rng, RngCore};
use rand_chacha::ChaCha12Rng;
use std::hash::{Hash, Hasher};

use super::KmcError;
use crate::lattice::{
    BoundaryCondition, ConstraintTable, DensityParams, ModelSpec, Region, SpinConfig,
};
use crate::rng::{mix64, stream_rng, unit_f64, Domain};

/// Sampling times for trajectory observables; always starts at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    /// `[0, t_min, t_min*factor, ..., t_max]`. Exponential decays span
    /// decades, so curves are sampled geometrically. `t_max = 0` collapses
    /// to the single point 0.
    pub fn geometric(t_min: f64, t_max: f64, factor: f64) -> Result<Self, KmcError> {
        if !t_max.is_finite() || t_max < 0.0 {
            return Err(KmcError::NegativeHorizon(t_max));
        }
        if t_max == 0.0 {
            return Ok(TimeGrid { times: vec![0.0] });
        }
        if !(t_min > 0.0 && t_min <= t_max) {
            return Err(KmcError::BadGrid("t_min must lie in (0, t_max]"));
        }
        if !(factor > 1.0) {
            return Err(KmcError::BadGrid("grid factor must exceed 1"));
        }
        let mut times = vec![0.0];
        let mut v = t_min;
        while v < t_max * (1.0 - 1e-9) {
            times.push(v);
            v *= factor;
        }
        times.push(t_max);
        Ok(TimeGrid { times })
    }

    /// Explicit grid; must start at 0 and increase strictly.
    pub fn from_times(times: Vec<f64>) -> Result<Self, KmcError> {
        if times.first() != Some(&0.0) {
            return Err(KmcError::BadGrid("grid must start at 0"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(KmcError::BadGrid("grid must increase strictly"));
        }
        Ok(TimeGrid { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

/// Accumulated observables of one or more trajectories on a shared grid.
///
/// All counters are integers, so merging is exact and order-free: estimates
/// cannot depend on how samples were distributed over threads.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryObservables {
    pub grid: TimeGrid,
    pub tracked: Vec<usize>,
    pub n_trajectories: u64,
    /// Per grid time: trajectories whose site-0 value never changed.
    pub origin_survival: Vec<u64>,
    /// Per tracked site, per grid time: trajectories with the site occupied
    /// both at time 0 and at that time.
    pub product_counts: Vec<Vec<u64>>,
    /// Empty sites summed over all grid snapshots (equilibrium diagnostics).
    pub zero_site_count: u64,
    /// Constraint-satisfying refreshes performed (self-assignments included).
    pub events: u64,
    /// Order-free digest of the final configurations.
    pub config_digest: u64,
    pub seed: u64,
}

impl TrajectoryObservables {
    pub(crate) fn empty(grid: &TimeGrid, tracked: &[usize], seed: u64) -> Self {
        TrajectoryObservables {
            grid: grid.clone(),
            tracked: tracked.to_vec(),
            n_trajectories: 0,
            origin_survival: vec![0; grid.len()],
            product_counts: vec![vec![0; grid.len()]; tracked.len()],
            zero_site_count: 0,
            events: 0,
            config_digest: 0,
            seed,
        }
    }

    /// Adds `other` into `self`. Panics if the grids or tracked sites differ:
    /// merging across mismatched estimators is a programming error.
    pub fn merge(&mut self, other: &TrajectoryObservables) {
        assert_eq!(self.grid, other.grid, "merge across different grids");
        assert_eq!(self.tracked, other.tracked, "merge across different tracked sites");
        self.n_trajectories += other.n_trajectories;
        for (a, b) in self.origin_survival.iter_mut().zip(&other.origin_survival) {
            *a += b;
        }
        for (ra, rb) in self.product_counts.iter_mut().zip(&other.product_counts) {
            for (a, b) in ra.iter_mut().zip(rb) {
                *a += b;
            }
        }
        self.zero_site_count += other.zero_site_count;
        self.events += other.events;
        self.config_digest ^= other.config_digest;
        self.seed = self.seed.min(other.seed);
    }

    /// Survival fractions F(t) per grid time.
    pub fn survival_fractions(&self) -> Vec<f64> {
        let n = self.n_trajectories.max(1) as f64;
        self.origin_survival.iter().map(|&k| k as f64 / n).collect()
    }
}

/// One trajectory of the uniformized chain on a private stream.
///
/// Every step advances the clock by an Exponential(N) wait, picks a uniform
/// site, and — only if the constraint holds — resamples its spin to occupied
/// with probability p. A refresh that reproduces the current value counts as
/// an event but does not end persistence.
pub(crate) fn run_trajectory(
    table: &ConstraintTable,
    params: DensityParams,
    grid: &TimeGrid,
    tracked: &[usize],
    initial: Option<&SpinConfig>,
    rng: &mut ChaCha12Rng,
    out: &mut TrajectoryObservables,
) {
    let times = grid.times();
    let n = table.n_sites();
    let nf = n as f64;
    let p = params.p();
    let mut cfg = match initial {
        Some(c) => c.clone(),
        None => SpinConfig::sample(n, params.q(), rng),
    };
    let origin_start = cfg.occupied(0);
    let base: Vec<bool> = tracked.iter().map(|&s| cfg.occupied(s)).collect();
    let mut alive = true;
    let mut t = 0.0f64;
    let mut gi = 0usize;

    loop {
        let dt = -(1.0 - unit_f64(rng.next_u64())).ln() / nf;
        let t_next = t + dt;
        while gi < times.len() && times[gi] <= t_next {
            out.origin_survival[gi] += alive as u64;
            for (j, &s) in tracked.iter().enumerate() {
                out.product_counts[j][gi] += (base[j] && cfg.occupied(s)) as u64;
            }
            out.zero_site_count += cfg.count_empty() as u64;
            gi += 1;
        }
        if gi == times.len() {
            break;
        }
        let site = rng.gen_range(0..n);
        if table.satisfied(&cfg, site) {
            out.events += 1;
            let occupy = unit_f64(rng.next_u64()) < p;
            if occupy != cfg.occupied(site) {
                cfg.toggle(site);
                if site == 0 && origin_start != cfg.occupied(0) {
                    alive = false;
                }
            }
        }
        t = t_next;
    }

    let mut h = std::collections::hash_map::DefaultHasher::new();
    cfg.hash(&mut h);
    out.config_digest ^= mix64(h.finish() ^ mix64(out.n_trajectories));
    out.n_trajectories += 1;
}

/// Simulates a single trajectory. The initial configuration is sampled from
/// the stationary product measure unless one is supplied. Deterministic in
/// `seed`.
#[allow(clippy::too_many_arguments)]
pub fn kmc_run(
    model: &ModelSpec,
    region: &Region,
    bc: &BoundaryCondition,
    params: DensityParams,
    grid: &TimeGrid,
    tracked: &[usize],
    initial: Option<&SpinConfig>,
    seed: u64,
) -> Result<TrajectoryObservables, KmcError> {
    let table = ConstraintTable::new(model, region, bc)?;
    if let Some(&bad) = tracked.iter().find(|&&s| s >= region.n_sites()) {
        return Err(KmcError::TrackedOutOfRange(bad));
    }
    if let Some(c) = initial {
        if c.len() != region.n_sites() {
            return Err(KmcError::BadGrid("initial configuration size mismatch"));
        }
    }
    let mut out = TrajectoryObservables::empty(grid, tracked, seed);
    let mut rng = stream_rng(seed, 0, Domain::Kmc);
    run_trajectory(&table, params, grid, tracked, initial, &mut rng, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::HaloFill;

    fn east_table(l: usize, fill: HaloFill) -> (ModelSpec, Region, BoundaryCondition) {
        (
            ModelSpec::east(),
            Region::cube(1, l).unwrap(),
            BoundaryCondition::FrozenHalo(fill),
        )
    }

    #[test]
    fn geometric_grid_shape() {
        let g = TimeGrid::geometric(0.5, 100.0, 1.25).unwrap();
        let t = g.times();
        assert_eq!(t[0], 0.0);
        assert_eq!(t[1], 0.5);
        assert!((t[2] / t[1] - 1.25).abs() < 1e-12);
        assert_eq!(*t.last().unwrap(), 100.0);
        assert!(t.windows(2).all(|w| w[1] > w[0]));

        assert_eq!(TimeGrid::geometric(1.0, 0.0, 1.25).unwrap().times(), &[0.0]);
        assert!(TimeGrid::geometric(0.0, 1.0, 1.25).is_err());
        assert!(TimeGrid::geometric(0.5, 1.0, 1.0).is_err());
        assert!(TimeGrid::geometric(0.5, -1.0, 2.0).is_err());
    }

    #[test]
    fn zero_horizon_returns_initial_state() {
        let (m, r, bc) = east_table(4, HaloFill::Empty);
        let grid = TimeGrid::geometric(1.0, 0.0, 1.25).unwrap();
        let obs = kmc_run(&m, &r, &bc, DensityParams::new(0.3).unwrap(), &grid, &[0], None, 7)
            .unwrap();
        assert_eq!(obs.events, 0);
        assert_eq!(obs.n_trajectories, 1);
        assert_eq!(obs.origin_survival, vec![1]);
    }

    #[test]
    fn fully_blocked_configuration_never_moves() {
        let (m, r, bc) = east_table(5, HaloFill::Occupied);
        let grid = TimeGrid::geometric(1.0, 50.0, 1.5).unwrap();
        let full = SpinConfig::filled(5);
        let obs = kmc_run(
            &m,
            &r,
            &bc,
            DensityParams::new(0.4).unwrap(),
            &grid,
            &[0, 4],
            Some(&full),
            11,
        )
        .unwrap();
        assert_eq!(obs.events, 0);
        assert!(obs.origin_survival.iter().all(|&k| k == 1));
        assert_eq!(obs.zero_site_count, 0);
    }

    #[test]
    fn unconstrained_event_count_is_poissonian() {
        let model = ModelSpec::unconstrained(1).unwrap();
        let region = Region::cube(1, 4).unwrap();
        let bc = BoundaryCondition::FrozenHalo(HaloFill::Occupied);
        let grid = TimeGrid::geometric(1.0, 50.0, 2.0).unwrap();
        let mut events = Vec::new();
        for seed in 0..40u64 {
            let obs = kmc_run(
                &model,
                &region,
                &bc,
                DensityParams::new(0.5).unwrap(),
                &grid,
                &[],
                None,
                seed,
            )
            .unwrap();
            events.push(obs.events as f64);
        }
        // each run: every attempt is legal, so events ~ Poisson(N * t) = Poisson(200)
        let mean = events.iter().sum::<f64>() / events.len() as f64;
        let sigma = (200.0f64 / events.len() as f64).sqrt();
        assert!(
            (mean - 200.0).abs() < 3.0 * sigma,
            "mean {mean} vs 200 +- {sigma}"
        );
    }

    #[test]
    fn trajectories_reproduce_and_merge_exactly() {
        let (m, r, bc) = east_table(6, HaloFill::Empty);
        let grid = TimeGrid::geometric(0.5, 20.0, 1.25).unwrap();
        let params = DensityParams::new(0.3).unwrap();
        let a = kmc_run(&m, &r, &bc, params, &grid, &[0, 3], None, 99).unwrap();
        let b = kmc_run(&m, &r, &bc, params, &grid, &[0, 3], None, 99).unwrap();
        assert_eq!(a, b);

        let mut ab = a.clone();
        ab.merge(&b);
        assert_eq!(ab.n_trajectories, 2);
        assert_eq!(ab.origin_survival[0], 2);
        assert_eq!(ab.events, 2 * a.events);
        assert_ne!(ab.config_digest, a.config_digest);
    }
}
