//! Deterministic parallel emptying, its closure, internal-spanning tests,
//! and Monte Carlo spanning-probability estimation.

use rayon::prelude::*;
use thiserror::Error;

use crate::lattice::{
    BoundaryCondition, ConstraintTable, LatticeError, ModelSpec, Region, SpinConfig,
};
use crate::rng::{stream_rng, Domain};
use crate::stats::wilson_95;

#[derive(Debug, Error)]
pub enum BootstrapError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("target {target} not reached by L={l_max}: estimate {estimate}")]
    TargetNotReached {
        target: f64,
        l_max: usize,
        estimate: f64,
    },
}

/// Fixed point of the parallel emptying map.
#[derive(Debug, Clone)]
pub struct ClosureResult {
    pub final_config: SpinConfig,
    /// Number of parallel rounds that changed the configuration.
    pub iterations: usize,
    pub emptied: bool,
}

/// One parallel round: a site becomes empty iff it already is, or its
/// constraint holds in the *input* configuration.
pub fn bootstrap_step(table: &ConstraintTable, cfg: &SpinConfig) -> SpinConfig {
    let mut out = cfg.clone();
    for i in 0..table.n_sites() {
        if cfg.occupied(i) && table.satisfied(cfg, i) {
            out.set(i, false);
        }
    }
    out
}

/// Iterate the emptying map to its fixed point.
///
/// Runs the frontier algorithm: when a site empties, only the sites whose
/// constraint reads it can newly qualify, so each round rechecks just the
/// influenced neighbors of the previous round. Round counts match the
/// parallel map exactly (zeros only grow, so evaluating a candidate after
/// this round's flips equals evaluating it before the next round).
pub fn bootstrap_closure(table: &ConstraintTable, cfg: &SpinConfig) -> ClosureResult {
    let n = table.n_sites();
    let influencers = table.influencers();
    let mut state = cfg.clone();
    // seed: occupied sites already satisfiable in the input
    let mut frontier: Vec<usize> = (0..n)
        .filter(|&i| cfg.occupied(i) && table.satisfied(cfg, i))
        .collect();
    let mut round_stamp = vec![u32::MAX; n];
    let mut iterations = 0u32;
    while !frontier.is_empty() {
        iterations += 1;
        for &x in &frontier {
            state.set(x, false);
        }
        let mut next = Vec::new();
        for &x in &frontier {
            for &z in &influencers[x] {
                let z = z as usize;
                if state.occupied(z)
                    && round_stamp[z] != iterations
                    && table.satisfied(&state, z)
                {
                    round_stamp[z] = iterations;
                    next.push(z);
                }
            }
        }
        frontier = next;
    }
    let emptied = state.is_all_empty();
    ClosureResult {
        final_config: state,
        iterations: iterations as usize,
        emptied,
    }
}

/// True iff the closure with an all-occupied exterior empties the region.
pub fn is_internally_spanned(
    model: &ModelSpec,
    region: &Region,
    cfg: &SpinConfig,
) -> Result<bool, LatticeError> {
    let table = ConstraintTable::new(model, region, &BoundaryCondition::occupied_halo())?;
    Ok(bootstrap_closure(&table, cfg).emptied)
}

/// Monte Carlo estimate of the internal-spanning probability on an L-cube.
#[derive(Debug, Clone)]
pub struct SpanningEstimate {
    pub model: String,
    pub dim: usize,
    pub l: usize,
    pub q: f64,
    pub n_samples: u64,
    pub hits: u64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seed: u64,
}

/// Samples i.i.d. Bernoulli configurations on the L-cube and counts how many
/// are internally spanned. Sample i draws from stream (seed, i), so the
/// result is identical for any worker count.
pub fn spanning_probability(
    model: &ModelSpec,
    l: usize,
    q: f64,
    n_samples: u64,
    seed: u64,
) -> Result<SpanningEstimate, LatticeError> {
    let region = Region::cube(model.dim(), l)?;
    let table = ConstraintTable::new(model, &region, &BoundaryCondition::occupied_halo())?;
    let n_sites = region.n_sites();
    let hits: u64 = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i, Domain::Bootstrap);
            let cfg = SpinConfig::sample(n_sites, q, &mut rng);
            u64::from(bootstrap_closure(&table, &cfg).emptied)
        })
        .sum();
    let (ci_lo, ci_hi) = wilson_95(hits, n_samples);
    Ok(SpanningEstimate {
        model: model.name().to_string(),
        dim: model.dim(),
        l,
        q,
        n_samples,
        hits,
        estimate: hits as f64 / n_samples as f64,
        ci_lo,
        ci_hi,
        seed,
    })
}

#[derive(Debug, Clone)]
pub struct CriticalLength {
    pub l: usize,
    pub at_l: SpanningEstimate,
    /// Estimate at the largest scanned L below the crossing, if any.
    pub below: Option<SpanningEstimate>,
}

/// Smallest L (up to `l_max`) whose estimated spanning probability reaches
/// `target`, by bisection under the monotone-in-L assumption. Each L uses a
/// seed derived from (seed, L) so scan points are independent.
pub fn critical_length(
    model: &ModelSpec,
    q: f64,
    target: f64,
    l_max: usize,
    n_samples: u64,
    seed: u64,
) -> Result<CriticalLength, BootstrapError> {
    assert!((0.0..1.0).contains(&target) && target > 0.0);
    assert!(l_max >= 1);
    let probe = |l: usize| {
        spanning_probability(model, l, q, n_samples, crate::rng::mix64(seed ^ l as u64))
    };
    let top = probe(l_max)?;
    if top.estimate < target {
        return Err(BootstrapError::TargetNotReached {
            target,
            l_max,
            estimate: top.estimate,
        });
    }
    let bottom = probe(1)?;
    if bottom.estimate >= target {
        return Ok(CriticalLength {
            l: 1,
            at_l: bottom,
            below: None,
        });
    }
    // invariant: estimate(lo) < target <= estimate(hi)
    let (mut lo, mut hi) = (1usize, l_max);
    let (mut lo_est, mut hi_est) = (bottom, top);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let est = probe(mid)?;
        if est.estimate >= target {
            hi = mid;
            hi_est = est;
        } else {
            lo = mid;
            lo_est = est;
        }
    }
    Ok(CriticalLength {
        l: hi,
        at_l: hi_est,
        below: Some(lo_est),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{BoundaryCondition, ModelSpec, Region};
    use rand::SeedableRng;

    fn east_table(l: usize) -> ConstraintTable {
        let region = Region::new(1, &[l]).unwrap();
        ConstraintTable::new(&ModelSpec::east(), &region, &BoundaryCondition::occupied_halo())
            .unwrap()
    }

    #[test]
    fn step_examples() {
        let t = east_table(3);
        let cfg = SpinConfig::from_bits(&[true, true, false]);
        assert_eq!(bootstrap_step(&t, &cfg), SpinConfig::from_bits(&[true, false, false]));
        let zeros = SpinConfig::vacant(3);
        assert_eq!(bootstrap_step(&t, &zeros), zeros);

        let region = Region::new(1, &[3]).unwrap();
        let fa = ConstraintTable::new(
            &ModelSpec::fa(1, 1).unwrap(),
            &region,
            &BoundaryCondition::occupied_halo(),
        )
        .unwrap();
        let cfg = SpinConfig::from_bits(&[true, false, true]);
        assert_eq!(bootstrap_step(&fa, &cfg), SpinConfig::vacant(3));
    }

    #[test]
    fn closure_round_counts() {
        let t = east_table(3);
        let res = bootstrap_closure(&t, &SpinConfig::from_bits(&[true, true, false]));
        assert!(res.emptied);
        assert_eq!(res.iterations, 2);
        let frozen = bootstrap_closure(&t, &SpinConfig::filled(3));
        assert!(!frozen.emptied);
        assert_eq!(frozen.iterations, 0);
        assert_eq!(frozen.final_config, SpinConfig::filled(3));
    }

    #[test]
    fn closure_matches_repeated_steps() {
        // frontier algorithm vs the literal parallel map, random configs
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        let region = Region::new(2, &[4, 4]).unwrap();
        for model in [
            ModelSpec::fa(2, 2).unwrap(),
            ModelSpec::mb(2).unwrap(),
            ModelSpec::ne(),
        ] {
            let t = ConstraintTable::new(&model, &region, &BoundaryCondition::occupied_halo())
                .unwrap();
            for _ in 0..50 {
                let cfg = SpinConfig::sample(16, 0.4, &mut rng);
                let fast = bootstrap_closure(&t, &cfg);
                let mut slow = cfg.clone();
                let mut steps = 0;
                loop {
                    let next = bootstrap_step(&t, &slow);
                    if next == slow {
                        break;
                    }
                    slow = next;
                    steps += 1;
                }
                assert_eq!(fast.final_config, slow);
                assert_eq!(fast.iterations, steps);
                assert!(steps <= 16);
            }
        }
    }

    #[test]
    fn fa2f_diagonal_zeros_empty_the_square() {
        let region = Region::new(2, &[3, 3]).unwrap();
        let mut cfg = SpinConfig::filled(9);
        for k in 0..3 {
            cfg.set(region.index(&[k, k, 0, 0]).unwrap(), false);
        }
        assert!(is_internally_spanned(&ModelSpec::fa(2, 2).unwrap(), &region, &cfg).unwrap());
    }

    #[test]
    fn fa2f_antidiagonal_pair_spans_2x2() {
        let region = Region::new(2, &[2, 2]).unwrap();
        let mut cfg = SpinConfig::filled(4);
        cfg.set(region.index(&[0, 0, 0, 0]).unwrap(), false);
        cfg.set(region.index(&[1, 1, 0, 0]).unwrap(), false);
        assert!(is_internally_spanned(&ModelSpec::fa(2, 2).unwrap(), &region, &cfg).unwrap());
    }

    #[test]
    fn spanning_extremes() {
        let region = Region::new(1, &[5]).unwrap();
        let fa = ModelSpec::fa(1, 1).unwrap();
        // any zero spans under single-neighbor facilitation
        assert!(is_internally_spanned(&fa, &region, &SpinConfig::from_bits(&[true, true, false, true, true])).unwrap());
        assert!(!is_internally_spanned(&fa, &region, &SpinConfig::filled(5)).unwrap());
        let est = spanning_probability(&fa, 4, 1.0, 100, 1).unwrap();
        assert_eq!(est.estimate, 1.0);
        let est = spanning_probability(&fa, 4, 0.0, 100, 1).unwrap();
        assert_eq!(est.estimate, 0.0);
    }

    #[test]
    fn spanning_reproducible_and_calibrated() {
        let fa = ModelSpec::fa(1, 1).unwrap();
        let a = spanning_probability(&fa, 2, 0.5, 4000, 42).unwrap();
        let b = spanning_probability(&fa, 2, 0.5, 4000, 42).unwrap();
        assert_eq!(a.hits, b.hits);
        // exact value 1 - (1-q)^2 = 0.75; 3 sigma band
        let sigma = (0.75 * 0.25 / 4000.0f64).sqrt();
        assert!((a.estimate - 0.75).abs() < 3.0 * sigma, "{}", a.estimate);
    }

    #[test]
    fn critical_length_scan() {
        let fa = ModelSpec::fa(1, 1).unwrap();
        // smallest L with 1-(1-q)^L >= 0.9 at q=0.5 is 4
        let res = critical_length(&fa, 0.5, 0.9, 32, 10_000, 7).unwrap();
        assert_eq!(res.l, 4);
        assert!(res.below.unwrap().estimate < 0.9);
        // L=1 already crosses a low target at high q
        let res = critical_length(&fa, 0.75, 0.5, 32, 10_000, 7).unwrap();
        assert_eq!(res.l, 1);
        // unreachable target reports the top-of-scan estimate
        assert!(matches!(
            critical_length(&ModelSpec::ne(), 0.01, 0.99, 4, 200, 7),
            Err(BootstrapError::TargetNotReached { .. })
        ));
    }
}
