//! North-East oriented percolation on the quadrant: occupied clusters, their
//! range, depth-L survival, and a finite-size bracket for the critical
//! density. The dynamics with the north-east constraint is ergodic exactly
//! when the oriented occupied cluster of a site is almost surely finite, so
//! these estimators probe the ergodicity threshold from the static side.

use rayon::prelude::*;
use thiserror::Error;

use crate::lattice::{l1_norm, Coord, LatticeError, Region, SpinConfig};
use crate::rng::{mix64, stream_rng, unit_f64, Domain};
use crate::stats;

/// Exploration cap for cluster ranges: the range is unbounded at
/// criticality, so censoring is always possible and must stay visible.
pub const DEFAULT_RANGE_CAP: usize = 1 << 12;

const BISECTIONS: u32 = 8;

#[derive(Debug, Error)]
pub enum PercError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("oriented clusters need a two-dimensional region, got {0}")]
    NotTwoDimensional(usize),
    #[error("root {0:?} lies outside the region")]
    RootOutside(Coord),
    #[error("occupation probability {0} outside [0,1]")]
    BadProbability(f64),
    #[error("invalid input: {0}")]
    BadInput(&'static str),
    #[error("survival at depth {depth} does not cross 1/2 on the given grid")]
    NoCrossing { depth: usize },
}

/// Sites reachable from a root by +e1/+e2 steps through occupied sites.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedCluster {
    pub root: Coord,
    /// Reachable occupied sites (the root included when occupied), in BFS
    /// order of discovery.
    pub members: Vec<Coord>,
    /// 0 for an empty cluster, else `1 + max l1 distance` of a member from
    /// the root; censored values are reported at the cap.
    pub range: usize,
    /// True when the exploration reached the distance cap.
    pub censored: bool,
}

/// What survives of a cluster at l1 distance exactly `depth` from the root.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceRecord {
    pub depth: usize,
    /// First-coordinate displacements of the members at that distance,
    /// ascending.
    pub projection: Vec<i64>,
    pub right_edge: Option<i64>,
    pub left_edge: Option<i64>,
    pub survived: bool,
}

/// BFS of the oriented occupied cluster of `root`, exploring no farther than
/// l1 distance `cap` from it.
pub fn ne_cluster(
    cfg: &SpinConfig,
    region: &Region,
    root: &Coord,
    cap: usize,
) -> Result<OrientedCluster, PercError> {
    if region.dim() != 2 {
        return Err(PercError::NotTwoDimensional(region.dim()));
    }
    let root_idx = region.index(root).ok_or(PercError::RootOutside(*root))?;
    let mut members = Vec::new();
    let mut censored = false;
    let mut max_dist = 0usize;
    if cfg.occupied(root_idx) {
        let mut seen = vec![false; region.n_sites()];
        let mut queue = std::collections::VecDeque::new();
        seen[root_idx] = true;
        queue.push_back(*root);
        while let Some(c) = queue.pop_front() {
            let dist = {
                let mut d = c;
                d[0] -= root[0];
                d[1] -= root[1];
                l1_norm(&d) as usize
            };
            members.push(c);
            max_dist = max_dist.max(dist);
            if dist == cap {
                censored = true;
                continue;
            }
            for axis in 0..2 {
                let mut next = c;
                next[axis] += 1;
                if let Some(idx) = region.index(&next) {
                    if !seen[idx] && cfg.occupied(idx) {
                        seen[idx] = true;
                        queue.push_back(next);
                    }
                }
            }
        }
    }
    let range = if members.is_empty() { 0 } else { 1 + max_dist };
    Ok(OrientedCluster { root: *root, members, range, censored })
}

/// Cap-censored range of the oriented cluster of `root` and whether the cap
/// was hit. `cap` defaults to [`DEFAULT_RANGE_CAP`].
pub fn cluster_range(
    cfg: &SpinConfig,
    region: &Region,
    root: &Coord,
    cap: Option<usize>,
) -> Result<(usize, bool), PercError> {
    let cluster = ne_cluster(cfg, region, root, cap.unwrap_or(DEFAULT_RANGE_CAP))?;
    Ok((cluster.range, cluster.censored))
}

/// Projects a cluster onto the antidiagonal at l1 distance `depth`.
pub fn slice_record(cluster: &OrientedCluster, depth: usize) -> SliceRecord {
    let mut projection: Vec<i64> = cluster
        .members
        .iter()
        .filter(|c| (c[0] - cluster.root[0] + c[1] - cluster.root[1]) as usize == depth)
        .map(|c| c[0] - cluster.root[0])
        .collect();
    projection.sort_unstable();
    let survived = !projection.is_empty();
    SliceRecord {
        depth,
        right_edge: projection.last().copied(),
        left_edge: projection.first().copied(),
        projection,
        survived,
    }
}

/// Depth-L survival estimate with edge statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalEstimate {
    pub p: f64,
    pub depth: usize,
    pub n: u64,
    pub survived: u64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Mean right/left edge displacement among surviving samples (NaN when
    /// none survive).
    pub r_mean: f64,
    pub l_mean: f64,
    pub seed: u64,
}

/// One quadrant sample, evaluated level by level: a site of level l+1 is
/// reached iff it is occupied and one of its two level-l predecessors is
/// reached. Every site of a level draws its occupancy before the level is
/// resolved, so the stream layout is independent of the outcome.
fn sample_levels(p: f64, depth: usize, rng: &mut rand_chacha::ChaCha12Rng) -> (bool, i64, i64) {
    use rand::RngCore;
    let mut reached = vec![unit_f64(rng.next_u64()) < p];
    for level in 1..=depth {
        let mut next = vec![false; level + 1];
        let mut any = false;
        for x1 in 0..=level {
            let occ = unit_f64(rng.next_u64()) < p;
            if occ {
                let from_e2 = x1 < level && reached[x1];
                let from_e1 = x1 > 0 && reached[x1 - 1];
                if from_e1 || from_e2 {
                    next[x1] = true;
                    any = true;
                }
            }
        }
        if !any {
            return (false, 0, 0);
        }
        reached = next;
    }
    let r = (0..reached.len()).rev().find(|&i| reached[i]);
    let l = (0..reached.len()).find(|&i| reached[i]);
    match (l, r) {
        (Some(l), Some(r)) => (true, r as i64, l as i64),
        _ => (false, 0, 0),
    }
}

fn survival_with_offset(
    p: f64,
    depth: usize,
    n_samples: u64,
    seed: u64,
    stream_salt: u64,
) -> Result<SurvivalEstimate, PercError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(PercError::BadProbability(p));
    }
    if n_samples == 0 {
        return Err(PercError::BadInput("need at least one sample"));
    }
    let eff_seed = if stream_salt == 0 { seed } else { mix64(seed ^ stream_salt) };
    let outcomes: Vec<(bool, i64, i64)> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(eff_seed, i, Domain::Perc);
            sample_levels(p, depth, &mut rng)
        })
        .collect();
    let mut survived = 0u64;
    let (mut r_sum, mut l_sum) = (0i64, 0i64);
    for &(s, r, l) in &outcomes {
        if s {
            survived += 1;
            r_sum += r;
            l_sum += l;
        }
    }
    let (ci_lo, ci_hi) = stats::wilson_95(survived, n_samples);
    let (r_mean, l_mean) = if survived > 0 {
        (r_sum as f64 / survived as f64, l_sum as f64 / survived as f64)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(SurvivalEstimate {
        p,
        depth,
        n: n_samples,
        survived,
        estimate: survived as f64 / n_samples as f64,
        ci_lo,
        ci_hi,
        r_mean,
        l_mean,
        seed,
    })
}

/// Monte Carlo estimate of the probability that the oriented cluster of the
/// origin in a Bernoulli(p) quadrant reaches l1 depth `depth`, with a Wilson
/// 95% interval and mean surviving edges.
pub fn survival_probability(
    p: f64,
    depth: usize,
    n_samples: u64,
    seed: u64,
) -> Result<SurvivalEstimate, PercError> {
    survival_with_offset(p, depth, n_samples, seed, 0)
}

/// Where depth-L survival crosses 1/2, bracketed by bisection.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingRecord {
    pub depth: usize,
    pub p_lo: f64,
    pub p_hi: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
}

/// Finite-size crossings for a ladder of depths. The envelope is a
/// diagnostic bracket only: the depth-L crossing converges to the density
/// where the infinite-cluster probability reaches 1/2, an upper region for
/// the critical density itself, so no point estimate is reported.
#[derive(Debug, Clone, PartialEq)]
pub struct PcEstimate {
    pub crossings: Vec<CrossingRecord>,
    /// (smallest p_lo, largest p_hi) over the crossings.
    pub bracket: (f64, f64),
    pub n_samples: u64,
    pub seed: u64,
}

/// For each depth, evaluates survival on the grid, finds the first adjacent
/// pair straddling 1/2, and bisects it. Distinct evaluations use distinct
/// derived streams so enlarging the grid never reuses samples.
pub fn pc_estimate(
    depths: &[usize],
    p_grid: &[f64],
    n_samples: u64,
    seed: u64,
) -> Result<PcEstimate, PercError> {
    if depths.is_empty() || depths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(PercError::BadInput("depth list must be strictly increasing"));
    }
    if p_grid.len() < 2 || p_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(PercError::BadInput("probability grid must be strictly increasing"));
    }
    if p_grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(PercError::BadProbability(*p_grid.last().unwrap()));
    }

    let mut crossings = Vec::with_capacity(depths.len());
    for (di, &depth) in depths.iter().enumerate() {
        let mut salt = ((di as u64) << 32) | 1;
        let theta = |p: f64, salt: u64| -> Result<f64, PercError> {
            Ok(survival_with_offset(p, depth, n_samples, seed, salt)?.estimate)
        };
        let mut grid_vals = Vec::with_capacity(p_grid.len());
        for &p in p_grid {
            let v = theta(p, salt)?;
            salt += 1;
            grid_vals.push(v);
        }
        let hit = grid_vals.iter().position(|&v| v >= 0.5);
        let i = match hit {
            Some(i) if i > 0 => i,
            _ => return Err(PercError::NoCrossing { depth }),
        };
        let (mut p_lo, mut p_hi) = (p_grid[i - 1], p_grid[i]);
        let (mut theta_lo, mut theta_hi) = (grid_vals[i - 1], grid_vals[i]);
        for _ in 0..BISECTIONS {
            let mid = 0.5 * (p_lo + p_hi);
            let v = theta(mid, salt)?;
            salt += 1;
            if v >= 0.5 {
                p_hi = mid;
                theta_hi = v;
            } else {
                p_lo = mid;
                theta_lo = v;
            }
        }
        crossings.push(CrossingRecord { depth, p_lo, p_hi, theta_lo, theta_hi });
    }
    let bracket = (
        crossings.iter().map(|c| c.p_lo).fold(f64::INFINITY, f64::min),
        crossings.iter().map(|c| c.p_hi).fold(f64::NEG_INFINITY, f64::max),
    );
    Ok(PcEstimate { crossings, bracket, n_samples, seed })
}
