use super::{SpectralError, MAX_STATES};
use crate::lattice::{
    BoundaryCondition, ConstraintTable, DensityParams, ModelSpec, Region, SpinConfig,
};

/// Enumerated state set: either every bitmask on `n_sites` sites, or an
/// explicit sorted subset (a restricted component).
#[derive(Debug, Clone)]
pub enum StateList {
    Full { n_sites: usize },
    Subset(Vec<u64>),
}

impl StateList {
    pub fn len(&self) -> usize {
        match self {
            StateList::Full { n_sites } => 1usize << n_sites,
            StateList::Subset(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn mask(&self, i: usize) -> u64 {
        match self {
            StateList::Full { .. } => i as u64,
            StateList::Subset(v) => v[i],
        }
    }

    #[inline]
    pub fn position(&self, mask: u64) -> Option<usize> {
        match self {
            StateList::Full { n_sites } => {
                (mask < (1u64 << n_sites)).then_some(mask as usize)
            }
            StateList::Subset(v) => v.binary_search(&mask).ok(),
        }
    }
}

/// Sparse rate matrix of the finite-volume chain, with its state enumeration
/// and stationary product weights.
///
/// Off-diagonal entry (i -> j) is the refresh rate q (occupied to empty) or
/// p (empty to occupied), present iff the flipped site's constraint holds;
/// the diagonal is minus the row sum. Reversibility w.r.t. the product
/// weights is structural: constraints ignore the flipped spin, so entries
/// come in (i,j)/(j,i) pairs with rates q and p.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    n_sites: usize,
    q: f64,
    states: StateList,
    row_ptr: Vec<u64>,
    cols: Vec<u32>,
    rates: Vec<f64>,
    /// Positive row sums: total exit rate per state.
    exit: Vec<f64>,
    /// Stationary weights normalized over the enumerated states.
    mu: Vec<f64>,
}

/// Builds the generator over the full state space (or the states with at
/// least one empty site under the restricted boundary mode).
pub fn build_generator(
    model: &ModelSpec,
    region: &Region,
    bc: &BoundaryCondition,
    params: DensityParams,
) -> Result<GeneratorMatrix, SpectralError> {
    let table = ConstraintTable::new(model, region, bc)?;
    let n_sites = region.n_sites();
    if n_sites > MAX_STATES.trailing_zeros() as usize {
        return Err(SpectralError::TooManyStates {
            sites: n_sites,
            states: 2u128.pow(n_sites as u32),
        });
    }
    let q = params.q();
    if !(q > 0.0 && q < 1.0) {
        return Err(SpectralError::DegenerateDensity(q));
    }
    let states = if table.is_restricted() {
        if model.always_free() {
            return Err(SpectralError::RestrictedNotClosed);
        }
        // all states holding at least one empty site
        StateList::Subset((0..(1u64 << n_sites)).filter(|&m| m != full_mask(n_sites)).collect())
    } else {
        StateList::Full { n_sites }
    };
    GeneratorMatrix::from_states(&table, states, q)
}

fn full_mask(n_sites: usize) -> u64 {
    if n_sites == 64 {
        u64::MAX
    } else {
        (1u64 << n_sites) - 1
    }
}

impl GeneratorMatrix {
    fn from_states(
        table: &ConstraintTable,
        states: StateList,
        q: f64,
    ) -> Result<Self, SpectralError> {
        let n_sites = table.n_sites();
        let p = 1.0 - q;
        let n = states.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0u64);
        let mut cols: Vec<u32> = Vec::new();
        let mut rates: Vec<f64> = Vec::new();
        let mut exit = Vec::with_capacity(n);
        let mut row: Vec<(u32, f64)> = Vec::with_capacity(n_sites);
        for i in 0..n {
            let mask = states.mask(i);
            let cfg = SpinConfig::from_state_index(n_sites, mask);
            row.clear();
            for x in 0..n_sites {
                if table.satisfied(&cfg, x) {
                    let target = mask ^ (1u64 << x);
                    let j = states
                        .position(target)
                        .expect("state space closed under legal flips");
                    let rate = if cfg.occupied(x) { q } else { p };
                    row.push((j as u32, rate));
                }
            }
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut total = 0.0;
            for &(c, r) in &row {
                cols.push(c);
                rates.push(r);
                total += r;
            }
            exit.push(total);
            row_ptr.push(cols.len() as u64);
        }
        let mut mu: Vec<f64> = (0..n)
            .map(|i| {
                let ones = states.mask(i).count_ones() as i32;
                p.powi(ones) * q.powi(n_sites as i32 - ones)
            })
            .collect();
        let z: f64 = mu.iter().sum();
        for w in &mut mu {
            *w /= z;
        }
        Ok(GeneratorMatrix {
            n_sites,
            q,
            states,
            row_ptr,
            cols,
            rates,
            exit,
            mu,
        })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn states(&self) -> &StateList {
        &self.states
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// Off-diagonal entries of row `i` as (column, rate) pairs, column-sorted.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i] as usize, self.row_ptr[i + 1] as usize);
        self.cols[a..b]
            .iter()
            .zip(&self.rates[a..b])
            .map(|(&c, &r)| (c as usize, r))
    }

    /// Total exit rate of state `i` (minus the diagonal entry).
    pub fn exit_rate(&self, i: usize) -> f64 {
        self.exit[i]
    }

    pub fn n_entries(&self) -> usize {
        self.cols.len()
    }

    /// y = (-S) x for the symmetrized generator S = W^{1/2} L W^{-1/2}.
    ///
    /// Reversibility makes every off-diagonal of S equal sqrt(rate_ij *
    /// rate_ji) = sqrt(pq) on legal-move edges, so the apply needs no
    /// stationary-weight ratios. Row-parallel is safe: each output element
    /// is one sequential sum, independent of the partitioning.
    pub fn apply_neg_sym(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_states());
        debug_assert_eq!(y.len(), self.n_states());
        let s = (self.q * (1.0 - self.q)).sqrt();
        for i in 0..self.n_states() {
            let (a, b) = (self.row_ptr[i] as usize, self.row_ptr[i + 1] as usize);
            let mut acc = 0.0;
            for &c in &self.cols[a..b] {
                acc += x[c as usize];
            }
            y[i] = self.exit[i] * x[i] - s * acc;
        }
    }

    /// Largest absolute violation of pairwise reversibility
    /// mu_i r_ij = mu_j r_ji over all stored entries.
    pub fn detailed_balance_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n_states() {
            for (j, r_ij) in self.row(i) {
                let r_ji = self
                    .row(j)
                    .find(|&(c, _)| c == i)
                    .map(|(_, r)| r)
                    .unwrap_or(0.0);
                worst = worst.max((self.mu[i] * r_ij - self.mu[j] * r_ji).abs());
            }
        }
        worst
    }

    /// Largest absolute row sum of the full generator (diagonal included).
    pub fn row_sum_residual(&self) -> f64 {
        (0..self.n_states())
            .map(|i| {
                let off: f64 = self.row(i).map(|(_, r)| r).sum();
                (off - self.exit[i]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Connected components of the undirected legal-move graph, as state
    /// indices, largest first (ties: smaller minimum index first). The
    /// component count is the multiplicity of eigenvalue 0.
    pub fn ergodic_components(&self) -> Vec<Vec<u32>> {
        let n = self.n_states();
        let mut parent: Vec<u32> = (0..n as u32).collect();
        fn find(parent: &mut [u32], mut i: u32) -> u32 {
            while parent[i as usize] != i {
                parent[i as usize] = parent[parent[i as usize] as usize];
                i = parent[i as usize];
            }
            i
        }
        for i in 0..n {
            let (a, b) = (self.row_ptr[i] as usize, self.row_ptr[i + 1] as usize);
            for &c in &self.cols[a..b] {
                let (ri, rj) = (find(&mut parent, i as u32), find(&mut parent, c));
                if ri != rj {
                    let (lo, hi) = if ri < rj { (ri, rj) } else { (rj, ri) };
                    parent[hi as usize] = lo;
                }
            }
        }
        let mut groups: std::collections::HashMap<u32, Vec<u32>> = std::collections::HashMap::new();
        for i in 0..n as u32 {
            groups.entry(find(&mut parent, i)).or_default().push(i);
        }
        let mut comps: Vec<Vec<u32>> = groups.into_values().collect();
        comps.sort_by_key(|c| (std::cmp::Reverse(c.len()), c[0]));
        comps
    }

    /// Generator restricted to a closed subset of states (e.g. one ergodic
    /// component), with stationary weights renormalized on the subset.
    pub fn restrict_to(&self, member_indices: &[u32]) -> GeneratorMatrix {
        let masks: Vec<u64> = {
            let mut m: Vec<u64> = member_indices
                .iter()
                .map(|&i| self.states.mask(i as usize))
                .collect();
            m.sort_unstable();
            m
        };
        let states = StateList::Subset(masks);
        let n = states.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0u64);
        let mut cols = Vec::new();
        let mut rates = Vec::new();
        let mut exit = Vec::with_capacity(n);
        for i in 0..n {
            let old = self
                .states
                .position(states.mask(i))
                .expect("member of the parent space");
            let mut total = 0.0;
            for (j, r) in self.row(old) {
                let new_j = states
                    .position(self.states.mask(j))
                    .expect("component closed under legal flips");
                cols.push(new_j as u32);
                rates.push(r);
                total += r;
            }
            exit.push(total);
            row_ptr.push(cols.len() as u64);
        }
        let mut mu: Vec<f64> = (0..n)
            .map(|i| {
                let old = self.states.position(states.mask(i)).unwrap();
                self.mu[old]
            })
            .collect();
        let z: f64 = mu.iter().sum();
        for w in &mut mu {
            *w /= z;
        }
        GeneratorMatrix {
            n_sites: self.n_sites,
            q: self.q,
            states,
            row_ptr,
            cols,
            rates,
            exit,
            mu,
        }
    }
}
