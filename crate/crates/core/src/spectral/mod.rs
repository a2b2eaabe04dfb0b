//! Exact finite-volume generator construction and spectral analysis:
//! stationary weights, ergodic decomposition, gap computation (dense and
//! iterative), variational ratios, two-block chain verification, and
//! published asymptotic bound forms.

mod block;
mod bounds;
mod dense;
mod domination;
mod generator;
mod iterative;
mod variational;

pub use block::{block_gap_verify, BlockChainSpec, BlockGapCheck, BlockPredicate};
pub use bounds::{bound_evaluate, BoundForm, BoundValues};
pub use dense::{eigenpairs_neg_sym, eigenvalues_neg_sym, gap_eigenfunction};
pub use domination::domination_check;
pub use generator::{build_generator, GeneratorMatrix, StateList};
pub use variational::{dirichlet_form, variance, variational_ratio};

use thiserror::Error;

use crate::lattice::LatticeError;

/// Hard ceiling on enumerated states.
pub const MAX_STATES: usize = 1 << 26;
/// Auto mode switches from the dense eigensolver to the iterative one here.
pub const DENSE_LIMIT: usize = 1 << 14;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("{sites} sites need {states} states; cap is {MAX_STATES}")]
    TooManyStates { sites: usize, states: u128 },
    #[error("dense eigensolver limited to {DENSE_LIMIT} states, got {0}")]
    DenseTooLarge(usize),
    #[error("density q={0} must lie strictly inside (0,1) for a reversible chain")]
    DegenerateDensity(f64),
    #[error("restricted mode needs a constrained rule (the all-occupied state is not isolated)")]
    RestrictedNotClosed,
    #[error("test function is constant: zero variance")]
    ConstantFunction,
    #[error("block constraint has zero stationary weight: chain not ergodic")]
    NonErgodicBlock,
    #[error("invalid block chain: {0}")]
    InvalidBlockSpec(&'static str),
    #[error("bad bound constant: {0}")]
    InvalidConstant(&'static str),
    #[error("eigensolver did not reach tolerance: residual {residual:.3e} after {iters} iterations")]
    NoConvergence { residual: f64, iters: usize },
    #[error("models must share a dimension: {0} vs {1}")]
    MixedDimensions(usize, usize),
    #[error("window of side {given} too small: needs at least {needed}")]
    WindowTooSmall { given: usize, needed: usize },
}

/// How the gap eigenvalue was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapMethod {
    Dense,
    Iterative,
}

/// Spectral gap of the chain: smallest nonzero eigenvalue of the negated
/// generator, taken on the largest ergodic component when there are several.
#[derive(Debug, Clone)]
pub struct GapResult {
    pub gap: f64,
    /// Multiplicity of eigenvalue 0 = number of ergodic components.
    pub zero_multiplicity: usize,
    pub ergodic: bool,
    /// Achieved eigenpair residual on the component actually solved.
    pub residual: f64,
    /// States in the full enumerated space.
    pub states: usize,
    /// States in the component the gap was computed on.
    pub component_states: usize,
    pub method: GapMethod,
}

/// Computes the spectral gap of `gen`.
///
/// The multiplicity of eigenvalue 0 is taken from the legal-move graph's
/// component count, not from numerical rank. With several components the gap
/// of the largest one is reported and `ergodic` is false. `mode = None`
/// selects dense below `DENSE_LIMIT` states and iterative above.
pub fn exact_gap(
    gen: &GeneratorMatrix,
    mode: Option<GapMethod>,
    tol: f64,
) -> Result<GapResult, SpectralError> {
    let components = gen.ergodic_components();
    let multiplicity = components.len();
    let ergodic = multiplicity == 1;
    let restricted;
    let work: &GeneratorMatrix = if ergodic {
        gen
    } else {
        restricted = gen.restrict_to(&components[0]);
        &restricted
    };
    let n = work.n_states();
    if n == 1 {
        // a lone state has no nonzero spectrum
        return Ok(GapResult {
            gap: 0.0,
            zero_multiplicity: multiplicity,
            ergodic,
            residual: 0.0,
            states: gen.n_states(),
            component_states: 1,
            method: mode.unwrap_or(GapMethod::Dense),
        });
    }
    let method = mode.unwrap_or(if n < DENSE_LIMIT {
        GapMethod::Dense
    } else {
        GapMethod::Iterative
    });
    let (gap, residual) = match method {
        GapMethod::Dense => dense::gap_dense(work)?,
        GapMethod::Iterative => iterative::gap_iterative(work, tol, 600)?,
    };
    if residual > tol {
        return Err(SpectralError::NoConvergence {
            residual,
            iters: 0,
        });
    }
    Ok(GapResult {
        gap,
        zero_multiplicity: multiplicity,
        ergodic,
        residual,
        states: gen.n_states(),
        component_states: n,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{BoundaryCondition, DensityParams, HaloFill, ModelSpec, Region};

    fn gap_of(
        model: &ModelSpec,
        sides: &[usize],
        fill: HaloFill,
        q: f64,
        mode: Option<GapMethod>,
    ) -> GapResult {
        let region = Region::new(sides.len(), sides).unwrap();
        let gen = build_generator(
            model,
            &region,
            &BoundaryCondition::FrozenHalo(fill),
            DensityParams::new(q).unwrap(),
        )
        .unwrap();
        exact_gap(&gen, mode, 1e-10).unwrap()
    }

    #[test]
    fn east_two_sites_matches_closed_form() {
        for q in [0.2, 0.3, 0.5] {
            let res = gap_of(&ModelSpec::east(), &[2], HaloFill::Empty, q, None);
            assert!(res.ergodic);
            assert_eq!(res.zero_multiplicity, 1);
            assert_eq!(res.method, GapMethod::Dense);
            let formula = 1.0 - (1.0 - q).sqrt();
            assert!(
                (res.gap - formula).abs() < 1e-12,
                "q={q}: {} vs {}",
                res.gap,
                formula
            );
        }
    }

    #[test]
    fn east_three_sites_frozen_value() {
        let res = gap_of(&ModelSpec::east(), &[3], HaloFill::Empty, 0.3, None);
        assert!((res.gap - 0.053090174537571).abs() < 1e-12);
    }

    #[test]
    fn blocked_state_leaves_component_gap() {
        let res = gap_of(&ModelSpec::fa(1, 1).unwrap(), &[2], HaloFill::Occupied, 0.3, None);
        assert!(!res.ergodic);
        assert_eq!(res.zero_multiplicity, 2);
        assert_eq!(res.states, 4);
        assert_eq!(res.component_states, 3);
        // three-state component relaxes at exactly the empty-spin rate
        assert!((res.gap - 0.3).abs() < 1e-12);
    }

    #[test]
    fn ne_boxes_frozen_values() {
        let r2 = gap_of(&ModelSpec::ne(), &[2, 2], HaloFill::Empty, 0.1, None);
        assert!((r2.gap / 8.733409906516933e-4 - 1.0).abs() < 1e-9);
        let r3 = gap_of(&ModelSpec::ne(), &[3, 3], HaloFill::Empty, 0.1, None);
        assert!((r3.gap / 1.715266805636456e-5 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unconstrained_gap_is_one() {
        let res = gap_of(&ModelSpec::unconstrained(1).unwrap(), &[3], HaloFill::Occupied, 0.37, None);
        assert!((res.gap - 1.0).abs() < 1e-10);
    }

    #[test]
    fn iterative_matches_dense_on_east_chain() {
        let dense = gap_of(
            &ModelSpec::east(),
            &[10],
            HaloFill::Empty,
            0.3,
            Some(GapMethod::Dense),
        );
        let iter = gap_of(
            &ModelSpec::east(),
            &[10],
            HaloFill::Empty,
            0.3,
            Some(GapMethod::Iterative),
        );
        assert_eq!(iter.method, GapMethod::Iterative);
        assert!(
            (dense.gap - iter.gap).abs() < 1e-8,
            "dense {} vs iterative {}",
            dense.gap,
            iter.gap
        );
    }

    // toy cyclic-Jacobi eigensolver: an in-repo check of the dense path that
    // shares no code with the production solver
    fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _ in 0..200 {
            let mut off = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    off += a[i][j] * a[i][j];
                }
            }
            if off.sqrt() < 1e-15 {
                break;
            }
            for i0 in 0..n {
                for j0 in i0 + 1..n {
                    if a[i0][j0] == 0.0 {
                        continue;
                    }
                    let theta = (a[j0][j0] - a[i0][i0]) / (2.0 * a[i0][j0]);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + (theta * theta + 1.0).sqrt())
                    } else {
                        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let aki = a[k][i0];
                        let akj = a[k][j0];
                        a[k][i0] = c * aki - s * akj;
                        a[k][j0] = s * aki + c * akj;
                    }
                    for k in 0..n {
                        let aik = a[i0][k];
                        let ajk = a[j0][k];
                        a[i0][k] = c * aik - s * ajk;
                        a[j0][k] = s * aik + c * ajk;
                    }
                }
            }
        }
        let mut vals: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
        vals
    }

    #[test]
    fn jacobi_cross_checks_dense_eigenvalues() {
        let q = 0.3;
        let region = Region::new(1, &[3]).unwrap();
        let gen = build_generator(
            &ModelSpec::east(),
            &region,
            &BoundaryCondition::FrozenHalo(HaloFill::Empty),
            DensityParams::new(q).unwrap(),
        )
        .unwrap();
        let n = gen.n_states();
        let s = (q * (1.0 - q)).sqrt();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = gen.exit_rate(i);
            for (j, _) in gen.row(i) {
                a[i][j] = -s;
            }
        }
        let reference = jacobi_eigenvalues(a);
        let vals = eigenvalues_neg_sym(&gen).unwrap();
        for (u, v) in reference.iter().zip(&vals) {
            assert!((u - v).abs() < 1e-12, "{u} vs {v}");
        }
    }
}
