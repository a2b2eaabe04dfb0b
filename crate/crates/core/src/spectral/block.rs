//! Two-block auxiliary chain: block 1 is resampled from its equilibrium
//! product measure only while a gate predicate holds on block 2, and block 2
//! is resampled unconditionally. The spectral gap of this chain has the
//! closed form 1 - sqrt(1 - mu(c1)), which `block_gap_verify` checks against
//! dense diagonalization.

use faer::{Mat, Side};

use super::SpectralError;

/// Gate event read off the freely-resampled block (bit = 1 means occupied).
#[derive(Debug, Clone, PartialEq)]
pub enum BlockPredicate {
    /// At least one site of the gating block is empty.
    NotAllOccupied,
    /// Every site of the gating block is empty.
    AllEmpty,
    /// The lowest-indexed site of the gating block is empty.
    FirstSiteEmpty,
    /// Explicit set of gating-block configurations.
    MaskSet(Vec<u64>),
}

impl BlockPredicate {
    fn holds(&self, m2: u64, n2: u32) -> bool {
        match self {
            BlockPredicate::NotAllOccupied => m2 != (1u64 << n2) - 1,
            BlockPredicate::AllEmpty => m2 == 0,
            BlockPredicate::FirstSiteEmpty => m2 & 1 == 0,
            BlockPredicate::MaskSet(set) => set.contains(&m2),
        }
    }
}

/// Sizes, density, and gate of the two-block chain.
#[derive(Debug, Clone)]
pub struct BlockChainSpec {
    /// Spins in the gated block (resampled only while the gate is open).
    pub n1: u32,
    /// Spins in the gating block (resampled unconditionally; the gate reads it).
    pub n2: u32,
    /// Equilibrium probability that a single spin is empty.
    pub q: f64,
    pub predicate: BlockPredicate,
}

/// Outcome of checking the closed-form block gap against diagonalization.
#[derive(Debug, Clone)]
pub struct BlockGapCheck {
    /// Equilibrium probability of the gate event under the gating block.
    pub mu_c1: f64,
    /// Closed form 1 - sqrt(1 - mu_c1).
    pub formula: f64,
    /// Second-smallest eigenvalue of the negated symmetrized generator.
    pub diagonalized: f64,
    pub discrepancy: f64,
    pub states: usize,
}

fn block_weights(n: u32, q: f64) -> Vec<f64> {
    let p = 1.0 - q;
    (0u64..1 << n)
        .map(|m| {
            let ones = m.count_ones() as i32;
            p.powi(ones) * q.powi(n as i32 - ones)
        })
        .collect()
}

/// Build the two-block generator explicitly, diagonalize its symmetrization,
/// and compare the gap with the closed form.
pub fn block_gap_verify(spec: &BlockChainSpec) -> Result<BlockGapCheck, SpectralError> {
    if spec.n1 == 0 || spec.n2 == 0 {
        return Err(SpectralError::InvalidBlockSpec(
            "each block needs at least one spin",
        ));
    }
    if spec.n1 + spec.n2 > 14 {
        return Err(SpectralError::DenseTooLarge(
            1usize << (spec.n1 + spec.n2).min(63),
        ));
    }
    if !(spec.q > 0.0 && spec.q < 1.0) {
        return Err(SpectralError::DegenerateDensity(spec.q));
    }
    if let BlockPredicate::MaskSet(set) = &spec.predicate {
        if set.iter().any(|&m| m >> spec.n2 != 0) {
            return Err(SpectralError::InvalidBlockSpec(
                "gate mask wider than the gating block",
            ));
        }
    }

    let (n1, n2) = (spec.n1, spec.n2);
    let mu1 = block_weights(n1, spec.q);
    let mu2 = block_weights(n2, spec.q);
    let mu_c1: f64 = (0u64..1 << n2)
        .filter(|&m2| spec.predicate.holds(m2, n2))
        .map(|m2| mu2[m2 as usize])
        .sum();
    if mu_c1 == 0.0 {
        return Err(SpectralError::NonErgodicBlock);
    }

    let n = 1usize << (n1 + n2);
    let idx = |m1: u64, m2: u64| ((m2 << n1) | m1) as usize;
    let mut m = Mat::<f64>::zeros(n, n);
    for m2 in 0u64..1 << n2 {
        let gate = spec.predicate.holds(m2, n2);
        for m1 in 0u64..1 << n1 {
            let s = idx(m1, m2);
            let mut exit = 1.0 - mu2[m2 as usize];
            if gate {
                exit += 1.0 - mu1[m1 as usize];
                for t1 in 0u64..1 << n1 {
                    if t1 != m1 {
                        // rate mu1(t1), reverse rate mu1(m1)
                        m[(s, idx(t1, m2))] = -(mu1[m1 as usize] * mu1[t1 as usize]).sqrt();
                    }
                }
            }
            for t2 in 0u64..1 << n2 {
                if t2 != m2 {
                    m[(s, idx(m1, t2))] = -(mu2[m2 as usize] * mu2[t2 as usize]).sqrt();
                }
            }
            m[(s, s)] = exit;
        }
    }

    let vals = m
        .self_adjoint_eigenvalues(Side::Lower)
        .expect("symmetric eigenvalue computation");
    let diagonalized = vals[1];
    let formula = 1.0 - (1.0 - mu_c1).sqrt();
    Ok(BlockGapCheck {
        mu_c1,
        formula,
        diagonalized,
        discrepancy: (formula - diagonalized).abs(),
        states: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(n1: u32, n2: u32, q: f64, predicate: BlockPredicate) -> BlockGapCheck {
        block_gap_verify(&BlockChainSpec { n1, n2, q, predicate }).unwrap()
    }

    #[test]
    fn gate_measure_grid_matches_formula() {
        // (predicate on 2 spins at q = 1/2) -> mu in {1/4, 1/2, 3/4}; 4 spins -> 15/16
        let cases = [
            (2, BlockPredicate::AllEmpty, 0.25),
            (2, BlockPredicate::FirstSiteEmpty, 0.5),
            (2, BlockPredicate::NotAllOccupied, 0.75),
            (4, BlockPredicate::NotAllOccupied, 15.0 / 16.0),
        ];
        for (n2, pred, mu) in cases {
            let out = check(1, n2, 0.5, pred);
            assert!((out.mu_c1 - mu).abs() < 1e-15);
            assert!(
                out.discrepancy <= 1e-8,
                "mu={mu}: formula {} vs diagonalized {}",
                out.formula,
                out.diagonalized
            );
        }
    }

    #[test]
    fn three_quarters_gate_gives_half() {
        let out = check(1, 2, 0.5, BlockPredicate::NotAllOccupied);
        assert!((out.formula - 0.5).abs() < 1e-15);
        assert!((out.diagonalized - 0.5).abs() < 1e-9);
    }

    #[test]
    fn gap_independent_of_gated_block_size() {
        let a = check(1, 2, 0.3, BlockPredicate::AllEmpty);
        let b = check(3, 2, 0.3, BlockPredicate::AllEmpty);
        assert!((a.diagonalized - b.diagonalized).abs() < 1e-9);
    }

    #[test]
    fn full_gate_gives_unit_gap() {
        let out = check(2, 2, 0.4, BlockPredicate::MaskSet((0..4).collect()));
        assert!((out.mu_c1 - 1.0).abs() < 1e-15);
        assert!((out.formula - 1.0).abs() < 1e-15);
        assert!((out.diagonalized - 1.0).abs() < 1e-9);
    }

    #[test]
    fn closed_gate_is_non_ergodic() {
        let err =
            block_gap_verify(&BlockChainSpec {
                n1: 1,
                n2: 2,
                q: 0.5,
                predicate: BlockPredicate::MaskSet(vec![]),
            })
            .unwrap_err();
        assert!(matches!(err, SpectralError::NonErgodicBlock));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(block_gap_verify(&BlockChainSpec {
            n1: 0,
            n2: 2,
            q: 0.5,
            predicate: BlockPredicate::AllEmpty,
        })
        .is_err());
        assert!(block_gap_verify(&BlockChainSpec {
            n1: 1,
            n2: 2,
            q: 0.5,
            predicate: BlockPredicate::MaskSet(vec![4]),
        })
        .is_err());
        assert!(block_gap_verify(&BlockChainSpec {
            n1: 8,
            n2: 8,
            q: 0.5,
            predicate: BlockPredicate::AllEmpty,
        })
        .is_err());
    }
}
