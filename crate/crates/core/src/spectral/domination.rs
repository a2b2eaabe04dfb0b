use super::SpectralError;
use crate::lattice::{Coord, ModelSpec};

/// Checks whether every configuration that satisfies `a`'s constraint also
/// satisfies `b`'s, by exhausting all occupation patterns on the union of the
/// two constraint supports. A `true` answer orders the spectral gaps:
/// matched finite volumes then satisfy gap(a) <= gap(b).
///
/// `window` is the side of the box the caller intends the comparison for; it
/// must cover both constraint ranges (side >= 2*max_range + 1). Spins outside
/// the union of the class offsets cannot affect either constraint, so the
/// check itself only enumerates the union.
pub fn domination_check(
    a: &ModelSpec,
    b: &ModelSpec,
    window: usize,
) -> Result<bool, SpectralError> {
    if a.dim() != b.dim() {
        return Err(SpectralError::MixedDimensions(a.dim(), b.dim()));
    }
    let needed = 2 * a.range().max(b.range()) as usize + 1;
    if window < needed {
        return Err(SpectralError::WindowTooSmall {
            given: window,
            needed,
        });
    }

    let mut support: Vec<Coord> = a
        .classes()
        .iter()
        .chain(b.classes().iter())
        .flatten()
        .copied()
        .collect();
    support.sort_unstable();
    support.dedup();
    if support.len() > 24 {
        return Err(SpectralError::TooManyStates {
            sites: support.len(),
            states: 1u128 << support.len(),
        });
    }

    let to_masks = |m: &ModelSpec| -> Vec<u64> {
        m.classes()
            .iter()
            .map(|class| {
                class
                    .iter()
                    .map(|o| 1u64 << support.binary_search(o).expect("offset in union"))
                    .fold(0u64, |acc, b| acc | b)
            })
            .collect()
    };
    let masks_a = to_masks(a);
    let masks_b = to_masks(b);

    // bit set = occupied; a class is met when all its offsets are empty
    for occ in 0u64..1 << support.len() {
        let ca = masks_a.iter().any(|&m| occ & m == 0);
        let cb = masks_b.iter().any(|&m| occ & m == 0);
        if ca && !cb {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn east_below_fa1f() {
        let east = ModelSpec::east();
        let fa = ModelSpec::fa(1, 1).unwrap();
        assert!(domination_check(&east, &fa, 3).unwrap());
        assert!(!domination_check(&fa, &east, 3).unwrap());
    }

    #[test]
    fn fa2f_below_fa1f_in_two_dimensions() {
        let fa2 = ModelSpec::fa(2, 2).unwrap();
        let fa1 = ModelSpec::fa(2, 1).unwrap();
        assert!(domination_check(&fa2, &fa1, 3).unwrap());
        assert!(!domination_check(&fa1, &fa2, 3).unwrap());
    }

    #[test]
    fn ne_below_mb() {
        // the north+east requirement implies the north-east corner rule
        let ne = ModelSpec::ne();
        let mb = ModelSpec::mb(2).unwrap();
        assert!(domination_check(&ne, &mb, 3).unwrap());
    }

    #[test]
    fn every_model_below_unconstrained_and_self() {
        let free = ModelSpec::unconstrained(2).unwrap();
        for m in [ModelSpec::ne(), ModelSpec::fa(2, 2).unwrap(), ModelSpec::mb(2).unwrap()] {
            assert!(domination_check(&m, &free, 3).unwrap());
            assert!(domination_check(&m, &m, 3).unwrap());
        }
    }

    #[test]
    fn guards_fire() {
        let east = ModelSpec::east();
        let ne = ModelSpec::ne();
        assert!(matches!(
            domination_check(&east, &ne, 3),
            Err(SpectralError::MixedDimensions(1, 2))
        ));
        assert!(matches!(
            domination_check(&east, &east, 2),
            Err(SpectralError::WindowTooSmall { given: 2, needed: 3 })
        ));
    }
}
