use super::{shifted, BoundaryCondition, LatticeError, ModelSpec, Region, SpinConfig};

/// Facilitation rule compiled against one region and boundary condition.
///
/// Each site's offset classes are resolved once: offsets landing inside the
/// region become empty-site requirements, offsets landing on frozen-empty
/// exterior sites become vacuous, and offsets landing on occupied exterior
/// sites kill their whole class. Evaluation is then a scan over surviving
/// requirement lists, with no coordinate arithmetic per call.
#[derive(Clone, Debug)]
pub struct ConstraintTable {
    region: Region,
    restricted: bool,
    class_start: Vec<u32>, // len n_sites + 1
    req_start: Vec<u32>,   // len class_start[n] + 1
    reqs: Vec<u32>,        // site indices that must be empty
}

impl ConstraintTable {
    pub fn new(
        model: &ModelSpec,
        region: &Region,
        bc: &BoundaryCondition,
    ) -> Result<Self, LatticeError> {
        if model.dim() != region.dim() {
            return Err(LatticeError::DimensionMismatch {
                model: model.dim(),
                region: region.dim(),
            });
        }
        let n = region.n_sites();
        let mut class_start = Vec::with_capacity(n + 1);
        class_start.push(0u32);
        let mut req_start = vec![0u32];
        let mut reqs: Vec<u32> = Vec::new();
        let minimal_site = match bc {
            BoundaryCondition::MinimalEmpty(s) => Some(*s),
            _ => None,
        };
        let mut minimal_used = minimal_site.is_none();
        for i in 0..n {
            let x = region.coord(i);
            'class: for class in model.classes() {
                let mark = reqs.len();
                for off in class {
                    let y = shifted(&x, off);
                    if let Some(j) = region.index(&y) {
                        reqs.push(j as u32);
                    } else if bc.outside_is_empty(&y) {
                        minimal_used = true;
                    } else {
                        reqs.truncate(mark);
                        continue 'class;
                    }
                }
                req_start.push(reqs.len() as u32);
            }
            class_start.push(req_start.len() as u32 - 1);
        }
        if !minimal_used {
            return Err(LatticeError::BoundarySiteUnreachable(minimal_site.unwrap()));
        }
        Ok(ConstraintTable {
            region: region.clone(),
            restricted: matches!(bc, BoundaryCondition::Restricted),
            class_start,
            req_start,
            reqs,
        })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn n_sites(&self) -> usize {
        self.region.n_sites()
    }

    /// True when built with the restricted-component boundary mode.
    pub fn is_restricted(&self) -> bool {
        self.restricted
    }

    /// True iff some surviving class at `site` is entirely empty in `cfg`.
    #[inline]
    pub fn satisfied(&self, cfg: &SpinConfig, site: usize) -> bool {
        let (c0, c1) = (
            self.class_start[site] as usize,
            self.class_start[site + 1] as usize,
        );
        for c in c0..c1 {
            let (r0, r1) = (self.req_start[c] as usize, self.req_start[c + 1] as usize);
            if self.reqs[r0..r1]
                .iter()
                .all(|&j| !cfg.occupied(j as usize))
            {
                return true;
            }
        }
        false
    }

    /// Sites whose flip is currently permitted, ascending by index.
    pub fn legal_moves(&self, cfg: &SpinConfig) -> Vec<usize> {
        (0..self.n_sites())
            .filter(|&i| self.satisfied(cfg, i))
            .collect()
    }

    /// Sites whose constraint can never hold under this boundary condition
    /// (every class was killed by frozen-occupied exterior sites).
    pub fn permanently_blocked(&self, site: usize) -> bool {
        self.class_start[site] == self.class_start[site + 1]
    }

    /// Reverse adjacency: for each site, the sites whose constraint reads it.
    pub fn influencers(&self) -> Vec<Vec<u32>> {
        let n = self.n_sites();
        let mut map: Vec<Vec<u32>> = vec![Vec::new(); n];
        for x in 0..n {
            let (r0, r1) = (
                self.req_start[self.class_start[x] as usize] as usize,
                self.req_start[self.class_start[x + 1] as usize] as usize,
            );
            for &j in &self.reqs[r0..r1] {
                map[j as usize].push(x as u32);
            }
        }
        for v in &mut map {
            v.sort_unstable();
            v.dedup();
        }
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ModelSpec;

    fn table(model: &ModelSpec, sides: &[usize], bc: &BoundaryCondition) -> ConstraintTable {
        let region = Region::new(model.dim(), sides).unwrap();
        ConstraintTable::new(model, &region, bc).unwrap()
    }

    #[test]
    fn east_right_neighbor_rule() {
        let t = table(&ModelSpec::east(), &[2], &BoundaryCondition::occupied_halo());
        let cfg = SpinConfig::from_bits(&[true, false]);
        assert!(t.satisfied(&cfg, 0));
        assert!(!t.satisfied(&cfg, 1)); // right neighbor is the occupied halo
        assert!(t.legal_moves(&SpinConfig::filled(2)).is_empty());
        assert!(t.permanently_blocked(1));
    }

    #[test]
    fn fa2f_needs_two_empty_neighbors() {
        let t = table(
            &ModelSpec::fa(2, 2).unwrap(),
            &[3, 3],
            &BoundaryCondition::occupied_halo(),
        );
        let center = t.region().index(&[1, 1, 0, 0]).unwrap();
        let mut cfg = SpinConfig::filled(9);
        cfg.set(t.region().index(&[0, 1, 0, 0]).unwrap(), false);
        assert!(!t.satisfied(&cfg, center));
        cfg.set(t.region().index(&[1, 0, 0, 0]).unwrap(), false);
        assert!(t.satisfied(&cfg, center));
    }

    #[test]
    fn mb_requires_every_axis_served() {
        let t = table(
            &ModelSpec::mb(2).unwrap(),
            &[3, 3],
            &BoundaryCondition::occupied_halo(),
        );
        let r = t.region().clone();
        let center = r.index(&[1, 1, 0, 0]).unwrap();
        let mut cfg = SpinConfig::filled(9);
        cfg.set(r.index(&[0, 1, 0, 0]).unwrap(), false);
        cfg.set(r.index(&[2, 1, 0, 0]).unwrap(), false);
        assert!(!t.satisfied(&cfg, center)); // second axis unserved
        cfg.set(r.index(&[1, 2, 0, 0]).unwrap(), false);
        assert!(t.satisfied(&cfg, center));
    }

    #[test]
    fn ne_needs_north_and_east() {
        let t = table(&ModelSpec::ne(), &[3, 3], &BoundaryCondition::occupied_halo());
        let r = t.region().clone();
        let origin = r.index(&[0, 0, 0, 0]).unwrap();
        let mut cfg = SpinConfig::filled(9);
        cfg.set(r.index(&[1, 0, 0, 0]).unwrap(), false);
        assert!(!t.satisfied(&cfg, origin));
        cfg.set(r.index(&[0, 1, 0, 0]).unwrap(), false);
        assert!(t.satisfied(&cfg, origin));
    }

    #[test]
    fn legal_move_lists() {
        let t = table(
            &ModelSpec::fa(1, 1).unwrap(),
            &[3],
            &BoundaryCondition::occupied_halo(),
        );
        let cfg = SpinConfig::from_bits(&[true, false, true]);
        assert_eq!(t.legal_moves(&cfg), vec![0, 2]);
        assert_eq!(t.legal_moves(&SpinConfig::vacant(3)), vec![0, 1, 2]);
    }

    #[test]
    fn minimal_empty_boundary() {
        let region = Region::new(1, &[2]).unwrap();
        let bc = BoundaryCondition::minimal_empty_default(&region);
        let t = ConstraintTable::new(&ModelSpec::east(), &region, &bc).unwrap();
        // rightmost site reads the empty boundary site, so it is always free
        assert!(t.satisfied(&SpinConfig::filled(2), 1));
        assert!(!t.satisfied(&SpinConfig::filled(2), 0));
        // a boundary site no offset can reach is rejected
        let far = BoundaryCondition::MinimalEmpty([5, 0, 0, 0]);
        assert!(matches!(
            ConstraintTable::new(&ModelSpec::east(), &region, &far),
            Err(LatticeError::BoundarySiteUnreachable(_))
        ));
        // ... as is a site inside the region
        let inside = BoundaryCondition::MinimalEmpty([0, 0, 0, 0]);
        assert!(ConstraintTable::new(&ModelSpec::east(), &region, &inside).is_err());
    }

    #[test]
    fn restricted_mode_reads_exterior_occupied() {
        let t = table(&ModelSpec::ne(), &[2, 2], &BoundaryCondition::Restricted);
        assert!(t.is_restricted());
        // the max corner needs exterior sites on both axes: never satisfiable
        let corner = t.region().index(&[1, 1, 0, 0]).unwrap();
        assert!(t.permanently_blocked(corner));
        assert!(!t.satisfied(&SpinConfig::vacant(4), corner));
    }

    #[test]
    fn unconstrained_always_satisfied() {
        let t = table(
            &ModelSpec::unconstrained(1).unwrap(),
            &[4],
            &BoundaryCondition::occupied_halo(),
        );
        assert_eq!(t.legal_moves(&SpinConfig::filled(4)), vec![0, 1, 2, 3]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let region = Region::new(2, &[2, 2]).unwrap();
        assert!(matches!(
            ConstraintTable::new(&ModelSpec::east(), &region, &BoundaryCondition::occupied_halo()),
            Err(LatticeError::DimensionMismatch { .. })
        ));
    }
}
