use std::collections::BTreeSet;

use super::{shifted, unit_offset, Coord, Region};

/// Frozen exterior filling for halo boundary conditions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HaloFill {
    Occupied,
    Empty,
    /// Listed exterior sites are empty; all others occupied.
    Custom(BTreeSet<Coord>),
}

/// How constraint offsets that leave the region are resolved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// Exterior frozen to a fixed configuration of width >= the model range.
    FrozenHalo(HaloFill),
    /// Exterior occupied except a single empty site.
    MinimalEmpty(Coord),
    /// Exterior reads occupied; the chain is meant to run on the states
    /// holding at least one empty site (the all-occupied state is isolated
    /// for every nontrivial rule, so dynamics restricted to the rest).
    Restricted,
}

impl BoundaryCondition {
    pub fn occupied_halo() -> Self {
        BoundaryCondition::FrozenHalo(HaloFill::Occupied)
    }

    pub fn empty_halo() -> Self {
        BoundaryCondition::FrozenHalo(HaloFill::Empty)
    }

    /// Default single-empty-site location: one step along the first axis from
    /// the region's maximum corner (the right end in d=1).
    pub fn minimal_empty_default(region: &Region) -> Self {
        BoundaryCondition::MinimalEmpty(shifted(&region.max_corner(), &unit_offset(0)))
    }

    /// Resolve an exterior site under this boundary condition.
    pub fn outside_is_empty(&self, site: &Coord) -> bool {
        match self {
            BoundaryCondition::FrozenHalo(HaloFill::Occupied) => false,
            BoundaryCondition::FrozenHalo(HaloFill::Empty) => true,
            BoundaryCondition::FrozenHalo(HaloFill::Custom(empty)) => empty.contains(site),
            BoundaryCondition::MinimalEmpty(s) => site == s,
            BoundaryCondition::Restricted => false,
        }
    }

    /// Short tag used in CSV output.
    pub fn label(&self) -> &'static str {
        match self {
            BoundaryCondition::FrozenHalo(HaloFill::Occupied) => "halo-occupied",
            BoundaryCondition::FrozenHalo(HaloFill::Empty) => "halo-empty",
            BoundaryCondition::FrozenHalo(HaloFill::Custom(_)) => "halo-custom",
            BoundaryCondition::MinimalEmpty(_) => "minimal-empty",
            BoundaryCondition::Restricted => "restricted",
        }
    }
}
