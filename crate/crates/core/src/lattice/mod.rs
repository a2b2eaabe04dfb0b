//! Finite rectangular lattice regions, bit-packed spin configurations,
//! facilitation rules, and boundary conditions.
//!
//! Everything here is an immutable value after construction; operations are
//! pure functions, so instances can be shared freely across worker threads.

mod boundary;
mod config;
mod constraint;
mod json;
mod model;
mod params;
mod region;

pub use boundary::{BoundaryCondition, HaloFill};
pub use config::SpinConfig;
pub use constraint::ConstraintTable;
pub use json::{BcJson, ModelJson};
pub use model::ModelSpec;
pub use params::DensityParams;
pub use region::{l1_norm, shifted, unit_offset, Coord, Region, MAX_DIM, MAX_SITES};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("dimension {0} outside 1..={MAX_DIM}")]
    BadDimension(usize),
    #[error("side lengths must be positive")]
    EmptySide,
    #[error("region has {0} sites; enumeration cap is {MAX_SITES}")]
    TooManySites(u128),
    #[error("site {0:?} outside region")]
    SiteOutsideRegion(Coord),
    #[error("an offset set contains the origin")]
    OriginInClass,
    #[error("offset {0:?} uses axes beyond dimension {1}")]
    OffAxisOffset(Coord, usize),
    #[error("facilitation parameter j={j} outside 1..={max}")]
    BadFacilitation { j: u32, max: u32 },
    #[error("model dimension {model} does not match region dimension {region}")]
    DimensionMismatch { model: usize, region: usize },
    #[error("boundary site {0:?} is not reachable by any constraint offset")]
    BoundarySiteUnreachable(Coord),
    #[error("density q={0} outside [0,1]")]
    BadDensity(f64),
    #[error("unknown model tag {0:?}")]
    UnknownModel(String),
    #[error("custom model requires explicit offset classes")]
    MissingClasses,
    #[error("coordinate {0:?} has wrong length for dimension {1}")]
    BadCoordLen(Vec<i64>, usize),
}
