//! Kinetically constrained spin models on finite rectangular lattices:
//! constraint evaluation, bootstrap emptying, exact generator spectra,
//! event-driven simulation, and oriented-percolation analysis.

pub mod bootstrap;
pub mod kmc;
pub mod lattice;
pub mod perc;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use lattice::{
    BoundaryCondition, ConstraintTable, DensityParams, LatticeError, ModelSpec, Region,
    SpinConfig,
};
pub use kmc::{kmc_run, persistence_curve, TimeGrid};
pub use spectral::{build_generator, exact_gap, GapMethod, GapResult, GeneratorMatrix};
