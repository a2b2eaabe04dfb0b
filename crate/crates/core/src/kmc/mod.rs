//! Event-driven continuous-time simulation of the constrained refresh
//! dynamics: trajectory generation, persistence and autocorrelation
//! estimation, exponential-rate fitting, and a variational test-function
//! probe for the one-spin-facilitated model.

mod fit;
mod persistence;
mod probe;
mod sim;

pub use fit::{fit_exponential_rate, RateFit};
pub use persistence::{
    autocorrelation_rate, persistence_curve, AutocorrEstimate, PersistenceCurve,
};
pub use probe::{fa1f_bound_probe, xi_corner, TestFunctionProbe, TestProfile};
pub use sim::{kmc_run, TimeGrid, TrajectoryObservables};

use thiserror::Error;

use crate::lattice::LatticeError;
use crate::stats::FitError;

#[derive(Debug, Error)]
pub enum KmcError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("time horizon must be nonnegative, got {0}")]
    NegativeHorizon(f64),
    #[error("bad time grid: {0}")]
    BadGrid(&'static str),
    #[error("density q={0} gives a frozen observable")]
    DegenerateDensity(f64),
    #[error("tracked site {0} outside the region")]
    TrackedOutOfRange(usize),
    #[error("profile grid has {support_points} points inside the support; needs at least 2")]
    ProfileTooCoarse { support_points: usize },
    #[error("box side {given} too small for the probe length scale; needs at least {needed}")]
    BoxTooSmall { given: usize, needed: usize },
}
