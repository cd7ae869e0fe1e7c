//! Output photon-number statistics of a lossless beam splitter fed with
//! two Fock states.
//!
//! The [`exact`] engine evaluates output amplitudes without cancellation
//! loss at any photon number. [`asymptotic`] holds the closed-form and
//! large-N approximations, [`contour`] the integral family they are derived
//! from, and [`statistics`] the averages and correlations over an ensemble
//! of input imbalances. [`oracle`] exponentiates the two-mode generator
//! directly and serves as independent ground truth.

pub mod asymptotic;
pub mod cli;
pub mod contour;
pub mod error;
pub mod exact;
pub mod numerics;
pub mod oracle;
pub mod statistics;

pub use error::{Error, Result};
pub use exact::{
    distribution, exact_amplitude, DistributionSeries, Engine, FockInput, OutputPoint,
};
pub use numerics::{ComplexValue, SignedLogValue};
