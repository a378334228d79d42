//! Energy-aware proactive caching with multipath delivery.
//!
//! Contents are placed in router storage ahead of demand and every request
//! is delivered over one of the `k` shortest paths to a cached copy or to
//! the content server. Placement and delivery are chosen to minimise the
//! energy spent on caching plus the energy spent moving bits across hops.

pub mod baselines;
pub mod energy;
pub mod error;
pub mod exact;
pub mod fixtures;
pub mod gsac;
pub mod harness;
pub mod model;
pub mod scalar;
pub mod scenario;
pub mod topology;
pub mod units;

pub use error::{Error, Result};
pub use scalar::{Rational, Scalar};

/// Energy breakdown in exact rational joules.
pub type ExactEnergy = energy::EnergyBreakdown<Rational>;
/// Energy breakdown in floating-point joules.
pub type FloatEnergy = energy::EnergyBreakdown<f64>;
/// Energy coefficients in exact form, as stored in every instance.
pub type ExactParams = energy::EnergyParams<Rational>;
