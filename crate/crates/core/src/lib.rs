//! Simulation and numerical analytics for N-server fork-join queues with
//! nearly deterministic Bernoulli arrivals and services in heavy traffic.
//!
//! The crate is organised by concern:
//!
//! * [`model`]: Bernoulli slot model, failure schedules, the slot-by-slot and
//!   event-driven Lindley simulators, and the time-reversal duality check.
//! * [`initcond`]: initial queue-length families and their tail exponents.
//! * [`fluid`]: closed-form and numerically solved fluid limits.
//! * [`extremal`]: maxima of sums of differently scaled i.i.d. sequences.
//! * [`bounds`]: Chernoff exponents, tail bounds and the Gumbel limit of the
//!   dominating exponentials.
//! * [`validate`]: finite-N identities, Berry-Esseen rates and moment limits.
//!
//! The analytic modules are generic over [`Real`] (`f32`/`f64`); the drift
//! decomposition in [`bounds`] also runs on exact rationals. Concrete aliases
//! for the common instantiations live at the crate root.

pub mod bounds;
pub mod dist;
pub mod error;
pub mod extremal;
pub mod fluid;
pub mod initcond;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod search;
pub mod special;
pub mod stats;
pub mod validate;

pub use error::{Error, Result};
pub use scalar::Real;

/// Fluid curve evaluated in double precision.
pub type FluidCurveF64 = fluid::FluidCurve<f64>;
/// Fluid curve evaluated in single precision.
pub type FluidCurveF32 = fluid::FluidCurve<f32>;
/// Two-point increment law used by the Chernoff root solvers.
pub type TwoPointLawF64 = bounds::TwoPointLaw<f64>;
/// Drift decomposition over floating point.
pub type DriftSplitF64 = bounds::DriftSplit<f64>;
/// Drift decomposition over exact rationals.
pub type DriftSplitExact = bounds::DriftSplit<num_rational::BigRational>;
