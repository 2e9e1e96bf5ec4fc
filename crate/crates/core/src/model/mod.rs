//! Bernoulli slot model of the fork-join queue.
//!
//! Slot `j` carries an arrival indicator `a_j ~ Bernoulli(p)` shared by all
//! servers and service indicators `s_{i,j} ~ Bernoulli(q)`, one per server.
//! Failures (zeros) are rare, so realisations are stored as sorted lists of
//! failure slots ([`FailureSchedule`]) and the queues only change at those
//! slots.

mod duality;
mod params;
mod scaled;
mod schedule;
mod sim;

pub use duality::{duality_check, DualityMode, DualityReport, EXACT_MAX_BITS, EXACT_MAX_SLOTS};
pub use params::{SystemParams, MAX_HORIZON};
pub use scaled::simulate_scaled;
pub use schedule::{arrival_failures, generate_schedule, service_failures, FailureSchedule, GeometricFailures};
pub use sim::{simulate_events, simulate_slots, SimulationResult, TrajectoryFrame};
