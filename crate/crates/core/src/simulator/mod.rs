//! Discrete one-second simulation of an isolated intersection.
//!
//! Vehicles arrive on every link as independent Poisson streams per class;
//! the link holding right of way discharges at its saturation flows. A
//! [`Controller`] picks a plan at every cycle boundary from a possibly stale
//! and noisy view of the queues.

pub mod arrivals;
pub mod compare;
pub mod controller;
pub mod emergency;
pub mod engine;
pub mod scenario;

pub use arrivals::{ArrivalModel, ArrivalStream};
pub use compare::{compare_controllers, ComparisonReport, ControllerSummary, SeedResult};
pub use controller::{Adaptive, Controller, ControllerKind, ControllerSpec, FixedTime};
pub use emergency::{apply_emergency_reorder, EmergencyEvent, EmergencyOutcome};
pub use engine::{
    simulate, Blackout, SecondRecord, SignalState, SimMetrics, SimOptions, SimRun, SimTrace,
};
pub use scenario::{LoadedScenario, Scenario};
