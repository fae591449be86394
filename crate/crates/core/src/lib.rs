//! Adaptive traffic-signal scheduling.
//!
//! * [`model`]: links, intersection config, queues, plans, detections.
//! * [`objectives`]: the discharge model and the residual-congestion and
//!   red-time objectives.
//! * [`nsga2`]: the constrained multi-objective optimizer and operating-point
//!   selection.
//! * [`pipeline`]: camera workers, latest-only frame slots, detector adapters,
//!   aggregation and the per-cycle latency ledger.
//! * [`simulator`]: a one-second queue simulator comparing adaptive and
//!   fixed-time control.

pub mod error;
pub mod io;
pub mod model;
pub mod nsga2;
pub mod objectives;
pub mod pipeline;
pub mod seed;
pub mod simulator;

pub use error::{Error, Result};
pub use model::{
    load_intersection_config, plan_violations, validate_plan, DetectionRecord,
    IntersectionConfig, LinkId, ObjectiveVector, Phase, PlanViolation, QueueState,
    SaturationFlow, SignalPlan,
};
pub use nsga2::{OptimizerParams, ParetoFront, SelectionPolicy};
pub use objectives::{evaluate, ObjectiveOptions};
