//! Queue discharge model and the two minimized objectives.
//!
//! * `f1`: vehicles still queued on every link after each link has used its
//!   green time (residual congestion).
//! * `f2`: sum over links of the red time each link sees within one cycle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{IntersectionConfig, ObjectiveVector, QueueState, SignalPlan};

/// Switches for the objective model. The defaults reproduce the plain
/// residual-count and red-time sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveOptions {
    /// Count inter-green clearance as red time.
    pub red_includes_inter_green: bool,
    /// Weight each link's red time by its waiting vehicles before discharge.
    pub queue_weighted_red: bool,
}

impl Default for ObjectiveOptions {
    fn default() -> Self {
        Self {
            red_includes_inter_green: true,
            queue_weighted_red: false,
        }
    }
}

/// Per-link red seconds, indexed by link id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RedTimeVector(pub Vec<u64>);

impl RedTimeVector {
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

/// Drains each link's queue by `floor(saturation * green)` per class, clamped at zero.
///
/// Arrivals are not modelled here; the queue is the snapshot the optimizer sees.
pub fn discharge(
    queue: &QueueState,
    plan: &SignalPlan,
    cfg: &IntersectionConfig,
) -> Result<QueueState> {
    queue.check_dims(cfg.num_links)?;
    let mut out = queue.clone();
    for phase in &plan.phases {
        let i = phase.link.index();
        if i >= cfg.num_links {
            return Err(Error::DimensionMismatch {
                expected: cfg.num_links,
                found: i + 1,
            });
        }
        let green = phase.green_s as u64;
        out.motorized[i] = out.motorized[i].saturating_sub(cfg.sat_flow_motorized.capacity(green));
        out.non_motorized[i] =
            out.non_motorized[i].saturating_sub(cfg.sat_flow_non_motorized.capacity(green));
    }
    Ok(out)
}

/// Residual congestion: total motorized plus non-motorized vehicles.
pub fn f1(updated_queue: &QueueState) -> u64 {
    updated_queue.total_vehicles()
}

/// Red time per link: the cycle length minus that link's own service time.
pub fn red_times(plan: &SignalPlan) -> RedTimeVector {
    red_times_with(plan, ObjectiveOptions::default())
}

pub fn red_times_with(plan: &SignalPlan, opts: ObjectiveOptions) -> RedTimeVector {
    let reference = if opts.red_includes_inter_green {
        plan.cycle_length_s()
    } else {
        plan.phases.iter().map(|p| plan.service_s(p)).sum()
    };
    let mut red = vec![0; plan.greens_by_link().len()];
    for phase in &plan.phases {
        red[phase.link.index()] = reference - plan.service_s(phase);
    }
    RedTimeVector(red)
}

/// Total red time over all links.
pub fn f2(plan: &SignalPlan) -> u64 {
    red_times(plan).total()
}

/// `(f1(discharge(queue)), f2(plan))`.
pub fn evaluate(
    plan: &SignalPlan,
    queue: &QueueState,
    cfg: &IntersectionConfig,
) -> Result<ObjectiveVector> {
    evaluate_with(plan, queue, cfg, ObjectiveOptions::default())
}

pub fn evaluate_with(
    plan: &SignalPlan,
    queue: &QueueState,
    cfg: &IntersectionConfig,
    opts: ObjectiveOptions,
) -> Result<ObjectiveVector> {
    let residual = discharge(queue, plan, cfg)?;
    let red = red_times_with(plan, opts);
    let f2 = if opts.queue_weighted_red {
        red.0
            .iter()
            .enumerate()
            .map(|(i, r)| r * queue.total(i))
            .sum()
    } else {
        red.total()
    };
    Ok(ObjectiveVector::new(f1(&residual), f2))
}
