//! Signal controllers driven by the simulator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{IntersectionConfig, QueueState, SignalPlan};
use crate::nsga2::{self, OptimizerParams, SelectionPolicy};
use crate::seed;

/// Chooses the plan for the next cycle from the observed queues.
pub trait Controller: Send {
    fn next_plan(&mut self, observed: &QueueState, cycle: u64) -> Result<SignalPlan>;
}

/// Same greens every cycle, links served in index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedTime {
    plan: SignalPlan,
}

impl FixedTime {
    pub fn new(greens: &[u32], cfg: &IntersectionConfig) -> Self {
        Self {
            plan: SignalPlan::in_link_order(greens, cfg.inter_green_s),
        }
    }
}

impl Controller for FixedTime {
    fn next_plan(&mut self, _observed: &QueueState, _cycle: u64) -> Result<SignalPlan> {
        Ok(self.plan.clone())
    }
}

/// Runs the optimizer on every observed queue and applies the selection policy.
#[derive(Debug, Clone)]
pub struct Adaptive {
    cfg: IntersectionConfig,
    params: OptimizerParams,
    policy: SelectionPolicy,
    base_seed: u64,
}

impl Adaptive {
    /// `run_seed` decorrelates optimizer randomness between simulation seeds.
    pub fn new(
        cfg: IntersectionConfig,
        params: OptimizerParams,
        policy: SelectionPolicy,
        run_seed: u64,
    ) -> Self {
        let base_seed = seed::derive(params.rng_seed, &[run_seed]);
        Self {
            cfg,
            params,
            policy,
            base_seed,
        }
    }
}

impl Controller for Adaptive {
    fn next_plan(&mut self, observed: &QueueState, cycle: u64) -> Result<SignalPlan> {
        let params = OptimizerParams {
            rng_seed: seed::derive(self.base_seed, &[cycle]),
            ..self.params.clone()
        };
        let front = nsga2::run(observed, &self.cfg, &params)?;
        nsga2::select_operating_point(&front, self.policy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControllerKind {
    FixedTime {
        greens: Vec<u32>,
    },
    Adaptive {
        #[serde(default)]
        optimizer: OptimizerParams,
        #[serde(default)]
        policy: SelectionPolicy,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ControllerKind,
}

impl ControllerSpec {
    pub fn fixed(name: &str, greens: Vec<u32>) -> Self {
        Self {
            name: name.into(),
            kind: ControllerKind::FixedTime { greens },
        }
    }

    pub fn adaptive(name: &str, optimizer: OptimizerParams, policy: SelectionPolicy) -> Self {
        Self {
            name: name.into(),
            kind: ControllerKind::Adaptive { optimizer, policy },
        }
    }

    pub fn validate(&self, cfg: &IntersectionConfig) -> Result<()> {
        match &self.kind {
            ControllerKind::FixedTime { greens } => {
                if greens.len() != cfg.num_links {
                    return Err(Error::Validation(format!(
                        "controller {}: {} greens for {} links",
                        self.name,
                        greens.len(),
                        cfg.num_links
                    )));
                }
                if let Some(g) = greens
                    .iter()
                    .find(|g| !(cfg.min_green_s..=cfg.max_green_s).contains(*g))
                {
                    return Err(Error::Validation(format!(
                        "controller {}: green {g} s outside [{}, {}]",
                        self.name, cfg.min_green_s, cfg.max_green_s
                    )));
                }
                Ok(())
            }
            ControllerKind::Adaptive { optimizer, .. } => optimizer.validate(),
        }
    }

    pub fn build(&self, cfg: &IntersectionConfig, run_seed: u64) -> Box<dyn Controller> {
        match &self.kind {
            ControllerKind::FixedTime { greens } => Box::new(FixedTime::new(greens, cfg)),
            ControllerKind::Adaptive { optimizer, policy } => Box::new(Adaptive::new(
                cfg.clone(),
                optimizer.clone(),
                *policy,
                run_seed,
            )),
        }
    }
}
