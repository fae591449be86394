//! Domain data model shared by the optimizer, the pipeline and the simulator.
//!
//! Every type here is a plain value: cheap to clone, `Send + Sync`, and
//! serialized with stable JSON field names.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of an approach road (link) feeding the intersection.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkId(pub usize);

impl LinkId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Queue discharge rate under green, in vehicles per second.
///
/// Stored in micro-vehicles per second so that the discharge capacity of a
/// green interval, `floor(rate * seconds)`, is computed in exact integer
/// arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SaturationFlow {
    micro_per_s: u64,
}

impl SaturationFlow {
    const SCALE: u64 = 1_000_000;

    pub fn from_micro(micro_per_s: u64) -> Self {
        Self { micro_per_s }
    }

    pub fn micro_per_s(self) -> u64 {
        self.micro_per_s
    }

    pub fn per_second(self) -> f64 {
        self.micro_per_s as f64 / Self::SCALE as f64
    }

    /// Vehicles that can be discharged in `seconds` of service: `floor(rate * seconds)`.
    pub fn capacity(self, seconds: u64) -> u64 {
        ((self.micro_per_s as u128 * seconds as u128) / Self::SCALE as u128) as u64
    }
}

impl TryFrom<f64> for SaturationFlow {
    type Error = String;

    fn try_from(rate: f64) -> std::result::Result<Self, Self::Error> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(format!("saturation flow must be finite and > 0, got {rate}"));
        }
        let micro = (rate * Self::SCALE as f64).round();
        if micro < 1.0 {
            return Err(format!("saturation flow {rate} is below 1e-6 veh/s"));
        }
        Ok(Self {
            micro_per_s: micro as u64,
        })
    }
}

impl From<SaturationFlow> for f64 {
    fn from(flow: SaturationFlow) -> f64 {
        flow.per_second()
    }
}

fn default_min_green() -> u32 {
    10
}
fn default_max_green() -> u32 {
    60
}
fn default_inter_green() -> u32 {
    3
}
fn default_sat_motorized() -> SaturationFlow {
    SaturationFlow::from_micro(500_000)
}
fn default_sat_non_motorized() -> SaturationFlow {
    SaturationFlow::from_micro(300_000)
}

/// Static description of one signalized intersection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntersectionConfig {
    pub num_links: usize,
    /// Display names, one per link. Filled with `Link 1..L` when omitted.
    #[serde(default)]
    pub link_names: Vec<String>,
    #[serde(default = "default_min_green")]
    pub min_green_s: u32,
    #[serde(default = "default_max_green")]
    pub max_green_s: u32,
    /// All-red clearance inserted after every phase.
    #[serde(default = "default_inter_green")]
    pub inter_green_s: u32,
    #[serde(default = "default_sat_motorized")]
    pub sat_flow_motorized: SaturationFlow,
    #[serde(default = "default_sat_non_motorized")]
    pub sat_flow_non_motorized: SaturationFlow,
}

impl IntersectionConfig {
    /// A config with `num_links` links and defaults everywhere else.
    pub fn with_links(num_links: usize) -> Self {
        Self {
            num_links,
            link_names: default_names(num_links),
            min_green_s: default_min_green(),
            max_green_s: default_max_green(),
            inter_green_s: default_inter_green(),
            sat_flow_motorized: default_sat_motorized(),
            sat_flow_non_motorized: default_sat_non_motorized(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::parse("intersection config", e))?;
        cfg.validated()
    }

    /// Fills defaults that depend on other fields and checks every invariant.
    pub fn validated(mut self) -> Result<Self> {
        if self.link_names.is_empty() {
            self.link_names = default_names(self.num_links);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_links < 2 {
            return Err(Error::Validation(format!(
                "num_links must be >= 2, got {}",
                self.num_links
            )));
        }
        if self.link_names.len() != self.num_links {
            return Err(Error::Validation(format!(
                "link_names has {} entries but num_links is {}",
                self.link_names.len(),
                self.num_links
            )));
        }
        if self.min_green_s < 1 {
            return Err(Error::Validation("min_green_s must be >= 1".into()));
        }
        if self.min_green_s > self.max_green_s {
            return Err(Error::Validation(format!(
                "min_green_s ({}) must not exceed max_green_s ({})",
                self.min_green_s, self.max_green_s
            )));
        }
        Ok(())
    }

    pub fn links(&self) -> impl Iterator<Item = LinkId> {
        (0..self.num_links).map(LinkId)
    }

    pub fn check_link(&self, link: LinkId) -> Result<()> {
        if link.0 >= self.num_links {
            return Err(Error::Validation(format!(
                "link {} out of range for {} links",
                link, self.num_links
            )));
        }
        Ok(())
    }
}

fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("Link {i}")).collect()
}

/// Reads and validates an intersection config JSON document.
pub fn load_intersection_config(path: impl AsRef<Path>) -> Result<IntersectionConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg: IntersectionConfig = serde_json::from_str(&text)
        .map_err(|e| Error::parse(path.display().to_string(), e))?;
    cfg.validated()
}

/// An intersection given inline or as a path to a JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntersectionSource {
    Path(PathBuf),
    Inline(IntersectionConfig),
}

impl IntersectionSource {
    /// Relative paths are resolved against `base_dir`.
    pub fn load(&self, base_dir: &Path) -> Result<IntersectionConfig> {
        match self {
            IntersectionSource::Path(p) => load_intersection_config(crate::io::resolve(base_dir, p)),
            IntersectionSource::Inline(cfg) => cfg.clone().validated(),
        }
    }
}

/// Waiting vehicles per link, split by class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueueState {
    pub motorized: Vec<u64>,
    pub non_motorized: Vec<u64>,
    /// Monotonic milliseconds at which the snapshot was taken.
    #[serde(default)]
    pub timestamp_ms: u64,
}

impl QueueState {
    pub fn zeros(num_links: usize) -> Self {
        Self {
            motorized: vec![0; num_links],
            non_motorized: vec![0; num_links],
            timestamp_ms: 0,
        }
    }

    pub fn new(motorized: Vec<u64>, non_motorized: Vec<u64>) -> Result<Self> {
        if motorized.len() != non_motorized.len() {
            return Err(Error::DimensionMismatch {
                expected: motorized.len(),
                found: non_motorized.len(),
            });
        }
        Ok(Self {
            motorized,
            non_motorized,
            timestamp_ms: 0,
        })
    }

    pub fn num_links(&self) -> usize {
        self.motorized.len()
    }

    pub fn total(&self, link: usize) -> u64 {
        self.motorized[link] + self.non_motorized[link]
    }

    pub fn total_vehicles(&self) -> u64 {
        self.motorized.iter().chain(&self.non_motorized).sum()
    }

    /// Fails unless both class vectors have exactly `num_links` entries.
    pub fn check_dims(&self, num_links: usize) -> Result<()> {
        for len in [self.motorized.len(), self.non_motorized.len()] {
            if len != num_links {
                return Err(Error::DimensionMismatch {
                    expected: num_links,
                    found: len,
                });
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let queue: Self = serde_json::from_str(text).map_err(|e| Error::parse("queue state", e))?;
        queue.check_dims(queue.motorized.len())?;
        Ok(queue)
    }
}

/// One green phase of a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Phase {
    pub link: LinkId,
    pub green_s: u32,
}

/// One full signal cycle: each link is served once, in `phases` order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignalPlan {
    pub phases: Vec<Phase>,
    pub inter_green_s: u32,
    /// Seconds added before and after every green for manual traffic guidance.
    #[serde(default)]
    pub guidance_pad_s: u32,
}

impl SignalPlan {
    /// Builds a plan serving links in index order with the given greens.
    pub fn in_link_order(greens: &[u32], inter_green_s: u32) -> Self {
        Self {
            phases: greens
                .iter()
                .enumerate()
                .map(|(i, &green_s)| Phase {
                    link: LinkId(i),
                    green_s,
                })
                .collect(),
            inter_green_s,
            guidance_pad_s: 0,
        }
    }

    pub fn with_guidance_pad(mut self, pad_s: u32) -> Self {
        self.guidance_pad_s = pad_s;
        self
    }

    pub fn num_links(&self) -> usize {
        self.phases.len()
    }

    /// Seconds during which a phase holds right of way: green plus both guidance pads.
    pub fn service_s(&self, phase: &Phase) -> u64 {
        phase.green_s as u64 + 2 * self.guidance_pad_s as u64
    }

    pub fn cycle_length_s(&self) -> u64 {
        self.phases
            .iter()
            .map(|p| self.service_s(p) + self.inter_green_s as u64)
            .sum()
    }

    pub fn phase_for(&self, link: LinkId) -> Option<&Phase> {
        self.phases.iter().find(|p| p.link == link)
    }

    /// Greens indexed by link id. Links not served get 0.
    pub fn greens_by_link(&self) -> Vec<u32> {
        let n = self
            .phases
            .iter()
            .map(|p| p.link.0 + 1)
            .max()
            .unwrap_or(0)
            .max(self.phases.len());
        let mut greens = vec![0; n];
        for p in &self.phases {
            greens[p.link.0] = p.green_s;
        }
        greens
    }
}

/// A single reason a [`SignalPlan`] is unacceptable for a config.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanViolation {
    LinkOutOfRange { link: LinkId },
    DuplicateLink { link: LinkId },
    Unserved { link: LinkId },
    GreenBound { link: LinkId, green_s: u32, min_s: u32, max_s: u32 },
    InterGreenMismatch { plan_s: u32, config_s: u32 },
    EmptyCycle,
}

impl fmt::Display for PlanViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanViolation::LinkOutOfRange { link } => write!(f, "link {link} out of range"),
            PlanViolation::DuplicateLink { link } => write!(f, "link {link} served twice"),
            PlanViolation::Unserved { link } => write!(f, "link {link} unserved"),
            PlanViolation::GreenBound {
                link,
                green_s,
                min_s,
                max_s,
            } => write!(
                f,
                "green bound: link {link} has {green_s} s, allowed [{min_s}, {max_s}]"
            ),
            PlanViolation::InterGreenMismatch { plan_s, config_s } => write!(
                f,
                "inter-green {plan_s} s differs from configured {config_s} s"
            ),
            PlanViolation::EmptyCycle => write!(f, "cycle length is zero"),
        }
    }
}

/// Lists every invariant `plan` violates under `cfg`. An empty list means the plan is valid.
pub fn plan_violations(plan: &SignalPlan, cfg: &IntersectionConfig) -> Vec<PlanViolation> {
    let mut violations = Vec::new();
    let mut seen = BTreeSet::new();
    for phase in &plan.phases {
        if phase.link.0 >= cfg.num_links {
            violations.push(PlanViolation::LinkOutOfRange { link: phase.link });
            continue;
        }
        if !seen.insert(phase.link) {
            violations.push(PlanViolation::DuplicateLink { link: phase.link });
        }
        if phase.green_s < cfg.min_green_s || phase.green_s > cfg.max_green_s {
            violations.push(PlanViolation::GreenBound {
                link: phase.link,
                green_s: phase.green_s,
                min_s: cfg.min_green_s,
                max_s: cfg.max_green_s,
            });
        }
    }
    for link in cfg.links() {
        if !seen.contains(&link) {
            violations.push(PlanViolation::Unserved { link });
        }
    }
    if plan.inter_green_s != cfg.inter_green_s {
        violations.push(PlanViolation::InterGreenMismatch {
            plan_s: plan.inter_green_s,
            config_s: cfg.inter_green_s,
        });
    }
    if plan.cycle_length_s() == 0 {
        violations.push(PlanViolation::EmptyCycle);
    }
    violations
}

/// `Ok(())` if the plan is acceptable, otherwise every violation found.
pub fn validate_plan(
    plan: &SignalPlan,
    cfg: &IntersectionConfig,
) -> std::result::Result<(), Vec<PlanViolation>> {
    let violations = plan_violations(plan, cfg);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Per-camera detection counts for one processed frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub camera_id: LinkId,
    /// Monotonic milliseconds of the source frame.
    pub frame_ts: u64,
    pub motorized_in: u64,
    pub motorized_out: u64,
    pub non_motorized_in: u64,
    pub non_motorized_out: u64,
}

/// Residual congestion (vehicles) and total red time (seconds); both minimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub f1: u64,
    pub f2: u64,
}

impl ObjectiveVector {
    pub fn new(f1: u64, f2: u64) -> Self {
        Self { f1, f2 }
    }
}
