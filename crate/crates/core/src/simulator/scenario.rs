//! Scenario files: an intersection, demand, controllers and run options.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::model::{IntersectionConfig, IntersectionSource};

use super::arrivals::ArrivalModel;
use super::compare::{compare_controllers, ComparisonReport};
use super::controller::ControllerSpec;
use super::engine::{simulate, SimOptions, SimRun};

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub intersection: IntersectionSource,
    pub demand: ArrivalModel,
    pub controllers: Vec<ControllerSpec>,
    /// Name of the controller others are compared against; the last one when absent.
    #[serde(default)]
    pub baseline: Option<String>,
    pub horizon_s: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub options: SimOptions,
}

/// A scenario with its intersection loaded and every field checked.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScenario {
    pub cfg: IntersectionConfig,
    pub scenario: Scenario,
}

impl Scenario {
    /// Reads a scenario file; a relative intersection path is taken relative to it.
    pub fn load(path: impl AsRef<Path>) -> Result<LoadedScenario> {
        let path = path.as_ref();
        let scenario: Scenario = io::read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        scenario.resolve(base)
    }

    pub fn resolve(self, base_dir: &Path) -> Result<LoadedScenario> {
        let cfg = self.intersection.load(base_dir)?;
        let loaded = LoadedScenario {
            cfg,
            scenario: self,
        };
        loaded.validate()?;
        Ok(loaded)
    }
}

impl LoadedScenario {
    pub fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        if s.horizon_s == 0 {
            return Err(Error::Validation("horizon_s must be > 0".into()));
        }
        if s.seeds.is_empty() {
            return Err(Error::Validation("seeds must not be empty".into()));
        }
        if s.controllers.is_empty() {
            return Err(Error::Validation("at least one controller is required".into()));
        }
        s.demand.validate(self.cfg.num_links)?;
        s.options.validate(&self.cfg)?;
        for (i, c) in s.controllers.iter().enumerate() {
            if s.controllers[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::Validation(format!("duplicate controller name {:?}", c.name)));
            }
            c.validate(&self.cfg)?;
        }
        self.baseline_index()?;
        Ok(())
    }

    pub fn baseline_index(&self) -> Result<usize> {
        let s = &self.scenario;
        match &s.baseline {
            None => Ok(s.controllers.len() - 1),
            Some(name) => s
                .controllers
                .iter()
                .position(|c| &c.name == name)
                .ok_or_else(|| Error::Validation(format!("baseline {name:?} is not a controller"))),
        }
    }

    pub fn run(&self, controller: usize, seed: u64) -> Result<SimRun> {
        let s = &self.scenario;
        let mut c = s.controllers[controller].build(&self.cfg, seed);
        simulate(&self.cfg, &s.demand, c.as_mut(), s.horizon_s, &s.options, seed)
    }

    pub fn compare(&self, seeds: &[u64]) -> Result<ComparisonReport> {
        let s = &self.scenario;
        compare_controllers(
            &self.cfg,
            &s.demand,
            &s.controllers,
            self.baseline_index()?,
            s.horizon_s,
            seeds,
            &s.options,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"{
        "intersection": {"num_links": 2, "link_names": ["North", "South"]},
        "demand": {"motorized": [0.1, 0.05], "non_motorized": [0.02, 0.02]},
        "controllers": [
            {"name": "adaptive", "kind": "adaptive", "optimizer": {"population_size": 20, "generations": 10}},
            {"name": "fixed", "kind": "fixed_time", "greens": [20, 20]}
        ],
        "horizon_s": 300,
        "seeds": [1, 2]
    }"#;

    fn parse(text: &str) -> Result<LoadedScenario> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::parse("scenario", e))?;
        s.resolve(Path::new("."))
    }

    #[test]
    fn parses_and_defaults() {
        let s = parse(TEXT).unwrap();
        assert_eq!(s.baseline_index().unwrap(), 1);
        assert_eq!(s.scenario.options.sensing_latency_s, 2);
        assert_eq!(s.cfg.link_names, vec!["North", "South"]);
    }

    #[test]
    fn zero_horizon_is_rejected() {
        let text = TEXT.replace("\"horizon_s\": 300", "\"horizon_s\": 0");
        assert!(matches!(parse(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn unknown_baseline_is_rejected() {
        let text = TEXT.replace("\"seeds\"", "\"baseline\": \"police\", \"seeds\"");
        assert!(matches!(parse(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn run_and_compare() {
        let s = parse(TEXT).unwrap();
        let run = s.run(0, 1).unwrap();
        assert_eq!(run.trace.seconds.len(), 300);
        let report = s.compare(&[1, 2]).unwrap();
        assert_eq!(report.baseline, "fixed");
        assert_eq!(report.controllers.len(), 2);
        assert_eq!(report.controllers[1].overall_avg_delta_pct, Some(0.0));
    }
}
