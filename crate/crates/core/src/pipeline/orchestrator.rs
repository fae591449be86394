//! The control loop: collects detections per window, aggregates them into a
//! queue state, runs the optimizer and emits one plan per cycle.

use std::path::Path;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::model::{
    DetectionRecord, IntersectionConfig, IntersectionSource, LinkId, ObjectiveVector, SignalPlan,
};
use crate::nsga2::{self, select_index, OptimizerParams, SelectionPolicy};

use super::aggregate::{AggregationWindow, Aggregator, StalePolicy};
use super::clock::{PipelineClock, StopSignal};
use super::detector::{
    run_inference_worker, Detector, DetectorSpec, InferenceEvent, InferenceReport,
};
use super::ledger::{CycleLatency, LatencyLedger};
use super::slot::{BufferGauge, Doorbell, FrameSlot, SlotEvent, SlotStats};
use super::source::{
    run_extraction_worker, CameraState, CameraStatus, ExtractionReport, Frame, FrameSource,
    ReplaySource, SourceSpec, SyntheticSource,
};

fn default_window_ms() -> f64 {
    5000.0
}

/// Everything about a run except where frames come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSettings {
    #[serde(default = "default_window_ms")]
    pub window_ms: f64,
    #[serde(default)]
    pub stale: StalePolicy,
    #[serde(default)]
    pub optimizer: OptimizerParams,
    #[serde(default)]
    pub policy: SelectionPolicy,
    #[serde(default)]
    pub guidance_pad_s: u32,
    /// Record every slot operation for later freshness checks.
    #[serde(default)]
    pub audit: bool,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            window_ms: default_window_ms(),
            stale: StalePolicy::default(),
            optimizer: OptimizerParams::default(),
            policy: SelectionPolicy::default(),
            guidance_pad_s: 0,
            audit: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub source: SourceSpec,
}

/// Pipeline config file. Camera `i` watches link `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub intersection: IntersectionSource,
    pub cameras: Vec<CameraSpec>,
    pub detector: DetectorSpec,
    /// Number of inference workers; one per camera when absent.
    #[serde(default)]
    pub inference_workers: Option<usize>,
    #[serde(flatten)]
    pub settings: PipelineSettings,
}

impl PipelineSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        io::read_json(path)
    }
}

/// A plan as written to the plan log. Carries no wall-clock data so that
/// identical inputs give identical lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmittedPlan {
    pub cycle: u64,
    pub motorized: Vec<u64>,
    pub non_motorized: Vec<u64>,
    pub stale: Vec<bool>,
    pub plan: SignalPlan,
    pub objectives: ObjectiveVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    /// The window closed without a single detection.
    NoDetections,
    /// Every source has ended or failed and nothing is left in flight.
    SourcesDown,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CycleOutcome {
    Plan {
        plan: EmittedPlan,
        latency: CycleLatency,
        emitted_ms: f64,
    },
    Skipped { cycle: u64, reason: SkipReason },
    Stopped,
}

#[derive(Debug, Clone, Default)]
pub struct PipelineReport {
    pub extraction: Vec<ExtractionReport>,
    pub inference: Vec<InferenceReport>,
    pub camera_states: Vec<CameraState>,
    pub slot_stats: Vec<SlotStats>,
    /// Per-camera slot audit logs; empty unless auditing was enabled.
    pub audits: Vec<Vec<SlotEvent>>,
    /// Most frames held across all slots at any instant.
    pub buffered_high_water: usize,
    pub detector_errors: u64,
    pub ledger: LatencyLedger,
}

const POLL: Duration = Duration::from_millis(50);

pub struct Pipeline {
    cfg: IntersectionConfig,
    settings: PipelineSettings,
    clock: PipelineClock,
    stop: StopSignal,
    slots: Vec<Arc<FrameSlot<Frame>>>,
    statuses: Vec<Arc<CameraStatus>>,
    gauge: Arc<BufferGauge>,
    events: Receiver<InferenceEvent>,
    extraction: Vec<JoinHandle<ExtractionReport>>,
    inference: Vec<JoinHandle<InferenceReport>>,
    aggregator: Aggregator,
    ledger: LatencyLedger,
    window_open_ms: f64,
    next_cycle: u64,
    detector_errors: u64,
}

fn build_source(camera: LinkId, spec: &SourceSpec, base_dir: &Path) -> Result<Box<dyn FrameSource>> {
    Ok(match spec {
        SourceSpec::Synthetic {
            fps,
            scene,
            decode_ms,
            decode_jitter_ms,
            frames,
            fail_after,
            seed,
        } => {
            if !(*fps > 0.0) {
                return Err(Error::Validation(format!("camera {camera}: fps must be > 0")));
            }
            Box::new(
                SyntheticSource::new(camera, *fps, *scene)
                    .decode(*decode_ms, *decode_jitter_ms)
                    .limit(*frames)
                    .fail_after(*fail_after)
                    .seeded(*seed),
            )
        }
        SourceSpec::Replay {
            path,
            speed,
            decode_ms,
        } => {
            let records: Vec<DetectionRecord> = io::read_jsonl(io::resolve(base_dir, path))?;
            Box::new(ReplaySource::new(camera, &records, *speed, *decode_ms))
        }
    })
}

impl Pipeline {
    /// Builds sources and detectors from `spec` and starts all workers.
    /// Relative paths in `spec` are resolved against `base_dir`.
    pub fn start(spec: &PipelineSpec, base_dir: &Path) -> Result<Self> {
        let cfg = spec.intersection.load(base_dir)?;
        if spec.cameras.len() != cfg.num_links {
            return Err(Error::Validation(format!(
                "{} cameras configured for {} links",
                spec.cameras.len(),
                cfg.num_links
            )));
        }
        let workers = spec.inference_workers.unwrap_or(cfg.num_links);
        let sources = spec
            .cameras
            .iter()
            .enumerate()
            .map(|(i, cam)| build_source(LinkId(i), &cam.source, base_dir))
            .collect::<Result<Vec<_>>>()?;
        let detectors = (0..workers).map(|_| spec.detector.build()).collect();
        Self::start_with(cfg, sources, detectors, spec.settings.clone())
    }

    /// Starts one extraction worker per source and one inference worker per
    /// detector. Cameras are dealt to inference workers round-robin.
    pub fn start_with(
        cfg: IntersectionConfig,
        sources: Vec<Box<dyn FrameSource>>,
        detectors: Vec<Box<dyn Detector>>,
        settings: PipelineSettings,
    ) -> Result<Self> {
        cfg.validate()?;
        settings.optimizer.validate()?;
        if sources.len() != cfg.num_links {
            return Err(Error::Validation(format!(
                "{} sources for {} links",
                sources.len(),
                cfg.num_links
            )));
        }
        if detectors.is_empty() || detectors.len() > sources.len() {
            return Err(Error::Validation(format!(
                "inference_workers must be in 1..={}, got {}",
                sources.len(),
                detectors.len()
            )));
        }
        if !(settings.window_ms > 0.0) {
            return Err(Error::Validation("window_ms must be > 0".into()));
        }

        let clock = PipelineClock::start();
        let stop = StopSignal::new();
        let gauge = Arc::new(BufferGauge::default());
        let bells: Vec<Arc<Doorbell>> = detectors.iter().map(|_| Arc::default()).collect();
        let n = sources.len();
        let slots: Vec<Arc<FrameSlot<Frame>>> = (0..n)
            .map(|i| {
                Arc::new(FrameSlot::with_hooks(
                    Some(bells[i % bells.len()].clone()),
                    Some(gauge.clone()),
                    settings.audit,
                ))
            })
            .collect();
        let statuses: Vec<Arc<CameraStatus>> = (0..n).map(|_| Arc::default()).collect();

        let (tx, events) = mpsc::channel();
        let pool = bells.len();
        let inference = detectors
            .into_iter()
            .enumerate()
            .map(|(w, mut detector)| {
                let mine: Vec<_> = (w..n).step_by(pool).map(|i| slots[i].clone()).collect();
                let (bell, stop, tx) = (bells[w].clone(), stop.clone(), tx.clone());
                thread::Builder::new()
                    .name(format!("inference-{w}"))
                    .spawn(move || {
                        run_inference_worker(w, &mine, &bell, detector.as_mut(), &tx, &stop, clock)
                    })
                    .map_err(|e| Error::io("inference thread", e))
            })
            .collect::<Result<Vec<_>>>()?;
        drop(tx);

        let extraction = sources
            .into_iter()
            .enumerate()
            .map(|(i, mut source)| {
                let (slot, stop, status) = (slots[i].clone(), stop.clone(), statuses[i].clone());
                thread::Builder::new()
                    .name(format!("camera-{i}"))
                    .spawn(move || {
                        run_extraction_worker(LinkId(i), source.as_mut(), &slot, &stop, clock, &status)
                    })
                    .map_err(|e| Error::io("camera thread", e))
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            aggregator: Aggregator::new(n, settings.stale),
            cfg,
            settings,
            clock,
            stop,
            slots,
            statuses,
            gauge,
            events,
            extraction,
            inference,
            ledger: LatencyLedger::default(),
            window_open_ms: 0.0,
            next_cycle: 0,
            detector_errors: 0,
        })
    }

    pub fn config(&self) -> &IntersectionConfig {
        &self.cfg
    }

    pub fn clock(&self) -> PipelineClock {
        self.clock
    }

    /// Handle that stops the pipeline from another thread.
    pub fn stop_signal(&self) -> StopSignal {
        self.stop.clone()
    }

    pub fn ledger(&self) -> &LatencyLedger {
        &self.ledger
    }

    pub fn camera_states(&self) -> Vec<CameraState> {
        self.statuses.iter().map(|s| s.get()).collect()
    }

    pub fn sources_alive(&self) -> bool {
        self.statuses.iter().any(|s| s.get() == CameraState::Running)
    }

    pub fn buffered_frames(&self) -> usize {
        self.gauge.current()
    }

    /// Runs one aggregation window and, unless it is skipped, one optimizer
    /// invocation.
    pub fn run_cycle(&mut self) -> Result<CycleOutcome> {
        if self.stop.is_stopped() {
            return Ok(CycleOutcome::Stopped);
        }
        let cycle = self.next_cycle;
        self.next_cycle += 1;
        let n = self.cfg.num_links;
        let mut window = AggregationWindow::new(n, self.window_open_ms, self.settings.window_ms);
        let mut extraction_samples = Vec::new();
        let mut inference_samples = Vec::new();
        let deadline = self.clock.instant_at(window.deadline_ms());

        while !window.is_complete() {
            if self.stop.is_stopped() {
                return Ok(CycleOutcome::Stopped);
            }
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                break;
            }
            match self.events.recv_timeout(left.min(POLL)) {
                Ok(InferenceEvent::Detected(d)) => {
                    extraction_samples.push(d.extraction_ms);
                    inference_samples.push(d.inference_ms);
                    window.offer(d.record);
                }
                Ok(InferenceEvent::Failed(err)) => {
                    self.detector_errors += 1;
                    log::warn!("{err}");
                }
                Err(RecvTimeoutError::Timeout) => {
                    if window.reported() == 0
                        && !self.sources_alive()
                        && self.slots.iter().all(|s| s.is_empty())
                    {
                        self.window_open_ms = self.clock.now_ms();
                        return Ok(CycleOutcome::Skipped {
                            cycle,
                            reason: SkipReason::SourcesDown,
                        });
                    }
                }
                Err(RecvTimeoutError::Disconnected) => break,
            }
        }

        let closed_ms = self.clock.now_ms();
        self.window_open_ms = closed_ms;
        let Some(aggregate) = self.aggregator.close(&window, closed_ms as u64) else {
            log::warn!("cycle {cycle} skipped: no detections in window");
            return Ok(CycleOutcome::Skipped {
                cycle,
                reason: SkipReason::NoDetections,
            });
        };

        let started = Instant::now();
        let front = nsga2::run(&aggregate.queue, &self.cfg, &self.settings.optimizer)?;
        let chosen = select_index(&front.members, self.settings.policy)?;
        let plan = front
            .plan_for(chosen)
            .with_guidance_pad(self.settings.guidance_pad_s);
        let optimization_ms = started.elapsed().as_secs_f64() * 1e3;

        let latency = CycleLatency::new(cycle, extraction_samples, inference_samples, optimization_ms);
        self.ledger.push(latency.clone());
        let emitted = EmittedPlan {
            cycle,
            motorized: aggregate.queue.motorized,
            non_motorized: aggregate.queue.non_motorized,
            stale: aggregate.stale,
            plan,
            objectives: front.members[chosen].objectives,
        };
        Ok(CycleOutcome::Plan {
            plan: emitted,
            latency,
            emitted_ms: self.clock.now_ms(),
        })
    }

    /// Stops every worker, waits for them and collects their reports.
    pub fn shutdown(self) -> PipelineReport {
        self.stop.stop();
        let Pipeline {
            slots,
            statuses,
            gauge,
            events,
            extraction,
            inference,
            ledger,
            detector_errors,
            ..
        } = self;
        drop(events);
        let extraction: Vec<ExtractionReport> = extraction
            .into_iter()
            .map(|h| h.join().unwrap_or_default())
            .collect();
        let inference: Vec<InferenceReport> = inference
            .into_iter()
            .map(|h| h.join().unwrap_or_default())
            .collect();
        PipelineReport {
            extraction,
            inference,
            camera_states: statuses.iter().map(|s| s.get()).collect(),
            slot_stats: slots.iter().map(|s| s.stats()).collect(),
            audits: slots.iter().map(|s| s.audit_log()).collect(),
            buffered_high_water: gauge.high_water(),
            detector_errors,
            ledger,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::detector::SyntheticDetector;
    use crate::pipeline::source::SceneSpec;

    fn quick_settings() -> PipelineSettings {
        PipelineSettings {
            window_ms: 2000.0,
            optimizer: OptimizerParams {
                population_size: 20,
                generations: 10,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    fn synthetic(n: usize, fps: f64) -> Vec<Box<dyn FrameSource>> {
        (0..n)
            .map(|i| {
                Box::new(SyntheticSource::new(
                    LinkId(i),
                    fps,
                    SceneSpec {
                        motorized_in: 5.0 + 3.0 * i as f64,
                        non_motorized_in: 2.0,
                        ..Default::default()
                    },
                )) as Box<dyn FrameSource>
            })
            .collect()
    }

    fn detectors(n: usize, delay_ms: f64) -> Vec<Box<dyn Detector>> {
        (0..n)
            .map(|_| Box::new(SyntheticDetector::with_delay(delay_ms)) as Box<dyn Detector>)
            .collect()
    }

    #[test]
    fn constant_scene_gives_identical_plans() {
        let cfg = IntersectionConfig::with_links(3);
        let mut p = Pipeline::start_with(cfg, synthetic(3, 50.0), detectors(3, 5.0), quick_settings()).unwrap();
        let mut plans = Vec::new();
        while plans.len() < 3 {
            match p.run_cycle().unwrap() {
                CycleOutcome::Plan { plan, .. } => plans.push(plan),
                CycleOutcome::Skipped { .. } => {}
                CycleOutcome::Stopped => unreachable!(),
            }
        }
        let report = p.shutdown();
        assert_eq!(report.ledger.len(), 3);
        let cycles: Vec<u64> = plans.iter().map(|p| p.cycle).collect();
        assert!(cycles.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(plans[0].motorized, vec![5, 8, 11]);
        for p in &plans[1..] {
            assert_eq!(p.plan, plans[0].plan);
            assert_eq!(p.objectives, plans[0].objectives);
        }
        assert!(report.buffered_high_water <= 3);
    }

    #[test]
    fn shared_inference_worker_serves_all_cameras() {
        let cfg = IntersectionConfig::with_links(4);
        let mut p = Pipeline::start_with(cfg, synthetic(4, 40.0), detectors(1, 2.0), quick_settings()).unwrap();
        let outcome = p.run_cycle().unwrap();
        let CycleOutcome::Plan { plan, .. } = outcome else {
            panic!("expected a plan, got {outcome:?}");
        };
        assert!(plan.stale.iter().all(|&s| !s));
        p.shutdown();
    }

    #[test]
    fn all_sources_empty_reports_sources_down() {
        let cfg = IntersectionConfig::with_links(2);
        let sources: Vec<Box<dyn FrameSource>> = (0..2)
            .map(|i| Box::new(ReplaySource::new(LinkId(i), &[], 1.0, 0.0)) as Box<dyn FrameSource>)
            .collect();
        let mut p = Pipeline::start_with(cfg, sources, detectors(2, 0.0), quick_settings()).unwrap();
        let t0 = Instant::now();
        assert_eq!(
            p.run_cycle().unwrap(),
            CycleOutcome::Skipped {
                cycle: 0,
                reason: SkipReason::SourcesDown
            }
        );
        assert!(t0.elapsed() < Duration::from_secs(2));
        assert!(!p.sources_alive());
        p.shutdown();
    }

    #[test]
    fn stop_signal_ends_cycle() {
        let cfg = IntersectionConfig::with_links(2);
        let p = Pipeline::start_with(cfg, synthetic(2, 10.0), detectors(2, 0.0), quick_settings()).unwrap();
        p.stop_signal().stop();
        let mut p = p;
        assert_eq!(p.run_cycle().unwrap(), CycleOutcome::Stopped);
        let t0 = Instant::now();
        p.shutdown();
        assert!(t0.elapsed() < Duration::from_secs(2));
    }

    #[test]
    fn camera_count_must_match_links() {
        let cfg = IntersectionConfig::with_links(3);
        let err = Pipeline::start_with(cfg, synthetic(2, 10.0), detectors(1, 0.0), quick_settings());
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn spec_parses_with_defaults() {
        let text = r#"{
            "intersection": {"num_links": 2},
            "cameras": [
                {"source": {"kind": "synthetic", "fps": 5, "scene": {"motorized_in": 3}}},
                {"source": {"kind": "replay", "path": "log.jsonl"}}
            ],
            "detector": {"kind": "synthetic", "delay_ms": 1994.8}
        }"#;
        let spec: PipelineSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec.settings.window_ms, 5000.0);
        assert_eq!(spec.settings.stale.reuse_windows, 2);
        assert_eq!(spec.inference_workers, None);
        assert!(matches!(spec.intersection, IntersectionSource::Inline(_)));
    }
}
