//! Detector adapters and the inference worker.

use std::sync::mpsc::Sender;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DetectionRecord, LinkId};
use crate::seed;

use super::clock::{PipelineClock, StopSignal};
use super::slot::{Doorbell, FrameSlot};
use super::source::Frame;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("detection failed on camera {camera} frame {seq}: {message}")]
pub struct DetectError {
    pub camera: LinkId,
    pub seq: u64,
    pub message: String,
}

/// Turns one frame into exactly one detection record.
pub trait Detector: Send {
    fn detect(&mut self, frame: &Frame) -> Result<DetectionRecord, DetectError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectorSpec {
    Synthetic {
        delay_ms: f64,
        /// Extra delay drawn uniformly from `[0, jitter_ms)`.
        #[serde(default)]
        jitter_ms: f64,
        /// Probability that each true vehicle is missed.
        #[serde(default)]
        miss_rate: f64,
        /// Mean spurious detections per class per frame.
        #[serde(default)]
        false_rate: f64,
        #[serde(default)]
        seed: u64,
    },
    Replay {
        #[serde(default)]
        delay_ms: f64,
    },
}

impl DetectorSpec {
    pub fn build(&self) -> Box<dyn Detector> {
        match *self {
            DetectorSpec::Synthetic {
                delay_ms,
                jitter_ms,
                miss_rate,
                false_rate,
                seed,
            } => Box::new(SyntheticDetector {
                delay_ms,
                jitter_ms,
                miss_rate,
                false_rate,
                seed,
            }),
            DetectorSpec::Replay { delay_ms } => Box::new(ReplayDetector { delay_ms }),
        }
    }
}

/// Stands in for a neural detector: blocks for a fixed processing delay and
/// reports the frame's ground truth perturbed by misses and false positives.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDetector {
    pub delay_ms: f64,
    pub jitter_ms: f64,
    pub miss_rate: f64,
    pub false_rate: f64,
    pub seed: u64,
}

impl SyntheticDetector {
    pub fn with_delay(delay_ms: f64) -> Self {
        Self {
            delay_ms,
            jitter_ms: 0.0,
            miss_rate: 0.0,
            false_rate: 0.0,
            seed: 0,
        }
    }

    fn perturb(&self, count: u64, rng: &mut ChaCha8Rng) -> u64 {
        let kept = if self.miss_rate > 0.0 && count > 0 {
            Binomial::new(count, (1.0 - self.miss_rate).clamp(0.0, 1.0))
                .map(|b| b.sample(rng))
                .unwrap_or(count)
        } else {
            count
        };
        let spurious = if self.false_rate > 0.0 {
            Poisson::new(self.false_rate)
                .map(|p| p.sample(rng) as u64)
                .unwrap_or(0)
        } else {
            0
        };
        kept + spurious
    }
}

impl Detector for SyntheticDetector {
    fn detect(&mut self, frame: &Frame) -> Result<DetectionRecord, DetectError> {
        // noise depends only on (seed, camera, seq), not on which worker runs it
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(
            self.seed,
            &[frame.camera.0 as u64, frame.seq],
        ));
        let jitter = if self.jitter_ms > 0.0 {
            rng.random_range(0.0..self.jitter_ms)
        } else {
            0.0
        };
        thread::sleep(Duration::from_secs_f64((self.delay_ms + jitter).max(0.0) / 1e3));
        let t = frame.truth;
        Ok(DetectionRecord {
            camera_id: frame.camera,
            frame_ts: t.frame_ts,
            motorized_in: self.perturb(t.motorized_in, &mut rng),
            motorized_out: self.perturb(t.motorized_out, &mut rng),
            non_motorized_in: self.perturb(t.non_motorized_in, &mut rng),
            non_motorized_out: self.perturb(t.non_motorized_out, &mut rng),
        })
    }
}

/// Passes recorded detections through unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayDetector {
    pub delay_ms: f64,
}

impl Detector for ReplayDetector {
    fn detect(&mut self, frame: &Frame) -> Result<DetectionRecord, DetectError> {
        if self.delay_ms > 0.0 {
            thread::sleep(Duration::from_secs_f64(self.delay_ms / 1e3));
        }
        Ok(frame.truth)
    }
}

/// A processed frame as delivered to the orchestrator.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub record: DetectionRecord,
    pub seq: u64,
    pub extraction_ms: f64,
    pub inference_ms: f64,
    pub completed_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InferenceEvent {
    Detected(Detection),
    Failed(DetectError),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub worker: usize,
    pub processed: u64,
    pub errors: u64,
    pub samples_ms: Vec<f64>,
}

const IDLE_POLL: Duration = Duration::from_millis(25);

/// Serves `slots` round-robin: takes the newest frame of each, runs the
/// detector on it and sends the outcome to `sink`. Runs until `stop` or
/// until the receiving side hangs up.
pub fn run_inference_worker(
    worker: usize,
    slots: &[Arc<FrameSlot<Frame>>],
    doorbell: &Doorbell,
    detector: &mut dyn Detector,
    sink: &Sender<InferenceEvent>,
    stop: &StopSignal,
    clock: PipelineClock,
) -> InferenceReport {
    let mut report = InferenceReport {
        worker,
        ..Default::default()
    };
    let mut cursor = 0;
    'serve: while !stop.is_stopped() {
        let seen = doorbell.rings();
        let mut served = false;
        for k in 0..slots.len() {
            let slot = &slots[(cursor + k) % slots.len()];
            let Some(frame) = slot.take() else {
                continue;
            };
            served = true;
            cursor = (cursor + k + 1) % slots.len();
            let started = Instant::now();
            let outcome = detector.detect(&frame);
            let inference_ms = started.elapsed().as_secs_f64() * 1e3;
            let event = match outcome {
                Ok(record) => {
                    report.processed += 1;
                    report.samples_ms.push(inference_ms);
                    InferenceEvent::Detected(Detection {
                        record,
                        seq: frame.seq,
                        extraction_ms: frame.extraction_ms,
                        inference_ms,
                        completed_ms: clock.now_ms(),
                    })
                }
                Err(err) => {
                    report.errors += 1;
                    InferenceEvent::Failed(err)
                }
            };
            if sink.send(event).is_err() {
                break 'serve;
            }
            break;
        }
        if !served {
            doorbell.wait(seen, IDLE_POLL);
        }
    }
    report
}
