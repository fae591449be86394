//! Frame sources and the per-camera extraction worker.
//!
//! Real camera decoding is replaced by two kinds of source: a synthetic scene
//! generator and a replay of recorded detection logs. Both hand the worker
//! "packets" carrying ground-truth counts and a decode cost, which the worker
//! spends before publishing the frame.

use std::path::PathBuf;
use std::sync::atomic::{AtomicU8, Ordering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DetectionRecord, LinkId};
use crate::seed;

use super::clock::{PipelineClock, StopSignal};
use super::slot::{FrameSlot, Sequenced};

/// A decoded frame ready for inference.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub camera: LinkId,
    /// Per-camera sequence number, starting at 0.
    pub seq: u64,
    /// Pipeline milliseconds at which the packet arrived.
    pub arrival_ms: f64,
    /// Arrival to availability in the slot.
    pub extraction_ms: f64,
    /// What a perfect detector would report for this frame.
    pub truth: DetectionRecord,
}

impl Sequenced for Frame {
    fn seq(&self) -> u64 {
        self.seq
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub truth: DetectionRecord,
    pub decode_cost: Duration,
    /// Overwrite `truth.frame_ts` with the arrival time.
    pub stamp_arrival: bool,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("source for camera {camera} failed: {message}")]
pub struct SourceError {
    pub camera: LinkId,
    pub message: String,
}

pub trait FrameSource: Send {
    /// Blocks until the next packet is due. `Ok(None)` ends the stream.
    fn next_packet(&mut self, stop: &StopSignal) -> Result<Option<Packet>, SourceError>;
}

/// Mean counts per frame for a synthetic camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SceneSpec {
    pub motorized_in: f64,
    pub motorized_out: f64,
    pub non_motorized_in: f64,
    pub non_motorized_out: f64,
    /// Draw each frame's counts from a Poisson law around the means instead
    /// of rounding them.
    pub poisson: bool,
}

fn default_fps() -> f64 {
    10.0
}

fn default_speed() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    Synthetic {
        #[serde(default = "default_fps")]
        fps: f64,
        #[serde(default)]
        scene: SceneSpec,
        #[serde(default)]
        decode_ms: f64,
        #[serde(default)]
        decode_jitter_ms: f64,
        /// Stop after this many frames.
        #[serde(default)]
        frames: Option<u64>,
        /// Fail with an error once this many frames were produced.
        #[serde(default)]
        fail_after: Option<u64>,
        #[serde(default)]
        seed: u64,
    },
    Replay {
        path: PathBuf,
        #[serde(default = "default_speed")]
        speed: f64,
        #[serde(default)]
        decode_ms: f64,
    },
}

pub struct SyntheticSource {
    camera: LinkId,
    period: Duration,
    scene: SceneSpec,
    decode_ms: f64,
    decode_jitter_ms: f64,
    frames: Option<u64>,
    fail_after: Option<u64>,
    rng: ChaCha8Rng,
    produced: u64,
    start: Option<Instant>,
}

impl SyntheticSource {
    pub fn new(camera: LinkId, fps: f64, scene: SceneSpec) -> Self {
        Self {
            camera,
            period: Duration::from_secs_f64(1.0 / fps.max(1e-6)),
            scene,
            decode_ms: 0.0,
            decode_jitter_ms: 0.0,
            frames: None,
            fail_after: None,
            rng: ChaCha8Rng::seed_from_u64(seed::derive(0, &[camera.0 as u64])),
            produced: 0,
            start: None,
        }
    }

    pub fn decode(mut self, decode_ms: f64, jitter_ms: f64) -> Self {
        self.decode_ms = decode_ms.max(0.0);
        self.decode_jitter_ms = jitter_ms.max(0.0);
        self
    }

    pub fn limit(mut self, frames: Option<u64>) -> Self {
        self.frames = frames;
        self
    }

    pub fn fail_after(mut self, frames: Option<u64>) -> Self {
        self.fail_after = frames;
        self
    }

    pub fn seeded(mut self, seed: u64) -> Self {
        self.rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, &[self.camera.0 as u64]));
        self
    }

    fn draw(&mut self, mean: f64) -> u64 {
        if !self.scene.poisson {
            return mean.max(0.0).round() as u64;
        }
        if mean <= 0.0 {
            return 0;
        }
        Poisson::new(mean).map(|p| p.sample(&mut self.rng) as u64).unwrap_or(0)
    }
}

impl FrameSource for SyntheticSource {
    fn next_packet(&mut self, stop: &StopSignal) -> Result<Option<Packet>, SourceError> {
        if self.frames.is_some_and(|n| self.produced >= n) {
            return Ok(None);
        }
        if self.fail_after.is_some_and(|n| self.produced >= n) {
            return Err(SourceError {
                camera: self.camera,
                message: format!("stream lost after {} frames", self.produced),
            });
        }
        let start = *self.start.get_or_insert_with(Instant::now);
        let due = start + self.period.mul_f64(self.produced as f64);
        if stop.sleep_until(due) {
            return Ok(None);
        }
        let scene = self.scene;
        let truth = DetectionRecord {
            camera_id: self.camera,
            frame_ts: 0,
            motorized_in: self.draw(scene.motorized_in),
            motorized_out: self.draw(scene.motorized_out),
            non_motorized_in: self.draw(scene.non_motorized_in),
            non_motorized_out: self.draw(scene.non_motorized_out),
        };
        let jitter = if self.decode_jitter_ms > 0.0 {
            self.rng.random_range(0.0..self.decode_jitter_ms)
        } else {
            0.0
        };
        self.produced += 1;
        Ok(Some(Packet {
            truth,
            decode_cost: Duration::from_secs_f64((self.decode_ms + jitter) / 1e3),
            stamp_arrival: true,
        }))
    }
}

/// Replays recorded detections for one camera, paced by their `frame_ts`.
pub struct ReplaySource {
    camera: LinkId,
    records: Vec<DetectionRecord>,
    next: usize,
    speed: f64,
    decode_cost: Duration,
    start: Option<Instant>,
}

impl ReplaySource {
    /// Keeps only records of `camera`, in file order.
    pub fn new(camera: LinkId, records: &[DetectionRecord], speed: f64, decode_ms: f64) -> Self {
        Self {
            camera,
            records: records
                .iter()
                .filter(|r| r.camera_id == camera)
                .copied()
                .collect(),
            next: 0,
            speed: if speed > 0.0 { speed } else { 1.0 },
            decode_cost: Duration::from_secs_f64(decode_ms.max(0.0) / 1e3),
            start: None,
        }
    }
}

impl FrameSource for ReplaySource {
    fn next_packet(&mut self, stop: &StopSignal) -> Result<Option<Packet>, SourceError> {
        let Some(record) = self.records.get(self.next).copied() else {
            return Ok(None);
        };
        let first_ts = self.records[0].frame_ts;
        let start = *self.start.get_or_insert_with(Instant::now);
        let offset_ms = record.frame_ts.saturating_sub(first_ts) as f64 / self.speed;
        if stop.sleep_until(start + Duration::from_secs_f64(offset_ms / 1e3)) {
            return Ok(None);
        }
        self.next += 1;
        debug_assert_eq!(record.camera_id, self.camera);
        Ok(Some(Packet {
            truth: record,
            decode_cost: self.decode_cost,
            stamp_arrival: false,
        }))
    }
}

/// Lifecycle of a camera's extraction worker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum CameraState {
    Running = 0,
    Finished = 1,
    Failed = 2,
}

#[derive(Debug)]
pub struct CameraStatus(AtomicU8);

impl Default for CameraStatus {
    fn default() -> Self {
        Self(AtomicU8::new(CameraState::Running as u8))
    }
}

impl CameraStatus {
    pub fn get(&self) -> CameraState {
        match self.0.load(Ordering::SeqCst) {
            0 => CameraState::Running,
            1 => CameraState::Finished,
            _ => CameraState::Failed,
        }
    }

    pub fn set(&self, state: CameraState) {
        self.0.store(state as u8, Ordering::SeqCst);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub camera: LinkId,
    /// Extraction delay of every frame published to the slot, in ms.
    pub samples_ms: Vec<f64>,
    pub frames: u64,
    pub dropped: u64,
    pub error: Option<String>,
}

/// Pulls packets from `source`, spends each packet's decode cost and offers
/// the frame to `slot`, until the stream ends, fails, or `stop` is raised.
pub fn run_extraction_worker(
    camera: LinkId,
    source: &mut dyn FrameSource,
    slot: &FrameSlot<Frame>,
    stop: &StopSignal,
    clock: PipelineClock,
    status: &CameraStatus,
) -> ExtractionReport {
    let mut report = ExtractionReport {
        camera,
        ..Default::default()
    };
    loop {
        if stop.is_stopped() {
            break;
        }
        let packet = match source.next_packet(stop) {
            Ok(Some(packet)) => packet,
            Ok(None) => break,
            Err(err) => {
                log::warn!("{err}");
                report.error = Some(err.to_string());
                status.set(CameraState::Failed);
                return report;
            }
        };
        let arrival = Instant::now();
        if !packet.decode_cost.is_zero() && stop.sleep(packet.decode_cost) {
            break;
        }
        let extraction_ms = arrival.elapsed().as_secs_f64() * 1e3;
        let arrival_ms = clock.ms_at(arrival);
        let mut truth = packet.truth;
        truth.camera_id = camera;
        if packet.stamp_arrival {
            truth.frame_ts = arrival_ms as u64;
        }
        let frame = Frame {
            camera,
            seq: report.frames,
            arrival_ms,
            extraction_ms,
            truth,
        };
        if slot.put(frame) {
            report.dropped += 1;
        }
        report.frames += 1;
        report.samples_ms.push(extraction_ms);
    }
    status.set(CameraState::Finished);
    report
}
