//! Turning per-camera detections into a queue state.

use serde::{Deserialize, Serialize};

use crate::model::{DetectionRecord, LinkId, QueueState};

/// What to report for a camera that delivered nothing in a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StalePolicy {
    /// Consecutive silent windows during which the last known counts are
    /// reused. After that the link reads as empty.
    pub reuse_windows: u32,
}

impl Default for StalePolicy {
    fn default() -> Self {
        Self { reuse_windows: 2 }
    }
}

/// Latest detection per camera received while a window is open.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationWindow {
    pub opened_ms: f64,
    pub duration_ms: f64,
    latest: Vec<Option<DetectionRecord>>,
}

impl AggregationWindow {
    pub fn new(num_cameras: usize, opened_ms: f64, duration_ms: f64) -> Self {
        Self {
            opened_ms,
            duration_ms,
            latest: vec![None; num_cameras],
        }
    }

    pub fn deadline_ms(&self) -> f64 {
        self.opened_ms + self.duration_ms
    }

    /// Keeps `record` if it is at least as recent as what the camera already
    /// has. Records from unknown cameras are ignored and reported as `false`.
    pub fn offer(&mut self, record: DetectionRecord) -> bool {
        let Some(entry) = self.latest.get_mut(record.camera_id.0) else {
            return false;
        };
        if entry.is_none_or(|held| record.frame_ts >= held.frame_ts) {
            *entry = Some(record);
        }
        true
    }

    pub fn latest(&self, camera: LinkId) -> Option<&DetectionRecord> {
        self.latest.get(camera.0).and_then(Option::as_ref)
    }

    pub fn reported(&self) -> usize {
        self.latest.iter().filter(|r| r.is_some()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.reported() == self.latest.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub queue: QueueState,
    /// Per link: no record arrived in the window.
    pub stale: Vec<bool>,
}

impl Aggregate {
    pub fn any_stale(&self) -> bool {
        self.stale.iter().any(|&s| s)
    }
}

/// Carries last-known counts across windows.
#[derive(Debug, Clone)]
pub struct Aggregator {
    policy: StalePolicy,
    last_known: Vec<Option<(u64, u64)>>,
    silent: Vec<u32>,
}

impl Aggregator {
    pub fn new(num_cameras: usize, policy: StalePolicy) -> Self {
        Self {
            policy,
            last_known: vec![None; num_cameras],
            silent: vec![0; num_cameras],
        }
    }

    pub fn num_cameras(&self) -> usize {
        self.last_known.len()
    }

    /// Closes `window` into a queue state stamped `now_ms`. Returns `None`
    /// when no camera reported at all.
    pub fn close(&mut self, window: &AggregationWindow, now_ms: u64) -> Option<Aggregate> {
        let n = self.num_cameras();
        let mut motorized = vec![0; n];
        let mut non_motorized = vec![0; n];
        let mut stale = vec![false; n];
        for i in 0..n {
            match window.latest.get(i).copied().flatten() {
                Some(rec) => {
                    self.last_known[i] = Some((rec.motorized_in, rec.non_motorized_in));
                    self.silent[i] = 0;
                    motorized[i] = rec.motorized_in;
                    non_motorized[i] = rec.non_motorized_in;
                }
                None => {
                    self.silent[i] += 1;
                    stale[i] = true;
                    if self.silent[i] <= self.policy.reuse_windows {
                        if let Some((m, nm)) = self.last_known[i] {
                            motorized[i] = m;
                            non_motorized[i] = nm;
                        }
                    }
                }
            }
        }
        if stale.iter().all(|&s| s) {
            return None;
        }
        Some(Aggregate {
            queue: QueueState {
                motorized,
                non_motorized,
                timestamp_ms: now_ms,
            },
            stale,
        })
    }
}
