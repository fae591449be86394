//! Single-slot, latest-only frame buffer.
//!
//! A `put` replaces whatever the slot holds; a `take` empties it. Readers
//! therefore always get the newest frame written since their last take, and
//! a slot never holds more than one frame.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

/// Items that carry a producer sequence number, used by slot audit logs.
pub trait Sequenced {
    fn seq(&self) -> u64;
}

impl Sequenced for u64 {
    fn seq(&self) -> u64 {
        *self
    }
}

/// One operation on a slot, in the order the slot's lock serialized them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotEvent {
    Put { seq: u64, dropped: bool },
    Take { seq: u64 },
}

/// Counts frames buffered across a group of slots and remembers the peak.
#[derive(Debug, Default)]
pub struct BufferGauge {
    current: AtomicUsize,
    high_water: AtomicUsize,
}

impl BufferGauge {
    pub fn current(&self) -> usize {
        self.current.load(Ordering::SeqCst)
    }

    pub fn high_water(&self) -> usize {
        self.high_water.load(Ordering::SeqCst)
    }

    fn inc(&self) {
        let now = self.current.fetch_add(1, Ordering::SeqCst) + 1;
        self.high_water.fetch_max(now, Ordering::SeqCst);
    }

    fn dec(&self) {
        self.current.fetch_sub(1, Ordering::SeqCst);
    }
}

/// Wakes a consumer that watches several slots at once.
#[derive(Debug, Default)]
pub struct Doorbell {
    rings: Mutex<u64>,
    cv: Condvar,
}

impl Doorbell {
    pub fn ring(&self) {
        let mut rings = self.rings.lock().unwrap();
        *rings += 1;
        self.cv.notify_all();
    }

    pub fn rings(&self) -> u64 {
        *self.rings.lock().unwrap()
    }

    /// Blocks until the ring count moves past `seen` or `timeout` elapses.
    pub fn wait(&self, seen: u64, timeout: Duration) -> u64 {
        let guard = self.rings.lock().unwrap();
        let (guard, _) = self
            .cv
            .wait_timeout_while(guard, timeout, |rings| *rings == seen)
            .unwrap();
        *guard
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SlotStats {
    pub puts: u64,
    pub drops: u64,
    pub takes: u64,
}

struct SlotState<T> {
    latest: Option<T>,
    stats: SlotStats,
    audit: Option<Vec<SlotEvent>>,
}

pub struct FrameSlot<T> {
    state: Mutex<SlotState<T>>,
    ready: Condvar,
    doorbell: Option<Arc<Doorbell>>,
    gauge: Option<Arc<BufferGauge>>,
}

impl<T: Sequenced> Default for FrameSlot<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Sequenced> FrameSlot<T> {
    pub fn new() -> Self {
        Self::with_hooks(None, None, false)
    }

    /// `doorbell` is rung on every put; `gauge` tracks occupancy; `audit`
    /// records every put and take.
    pub fn with_hooks(
        doorbell: Option<Arc<Doorbell>>,
        gauge: Option<Arc<BufferGauge>>,
        audit: bool,
    ) -> Self {
        Self {
            state: Mutex::new(SlotState {
                latest: None,
                stats: SlotStats::default(),
                audit: audit.then(Vec::new),
            }),
            ready: Condvar::new(),
            doorbell,
            gauge,
        }
    }

    fn lock(&self) -> MutexGuard<'_, SlotState<T>> {
        self.state.lock().unwrap()
    }

    /// Stores `frame`, replacing any unconsumed frame. Returns whether one was dropped.
    pub fn put(&self, frame: T) -> bool {
        let seq = frame.seq();
        let mut state = self.lock();
        let dropped = state.latest.replace(frame).is_some();
        state.stats.puts += 1;
        if dropped {
            state.stats.drops += 1;
        } else if let Some(gauge) = &self.gauge {
            gauge.inc();
        }
        if let Some(audit) = &mut state.audit {
            audit.push(SlotEvent::Put { seq, dropped });
        }
        drop(state);
        self.ready.notify_one();
        if let Some(bell) = &self.doorbell {
            bell.ring();
        }
        dropped
    }

    /// Removes and returns the held frame, if any.
    pub fn take(&self) -> Option<T> {
        let mut state = self.lock();
        Self::take_locked(&mut state, self.gauge.as_deref())
    }

    /// Like [`take`](Self::take) but waits up to `timeout` for a frame.
    pub fn take_timeout(&self, timeout: Duration) -> Option<T> {
        let deadline = Instant::now() + timeout;
        let mut state = self.lock();
        while state.latest.is_none() {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return None;
            }
            state = self.ready.wait_timeout(state, left).unwrap().0;
        }
        Self::take_locked(&mut state, self.gauge.as_deref())
    }

    fn take_locked(state: &mut SlotState<T>, gauge: Option<&BufferGauge>) -> Option<T> {
        let frame = state.latest.take()?;
        state.stats.takes += 1;
        if let Some(gauge) = gauge {
            gauge.dec();
        }
        if let Some(audit) = &mut state.audit {
            audit.push(SlotEvent::Take { seq: frame.seq() });
        }
        Some(frame)
    }

    pub fn is_empty(&self) -> bool {
        self.lock().latest.is_none()
    }

    pub fn stats(&self) -> SlotStats {
        self.lock().stats
    }

    /// Audit log so far (empty when auditing is off).
    pub fn audit_log(&self) -> Vec<SlotEvent> {
        self.lock().audit.clone().unwrap_or_default()
    }
}

/// Checks an audit log: every take must return the highest sequence number
/// put so far, and no sequence number may be taken twice.
pub fn check_freshness(log: &[SlotEvent]) -> Result<(), String> {
    let mut newest_put: Option<u64> = None;
    let mut last_taken: Option<u64> = None;
    for (i, event) in log.iter().enumerate() {
        match *event {
            SlotEvent::Put { seq, .. } => {
                newest_put = Some(newest_put.map_or(seq, |n| n.max(seq)));
            }
            SlotEvent::Take { seq } => {
                if Some(seq) != newest_put {
                    return Err(format!(
                        "event {i}: took seq {seq} while newest put was {newest_put:?}"
                    ));
                }
                if last_taken.is_some_and(|t| seq <= t) {
                    return Err(format!("event {i}: seq {seq} taken again or out of order"));
                }
                last_taken = Some(seq);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::thread;

    use super::*;

    #[test]
    fn newer_put_replaces_older() {
        let slot = FrameSlot::<u64>::new();
        assert!(!slot.put(1));
        assert!(slot.put(2));
        assert_eq!(slot.take(), Some(2));
        assert_eq!(slot.take(), None);
    }

    #[test]
    fn take_then_empty() {
        let slot = FrameSlot::<u64>::new();
        slot.put(7);
        assert_eq!(slot.take(), Some(7));
        assert_eq!(slot.take(), None);
        assert!(slot.is_empty());
    }

    #[test]
    fn rapid_puts_drop_all_but_newest() {
        let slot = FrameSlot::<u64>::new();
        let drops = (0..1000u64).filter(|&i| slot.put(i)).count();
        assert_eq!(drops, 999);
        assert_eq!(slot.take(), Some(999));
        assert_eq!(
            slot.stats(),
            SlotStats {
                puts: 1000,
                drops: 999,
                takes: 1
            }
        );
    }

    #[test]
    fn gauge_counts_occupied_slots() {
        let gauge = Arc::new(BufferGauge::default());
        let slots: Vec<FrameSlot<u64>> = (0..3)
            .map(|_| FrameSlot::with_hooks(None, Some(gauge.clone()), false))
            .collect();
        for (i, s) in slots.iter().enumerate() {
            for k in 0..10 {
                s.put(i as u64 * 100 + k);
            }
        }
        assert_eq!(gauge.current(), 3);
        slots[1].take();
        assert_eq!(gauge.current(), 2);
        assert_eq!(gauge.high_water(), 3);
    }

    #[test]
    fn take_timeout_wakes_on_put() {
        let slot = Arc::new(FrameSlot::<u64>::new());
        let producer = {
            let slot = slot.clone();
            thread::spawn(move || {
                thread::sleep(Duration::from_millis(20));
                slot.put(5);
            })
        };
        assert_eq!(slot.take_timeout(Duration::from_secs(5)), Some(5));
        producer.join().unwrap();
        assert_eq!(slot.take_timeout(Duration::from_millis(10)), None);
    }

    #[test]
    fn doorbell_wait_returns_after_ring() {
        let bell = Arc::new(Doorbell::default());
        let slot = FrameSlot::<u64>::with_hooks(Some(bell.clone()), None, false);
        let seen = bell.rings();
        slot.put(1);
        assert_eq!(bell.wait(seen, Duration::from_secs(1)), seen + 1);
    }

    #[test]
    fn freshness_checker() {
        let good = [
            SlotEvent::Put { seq: 0, dropped: false },
            SlotEvent::Put { seq: 1, dropped: true },
            SlotEvent::Take { seq: 1 },
            SlotEvent::Put { seq: 2, dropped: false },
            SlotEvent::Take { seq: 2 },
        ];
        assert!(check_freshness(&good).is_ok());
        let stale = [
            SlotEvent::Put { seq: 0, dropped: false },
            SlotEvent::Put { seq: 1, dropped: true },
            SlotEvent::Take { seq: 0 },
        ];
        assert!(check_freshness(&stale).is_err());
    }

    #[test]
    fn concurrent_audit_is_fresh() {
        let slot = Arc::new(FrameSlot::<u64>::with_hooks(None, None, true));
        let producer = {
            let slot = slot.clone();
            thread::spawn(move || {
                for i in 0..20_000u64 {
                    slot.put(i);
                }
            })
        };
        let mut taken = 0;
        while !producer.is_finished() || !slot.is_empty() {
            if slot.take().is_some() {
                taken += 1;
            }
        }
        producer.join().unwrap();
        let log = slot.audit_log();
        assert_eq!(check_freshness(&log), Ok(()));
        let takes = log
            .iter()
            .filter(|e| matches!(e, SlotEvent::Take { .. }))
            .count();
        assert_eq!(takes, taken);
    }
}
