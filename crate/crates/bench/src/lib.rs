//! Shared fixtures for the benchmarks.

use adaptsig_core::model::{IntersectionConfig, ObjectiveVector, QueueState};
use adaptsig_core::simulator::ArrivalModel;

/// Default intersection with `links` links.
pub fn intersection(links: usize) -> IntersectionConfig {
    IntersectionConfig::with_links(links)
}

/// A skewed snapshot: link 0 carries about four times the others.
pub fn skewed_queue(links: usize) -> QueueState {
    let motorized = (0..links).map(|i| if i == 0 { 40 } else { 10 + i as u64 }).collect();
    let non_motorized = (0..links).map(|i| if i == 0 { 16 } else { 4 }).collect();
    QueueState::new(motorized, non_motorized).expect("equal lengths")
}

pub fn skewed_demand(links: usize) -> ArrivalModel {
    ArrivalModel {
        motorized: (0..links).map(|i| if i == 0 { 0.08 } else { 0.02 }).collect(),
        non_motorized: (0..links).map(|i| if i == 0 { 0.04 } else { 0.01 }).collect(),
    }
}

/// `n` objective vectors scattered by a small LCG, with plenty of ties.
pub fn scattered_points(n: usize, seed: u64) -> Vec<ObjectiveVector> {
    let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (x >> 33) % 500
    };
    (0..n).map(|_| ObjectiveVector::new(next(), next())).collect()
}
