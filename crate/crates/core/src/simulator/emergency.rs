//! Priority service for emergency vehicles.

use serde::{Deserialize, Serialize};

use crate::model::{LinkId, SignalPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmergencyEvent {
    pub time_s: u64,
    pub link: LinkId,
}

/// Moves the phase serving `link` to right after the phase of `active`, or
/// to the front when nothing is active. Durations are untouched.
pub fn apply_emergency_reorder(plan: &SignalPlan, link: LinkId, active: Option<LinkId>) -> SignalPlan {
    let mut out = plan.clone();
    if Some(link) == active {
        return out;
    }
    let Some(from) = out.phases.iter().position(|p| p.link == link) else {
        return out;
    };
    let phase = out.phases.remove(from);
    let to = match active.and_then(|a| out.phases.iter().position(|p| p.link == a)) {
        Some(a) => a + 1,
        None => 0,
    };
    out.phases.insert(to, phase);
    out
}

/// What happened to one emergency event during a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmergencyOutcome {
    pub event: EmergencyEvent,
    /// Link holding right of way (or whose service just ended) when the event fired.
    pub active: Option<LinkId>,
    /// Worst-case wait: remaining service of the active phase plus one inter-green.
    pub bound_s: u64,
    /// First second at which `event.link` held right of way, if within the horizon.
    pub service_start_s: Option<u64>,
}

impl EmergencyOutcome {
    pub fn wait_s(&self) -> Option<u64> {
        self.service_start_s.map(|s| s - self.event.time_s)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn order(plan: &SignalPlan) -> Vec<usize> {
        plan.phases.iter().map(|p| p.link.0).collect()
    }

    fn plan(links: &[usize]) -> SignalPlan {
        let mut p = SignalPlan::in_link_order(&vec![10; links.len()], 3);
        for (phase, &l) in p.phases.iter_mut().zip(links) {
            phase.link = LinkId(l);
            phase.green_s = 10 + l as u32;
        }
        p
    }

    #[test]
    fn moves_link_after_active() {
        let p = plan(&[0, 1, 2, 3, 4]);
        let out = apply_emergency_reorder(&p, LinkId(3), Some(LinkId(0)));
        assert_eq!(order(&out), vec![0, 3, 1, 2, 4]);
        assert_eq!(out.phase_for(LinkId(3)).unwrap().green_s, 13);
    }

    #[test]
    fn already_next_is_unchanged() {
        let p = plan(&[0, 1, 2]);
        assert_eq!(apply_emergency_reorder(&p, LinkId(1), Some(LinkId(0))), p);
    }

    #[test]
    fn single_phase_is_unchanged() {
        let p = plan(&[0]);
        assert_eq!(apply_emergency_reorder(&p, LinkId(0), None), p);
    }

    #[test]
    fn no_active_moves_to_front() {
        let p = plan(&[0, 1, 2]);
        assert_eq!(order(&apply_emergency_reorder(&p, LinkId(2), None)), vec![2, 0, 1]);
    }

    #[test]
    fn earlier_link_moves_behind_active() {
        let p = plan(&[0, 1, 2, 3, 4]);
        let out = apply_emergency_reorder(&p, LinkId(1), Some(LinkId(3)));
        assert_eq!(order(&out), vec![0, 2, 3, 1, 4]);
    }

    proptest! {
        #[test]
        fn reorder_is_a_permutation_with_link_after_active(
            perm in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle(),
            link in 0..6usize,
            active in proptest::option::of(0..6usize),
        ) {
            let p = plan(&perm);
            let out = apply_emergency_reorder(&p, LinkId(link), active.map(LinkId));
            let mut a = p.phases.clone();
            let mut b = out.phases.clone();
            a.sort_by_key(|x| x.link);
            b.sort_by_key(|x| x.link);
            prop_assert_eq!(a, b);
            let pos = |l: usize| out.phases.iter().position(|x| x.link.0 == l).unwrap();
            match active {
                Some(a) if a != link => prop_assert_eq!(pos(link), pos(a) + 1),
                Some(_) => prop_assert_eq!(&out, &p),
                None => prop_assert_eq!(pos(link), 0),
            }
        }
    }
}
