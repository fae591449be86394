//! Picking one plan to execute from a Pareto front.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SignalPlan;

use super::{Individual, ParetoFront};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    /// Closest member to the ideal point in range-normalized objective space.
    #[default]
    Knee,
    /// Minimum of `w1 * f1_norm + w2 * f2_norm`.
    Weighted(f64, f64),
    MinF1,
    MinF2,
}

impl fmt::Display for SelectionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionPolicy::Knee => write!(f, "knee"),
            SelectionPolicy::Weighted(w1, w2) => write!(f, "weighted({w1},{w2})"),
            SelectionPolicy::MinF1 => write!(f, "min_f1"),
            SelectionPolicy::MinF2 => write!(f, "min_f2"),
        }
    }
}

impl FromStr for SelectionPolicy {
    type Err = String;

    /// Accepts `knee`, `min_f1`, `min_f2`, `weighted` (0.5/0.5) and `weighted:W1,W2`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "knee" => Ok(Self::Knee),
            "min_f1" => Ok(Self::MinF1),
            "min_f2" => Ok(Self::MinF2),
            "weighted" => Ok(Self::Weighted(0.5, 0.5)),
            other => {
                let weights = other
                    .strip_prefix("weighted:")
                    .ok_or_else(|| format!("unknown policy `{other}`"))?;
                let (w1, w2) = weights
                    .split_once(',')
                    .ok_or_else(|| format!("expected weighted:W1,W2, got `{other}`"))?;
                let parse = |w: &str| {
                    w.trim()
                        .parse::<f64>()
                        .map_err(|e| format!("bad weight `{w}`: {e}"))
                };
                Ok(Self::Weighted(parse(w1)?, parse(w2)?))
            }
        }
    }
}

/// Deterministic tie-break: lower f1, then lower f2, then lexicographic genome.
fn tie_break(a: &Individual, b: &Individual) -> Ordering {
    a.objectives
        .f1
        .cmp(&b.objectives.f1)
        .then(a.objectives.f2.cmp(&b.objectives.f2))
        .then_with(|| a.genome.0.cmp(&b.genome.0))
}

/// Index of the member chosen by `policy`.
pub fn select_index(members: &[Individual], policy: SelectionPolicy) -> Result<usize> {
    if members.is_empty() {
        return Err(Error::EmptyFront);
    }
    let bounds = |get: fn(&Individual) -> u64| {
        let lo = members.iter().map(get).min().unwrap();
        let hi = members.iter().map(get).max().unwrap();
        (lo, hi)
    };
    let (f1_lo, f1_hi) = bounds(|m| m.objectives.f1);
    let (f2_lo, f2_hi) = bounds(|m| m.objectives.f2);
    let norm = |v: u64, lo: u64, hi: u64| {
        if hi == lo {
            0.0
        } else {
            (v - lo) as f64 / (hi - lo) as f64
        }
    };
    let score = |m: &Individual| -> f64 {
        let n1 = norm(m.objectives.f1, f1_lo, f1_hi);
        let n2 = norm(m.objectives.f2, f2_lo, f2_hi);
        match policy {
            SelectionPolicy::Knee => (n1 * n1 + n2 * n2).sqrt(),
            SelectionPolicy::Weighted(w1, w2) => w1 * n1 + w2 * n2,
            SelectionPolicy::MinF1 => m.objectives.f1 as f64,
            SelectionPolicy::MinF2 => m.objectives.f2 as f64,
        }
    };

    let best = (0..members.len())
        .min_by(|&a, &b| {
            score(&members[a])
                .total_cmp(&score(&members[b]))
                .then_with(|| tie_break(&members[a], &members[b]))
        })
        .unwrap();
    Ok(best)
}

/// The plan (in link order) of the member chosen by `policy`.
pub fn select_operating_point(front: &ParetoFront, policy: SelectionPolicy) -> Result<SignalPlan> {
    let idx = select_index(&front.members, policy)?;
    Ok(front.plan_for(idx))
}
