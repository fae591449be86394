//! Stochastic demand.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Poisson arrival rates in vehicles per second, per link and class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalModel {
    pub motorized: Vec<f64>,
    pub non_motorized: Vec<f64>,
}

impl ArrivalModel {
    pub fn uniform(num_links: usize, motorized: f64, non_motorized: f64) -> Self {
        Self {
            motorized: vec![motorized; num_links],
            non_motorized: vec![non_motorized; num_links],
        }
    }

    pub fn zero(num_links: usize) -> Self {
        Self::uniform(num_links, 0.0, 0.0)
    }

    pub fn num_links(&self) -> usize {
        self.motorized.len()
    }

    pub fn validate(&self, num_links: usize) -> Result<()> {
        for len in [self.motorized.len(), self.non_motorized.len()] {
            if len != num_links {
                return Err(Error::DimensionMismatch {
                    expected: num_links,
                    found: len,
                });
            }
        }
        if let Some(bad) = self
            .motorized
            .iter()
            .chain(&self.non_motorized)
            .find(|r| !(r.is_finite() && **r >= 0.0))
        {
            return Err(Error::Validation(format!(
                "arrival rates must be finite and >= 0, got {bad}"
            )));
        }
        Ok(())
    }
}

/// Per-second arrival counts drawn in a fixed order, so every controller run
/// with the same seed sees the same vehicles.
pub struct ArrivalStream {
    rng: ChaCha8Rng,
    motorized: Vec<Option<Poisson<f64>>>,
    non_motorized: Vec<Option<Poisson<f64>>>,
}

fn laws(rates: &[f64]) -> Vec<Option<Poisson<f64>>> {
    rates
        .iter()
        .map(|&r| if r > 0.0 { Poisson::new(r).ok() } else { None })
        .collect()
}

impl ArrivalStream {
    pub fn new(model: &ArrivalModel, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed::derive(seed, &[0x41])),
            motorized: laws(&model.motorized),
            non_motorized: laws(&model.non_motorized),
        }
    }

    /// Arrivals during the next second: `(motorized, non_motorized)` per link.
    pub fn next_second(&mut self, motorized: &mut [u64], non_motorized: &mut [u64]) {
        for i in 0..self.motorized.len() {
            motorized[i] = self.motorized[i]
                .map_or(0, |p| p.sample(&mut self.rng) as u64);
            non_motorized[i] = self.non_motorized[i]
                .map_or(0, |p| p.sample(&mut self.rng) as u64);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draw(model: &ArrivalModel, seed: u64, secs: usize) -> Vec<u64> {
        let n = model.num_links();
        let mut s = ArrivalStream::new(model, seed);
        let (mut m, mut nm) = (vec![0; n], vec![0; n]);
        let mut out = Vec::new();
        for _ in 0..secs {
            s.next_second(&mut m, &mut nm);
            out.extend(&m);
            out.extend(&nm);
        }
        out
    }

    #[test]
    fn same_seed_same_sequence() {
        let model = ArrivalModel::uniform(3, 0.4, 0.2);
        assert_eq!(draw(&model, 5, 200), draw(&model, 5, 200));
        assert_ne!(draw(&model, 5, 200), draw(&model, 6, 200));
    }

    #[test]
    fn zero_rate_never_arrives() {
        let model = ArrivalModel::zero(2);
        assert!(draw(&model, 1, 500).iter().all(|&c| c == 0));
    }

    #[test]
    fn empirical_rate_matches() {
        let model = ArrivalModel {
            motorized: vec![0.3, 0.0],
            non_motorized: vec![0.0, 0.1],
        };
        let n = 20_000;
        let mut s = ArrivalStream::new(&model, 9);
        let (mut m, mut nm) = (vec![0; 2], vec![0; 2]);
        let (mut tm, mut tnm) = (0u64, 0u64);
        for _ in 0..n {
            s.next_second(&mut m, &mut nm);
            tm += m[0];
            tnm += nm[1];
            assert_eq!(m[1] + nm[0], 0);
        }
        // 5 standard deviations of a Poisson total
        let tol = |rate: f64| 5.0 * (rate * n as f64).sqrt();
        assert!((tm as f64 - 0.3 * n as f64).abs() < tol(0.3));
        assert!((tnm as f64 - 0.1 * n as f64).abs() < tol(0.1));
    }

    #[test]
    fn negative_rate_is_rejected() {
        let model = ArrivalModel {
            motorized: vec![0.1, -0.1],
            non_motorized: vec![0.0, 0.0],
        };
        assert!(model.validate(2).is_err());
        assert!(ArrivalModel::zero(3).validate(2).is_err());
    }
}
