//! Per-cycle latency accounting.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

fn mean(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        0.0
    } else {
        samples.iter().sum::<f64>() / samples.len() as f64
    }
}

/// Raw samples and derived totals for one emitted plan. All values in ms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleLatency {
    pub cycle: u64,
    pub extraction_samples_ms: Vec<f64>,
    pub inference_samples_ms: Vec<f64>,
    pub optimization_ms: f64,
    pub t_extraction_ms: f64,
    pub t_inference_ms: f64,
    pub t_latency_ms: f64,
}

impl CycleLatency {
    pub fn new(
        cycle: u64,
        extraction_samples_ms: Vec<f64>,
        inference_samples_ms: Vec<f64>,
        optimization_ms: f64,
    ) -> Self {
        let t_extraction_ms = mean(&extraction_samples_ms);
        let t_inference_ms = mean(&inference_samples_ms);
        Self {
            cycle,
            extraction_samples_ms,
            inference_samples_ms,
            optimization_ms,
            t_extraction_ms,
            t_inference_ms,
            t_latency_ms: t_extraction_ms + t_inference_ms + optimization_ms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub cycles: usize,
    pub mean_extraction_ms: f64,
    pub mean_inference_ms: f64,
    pub mean_optimization_ms: f64,
    /// Mean of the per-cycle end-to-end latencies.
    pub t_latency_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyLedger {
    pub cycles: Vec<CycleLatency>,
}

impl LatencyLedger {
    pub fn push(&mut self, entry: CycleLatency) {
        self.cycles.push(entry);
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn t_latency_ms(&self) -> f64 {
        let per_cycle: Vec<f64> = self.cycles.iter().map(|c| c.t_latency_ms).collect();
        mean(&per_cycle)
    }

    pub fn summary(&self) -> LatencySummary {
        let column = |f: fn(&CycleLatency) -> f64| {
            mean(&self.cycles.iter().map(f).collect::<Vec<_>>())
        };
        LatencySummary {
            cycles: self.cycles.len(),
            mean_extraction_ms: column(|c| c.t_extraction_ms),
            mean_inference_ms: column(|c| c.t_inference_ms),
            mean_optimization_ms: column(|c| c.optimization_ms),
            t_latency_ms: self.t_latency_ms(),
        }
    }

    /// Plain-text table: one row per cycle plus a mean row.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>6} {:>8} {:>8} {:>14} {:>14} {:>16} {:>14}",
            "cycle", "n_ext", "n_inf", "extraction_ms", "inference_ms", "optimization_ms", "latency_ms"
        );
        for c in &self.cycles {
            let _ = writeln!(
                out,
                "{:>6} {:>8} {:>8} {:>14.3} {:>14.3} {:>16.3} {:>14.3}",
                c.cycle,
                c.extraction_samples_ms.len(),
                c.inference_samples_ms.len(),
                c.t_extraction_ms,
                c.t_inference_ms,
                c.optimization_ms,
                c.t_latency_ms
            );
        }
        let s = self.summary();
        let _ = writeln!(
            out,
            "{:>6} {:>8} {:>8} {:>14.3} {:>14.3} {:>16.3} {:>14.3}",
            "mean", "", "", s.mean_extraction_ms, s.mean_inference_ms, s.mean_optimization_ms, s.t_latency_ms
        );
        let _ = writeln!(out, "cycles: {}", s.cycles);
        let _ = writeln!(out, "T_latency_ms: {:.3}", s.t_latency_ms);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_entry_arithmetic() {
        let c = CycleLatency::new(0, vec![10.0, 20.0, 30.0], vec![100.0, 200.0], 500.0);
        assert_eq!(c.t_extraction_ms, 20.0);
        assert_eq!(c.t_inference_ms, 150.0);
        assert_eq!(c.t_latency_ms, 670.0);
    }

    #[test]
    fn run_latency_is_mean_of_cycles() {
        let mut ledger = LatencyLedger::default();
        ledger.push(CycleLatency::new(0, vec![], vec![], 600.0));
        ledger.push(CycleLatency::new(1, vec![], vec![], 800.0));
        assert_eq!(ledger.t_latency_ms(), 700.0);
        assert_eq!(ledger.summary().cycles, 2);
    }

    #[test]
    fn empty_ledger() {
        let ledger = LatencyLedger::default();
        assert_eq!(ledger.t_latency_ms(), 0.0);
        assert!(ledger.render_table().contains("cycles: 0"));
    }

    #[test]
    fn table_has_row_per_cycle() {
        let mut ledger = LatencyLedger::default();
        for i in 0..3 {
            ledger.push(CycleLatency::new(i, vec![1.0], vec![2.0], 3.0));
        }
        let table = ledger.render_table();
        assert_eq!(table.lines().count(), 1 + 3 + 1 + 2);
        assert!(table.contains("T_latency_ms: 6.000"));
    }
}
