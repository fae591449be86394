//! One-second queue simulation.

use std::collections::VecDeque;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_plan, IntersectionConfig, LinkId, Phase, QueueState, SignalPlan};
use crate::seed;

use super::arrivals::{ArrivalModel, ArrivalStream};
use super::controller::Controller;
use super::emergency::{apply_emergency_reorder, EmergencyEvent, EmergencyOutcome};

/// Interval `[start_s, end_s)` in which nothing discharges, e.g. a
/// pedestrian crossing or a road closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blackout {
    pub start_s: u64,
    pub end_s: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimOptions {
    /// Age of the queue snapshot handed to the controller.
    pub sensing_latency_s: u64,
    /// Probability that each waiting vehicle is seen by the detector.
    pub detection_prob: f64,
    pub guidance_pad_s: u32,
    pub initial_queue: Option<QueueState>,
    pub emergencies: Vec<EmergencyEvent>,
    pub blackouts: Vec<Blackout>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            sensing_latency_s: 2,
            detection_prob: 1.0,
            guidance_pad_s: 0,
            initial_queue: None,
            emergencies: Vec::new(),
            blackouts: Vec::new(),
        }
    }
}

impl SimOptions {
    pub fn validate(&self, cfg: &IntersectionConfig) -> Result<()> {
        if !(0.0..=1.0).contains(&self.detection_prob) {
            return Err(Error::Validation(format!(
                "detection_prob {} outside [0, 1]",
                self.detection_prob
            )));
        }
        if let Some(q) = &self.initial_queue {
            q.check_dims(cfg.num_links)?;
        }
        for ev in &self.emergencies {
            cfg.check_link(ev.link)?;
        }
        if let Some(b) = self.blackouts.iter().find(|b| b.start_s >= b.end_s) {
            return Err(Error::Validation(format!(
                "blackout [{}, {}) is empty",
                b.start_s, b.end_s
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalState {
    Green,
    /// Guidance pad before or after a green; vehicles still move.
    Guidance,
    InterGreen,
}

impl SignalState {
    pub fn as_str(self) -> &'static str {
        match self {
            SignalState::Green => "green",
            SignalState::Guidance => "guidance",
            SignalState::InterGreen => "inter_green",
        }
    }
}

/// Everything that happened in one simulated second.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecondRecord {
    pub t: u64,
    pub active: Option<LinkId>,
    pub state: SignalState,
    pub arrivals: QueueState,
    pub discharged: QueueState,
    /// Queues at the end of the second.
    pub queue: QueueState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub initial: QueueState,
    pub seconds: Vec<SecondRecord>,
}

impl SimTrace {
    /// Columns: `t`, one total queue column per link, `active`, `state`.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        let n = self.initial.num_links();
        let mut header = String::from("t");
        for i in 0..n {
            header.push_str(&format!(",q{i}"));
        }
        header.push_str(",active,state");
        writeln!(out, "{header}")?;
        for rec in &self.seconds {
            let mut line = rec.t.to_string();
            for i in 0..n {
                line.push(',');
                line.push_str(&rec.queue.total(i).to_string());
            }
            line.push(',');
            if let Some(l) = rec.active {
                line.push_str(&l.0.to_string());
            }
            line.push(',');
            line.push_str(rec.state.as_str());
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

/// Waiting-vehicle statistics over every simulated second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub max_waiting_per_link: Vec<u64>,
    pub avg_waiting_per_link: Vec<f64>,
    pub overall_max: u64,
    /// Mean of the per-link averages.
    pub overall_avg: f64,
    pub throughput_total: u64,
    pub arrivals_total: u64,
    pub initial_queue_total: u64,
    pub final_queue_total: u64,
    pub cycles: u64,
    pub time_horizon_s: u64,
}

impl SimMetrics {
    pub fn from_trace(trace: &SimTrace, cycles: u64) -> Self {
        let n = trace.initial.num_links();
        let mut max = vec![0u64; n];
        let mut sum = vec![0u64; n];
        let mut throughput = 0;
        let mut arrivals = 0;
        for rec in &trace.seconds {
            for i in 0..n {
                let q = rec.queue.total(i);
                max[i] = max[i].max(q);
                sum[i] += q;
            }
            throughput += rec.discharged.total_vehicles();
            arrivals += rec.arrivals.total_vehicles();
        }
        let secs = trace.seconds.len();
        let avg: Vec<f64> = sum
            .iter()
            .map(|&s| if secs == 0 { 0.0 } else { s as f64 / secs as f64 })
            .collect();
        Self {
            overall_max: max.iter().copied().max().unwrap_or(0),
            overall_avg: if n == 0 { 0.0 } else { avg.iter().sum::<f64>() / n as f64 },
            max_waiting_per_link: max,
            avg_waiting_per_link: avg,
            throughput_total: throughput,
            arrivals_total: arrivals,
            initial_queue_total: trace.initial.total_vehicles(),
            final_queue_total: trace
                .seconds
                .last()
                .map_or(trace.initial.total_vehicles(), |r| r.queue.total_vehicles()),
            cycles,
            time_horizon_s: secs as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub metrics: SimMetrics,
    pub trace: SimTrace,
    /// Plan requested at the start of every cycle, before any emergency reorder.
    pub plans: Vec<SignalPlan>,
    pub emergencies: Vec<EmergencyOutcome>,
}

struct Engine<'a> {
    cfg: &'a IntersectionConfig,
    opts: &'a SimOptions,
    horizon: u64,
    t: u64,
    queue: QueueState,
    history: Vec<QueueState>,
    arrivals: ArrivalStream,
    obs_rng: ChaCha8Rng,
    trace: Vec<SecondRecord>,
    events: Vec<EmergencyEvent>,
    next_event: usize,
    outcomes: Vec<EmergencyOutcome>,
}

impl Engine<'_> {
    fn observe(&mut self) -> QueueState {
        let at = self.t.saturating_sub(self.opts.sensing_latency_s) as usize;
        let mut seen = self.history.get(at).unwrap_or(&self.queue).clone();
        seen.timestamp_ms = at as u64 * 1000;
        let p = self.opts.detection_prob;
        if p < 1.0 {
            for count in seen.motorized.iter_mut().chain(seen.non_motorized.iter_mut()) {
                *count = Binomial::new(*count, p).map_or(0, |b| b.sample(&mut self.obs_rng));
            }
        }
        seen
    }

    fn blacked_out(&self) -> bool {
        self.opts
            .blackouts
            .iter()
            .any(|b| (b.start_s..b.end_s).contains(&self.t))
    }

    /// Emergency events firing at the current second.
    fn due_events(&mut self) -> Vec<EmergencyEvent> {
        let mut due = Vec::new();
        while let Some(ev) = self.events.get(self.next_event) {
            if ev.time_s > self.t {
                break;
            }
            if ev.time_s == self.t {
                due.push(*ev);
            }
            self.next_event += 1;
        }
        due
    }

    /// Advances one second. `service` is the link holding right of way and
    /// how many seconds of its service have elapsed including this one.
    fn step(&mut self, service: Option<(LinkId, u64)>, state: SignalState) {
        let n = self.cfg.num_links;
        self.history.push(self.queue.clone());
        let mut arrivals = QueueState::zeros(n);
        self.arrivals
            .next_second(&mut arrivals.motorized, &mut arrivals.non_motorized);
        for i in 0..n {
            self.queue.motorized[i] += arrivals.motorized[i];
            self.queue.non_motorized[i] += arrivals.non_motorized[i];
        }
        let mut discharged = QueueState::zeros(n);
        if let Some((link, k)) = service {
            if !self.blacked_out() {
                let i = link.0;
                let step = |flow: crate::model::SaturationFlow| flow.capacity(k) - flow.capacity(k - 1);
                let dm = step(self.cfg.sat_flow_motorized).min(self.queue.motorized[i]);
                let dn = step(self.cfg.sat_flow_non_motorized).min(self.queue.non_motorized[i]);
                self.queue.motorized[i] -= dm;
                self.queue.non_motorized[i] -= dn;
                discharged.motorized[i] = dm;
                discharged.non_motorized[i] = dn;
            }
            for out in &mut self.outcomes {
                if out.service_start_s.is_none() && out.event.link == link {
                    out.service_start_s = Some(self.t);
                }
            }
        }
        let mut queue = self.queue.clone();
        queue.timestamp_ms = (self.t + 1) * 1000;
        self.trace.push(SecondRecord {
            t: self.t,
            active: service.map(|(l, _)| l),
            state,
            arrivals,
            discharged,
            queue,
        });
        self.t += 1;
    }

    fn done(&self) -> bool {
        self.t >= self.horizon
    }

    fn run_cycle(&mut self, plan: SignalPlan) {
        let ig = plan.inter_green_s as u64;
        let pad = plan.guidance_pad_s as u64;
        let mut current = plan;
        let mut remaining: VecDeque<Phase> = current.phases.iter().copied().collect();
        let after = |plan: &SignalPlan, link: LinkId| -> VecDeque<Phase> {
            let pos = plan.phases.iter().position(|p| p.link == link).unwrap_or(0);
            plan.phases[pos + 1..].iter().copied().collect()
        };
        while let Some(phase) = remaining.pop_front() {
            let service = current.service_s(&phase);
            for k in 0..service {
                if self.done() {
                    return;
                }
                for ev in self.due_events() {
                    self.outcomes.push(EmergencyOutcome {
                        event: ev,
                        active: Some(phase.link),
                        bound_s: service - k + ig,
                        service_start_s: None,
                    });
                    if ev.link != phase.link {
                        current = apply_emergency_reorder(&current, ev.link, Some(phase.link));
                        remaining = after(&current, phase.link);
                    }
                }
                let state = if k < pad || k >= service - pad {
                    SignalState::Guidance
                } else {
                    SignalState::Green
                };
                self.step(Some((phase.link, k + 1)), state);
            }
            for _ in 0..ig {
                if self.done() {
                    return;
                }
                for ev in self.due_events() {
                    self.outcomes.push(EmergencyOutcome {
                        event: ev,
                        active: Some(phase.link),
                        bound_s: ig,
                        service_start_s: None,
                    });
                    if ev.link == phase.link {
                        // its green just ended: serve it once more right away
                        let again = *current.phase_for(ev.link).unwrap_or(&phase);
                        remaining.push_front(again);
                    } else {
                        current = apply_emergency_reorder(&current, ev.link, Some(phase.link));
                        remaining = after(&current, phase.link);
                    }
                }
                self.step(None, SignalState::InterGreen);
            }
        }
    }
}

/// Simulates `horizon_s` seconds of `controller` against Poisson demand.
///
/// Each second, arrivals join their link first and then the link holding
/// right of way discharges at its saturation flows. The controller is asked
/// for a plan at every cycle boundary.
pub fn simulate(
    cfg: &IntersectionConfig,
    demand: &ArrivalModel,
    controller: &mut dyn Controller,
    horizon_s: u64,
    options: &SimOptions,
    seed: u64,
) -> Result<SimRun> {
    cfg.validate()?;
    demand.validate(cfg.num_links)?;
    options.validate(cfg)?;
    if horizon_s == 0 {
        return Err(Error::Validation("horizon_s must be > 0".into()));
    }
    let initial = options
        .initial_queue
        .clone()
        .unwrap_or_else(|| QueueState::zeros(cfg.num_links));
    let mut events = options.emergencies.clone();
    events.sort_by_key(|e| e.time_s);
    let mut engine = Engine {
        cfg,
        opts: options,
        horizon: horizon_s,
        t: 0,
        queue: initial.clone(),
        history: Vec::with_capacity(horizon_s as usize),
        arrivals: ArrivalStream::new(demand, seed),
        obs_rng: ChaCha8Rng::seed_from_u64(seed::derive(seed, &[0x4F])),
        trace: Vec::with_capacity(horizon_s as usize),
        events,
        next_event: 0,
        outcomes: Vec::new(),
    };
    let mut plans = Vec::new();
    while !engine.done() {
        let observed = engine.observe();
        let plan = controller
            .next_plan(&observed, plans.len() as u64)?
            .with_guidance_pad(options.guidance_pad_s);
        validate_plan(&plan, cfg).map_err(Error::InvalidPlan)?;
        if plans.is_empty() && horizon_s < plan.cycle_length_s() {
            return Err(Error::Validation(format!(
                "horizon of {horizon_s} s is shorter than the first cycle ({} s)",
                plan.cycle_length_s()
            )));
        }
        plans.push(plan.clone());
        engine.run_cycle(plan);
    }
    let trace = SimTrace {
        initial,
        seconds: engine.trace,
    };
    Ok(SimRun {
        metrics: SimMetrics::from_trace(&trace, plans.len() as u64),
        trace,
        plans,
        emergencies: engine.outcomes,
    })
}
