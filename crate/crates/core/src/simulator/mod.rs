//! Discrete-event simulation of the satellite / ground-station protocol.
//!
//! Contact windows come from [`crate::orbital`]. A satellite connects at
//! the start of each pass unless it is still computing, uploads its last
//! unsent result, and starts local training whenever the strategy hands it
//! a model. Results become transmittable when the computation finishes; a
//! satellite that finishes during the pass in which it received its task
//! reconnects immediately.
//! The ground station serves one connection at a time in event order.

mod events;
mod metrics;

use std::collections::BTreeMap;
use std::io::{self, Write};

use log::{debug, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learning::{
    evaluate, local_train, param_count, Dataset, LearningError, ParamVector, TrainConfig,
};
use crate::orbital::{ContactPlan, GroundStation, OrbitalError, SatelliteSpec};
use crate::strategies::{
    FedAsyncState, FedAvgState, FedSatState, GroundStationProtocol, SchedulePolicy, Staleness,
    StrategyError,
};

pub use events::{EventKind, EventQueue, SimEvent};
pub use metrics::{
    format_sig6, metrics_csv_string, write_metrics_csv, MetricsRecord, METRICS_HEADER,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Orbital(#[from] OrbitalError),
    #[error(transparent)]
    Learning(#[from] LearningError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

/// When a satellite's local computation finishes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum ComputePolicy {
    /// Results are ready at the end of the pass in which the model arrived.
    #[default]
    Immediate,
    /// Computation takes a fixed time, counted from the end of that pass.
    Fixed { duration_s: f64 },
}

/// Completion time of a task received during a pass ending at `contact_end`.
pub fn compute_done_time(
    contact_end: f64,
    next_contact_start: Option<f64>,
    policy: &ComputePolicy,
) -> f64 {
    match *policy {
        ComputePolicy::Immediate => contact_end,
        ComputePolicy::Fixed { duration_s } => {
            let done = contact_end + duration_s;
            if let Some(next) = next_contact_start {
                if done > next {
                    warn!(
                        "computation of {duration_s} s exceeds the revisit gap of {} s; \
                         the result misses the start of the next pass",
                        next - contact_end
                    );
                }
            }
            done
        }
    }
}

/// Ground-station strategy with its resolved parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum StrategySetup {
    FedAvg {
        schedule: SchedulePolicy,
    },
    FedAsync {
        base_mix: f64,
        staleness: Staleness,
        schedule_threshold: f64,
    },
    FedSat,
}

impl StrategySetup {
    pub fn name(&self) -> &'static str {
        match self {
            StrategySetup::FedAvg { .. } => "fedavg",
            StrategySetup::FedAsync { .. } => "fedasync",
            StrategySetup::FedSat => "fedsat",
        }
    }

    fn build(
        &self,
        initial: ParamVector,
        sample_counts: &BTreeMap<u32, usize>,
    ) -> Result<Box<dyn GroundStationProtocol>, SimError> {
        Ok(match self {
            StrategySetup::FedAvg { schedule } => Box::new(FedAvgState::new(
                initial,
                sample_counts.clone(),
                schedule.clone(),
                0.0,
            )?),
            StrategySetup::FedAsync {
                base_mix,
                staleness,
                schedule_threshold,
            } => {
                if !(*base_mix > 0.0 && *base_mix <= 1.0) {
                    return Err(SimError::InvalidScenario(format!(
                        "fedasync mixing factor {base_mix} outside (0, 1]"
                    )));
                }
                Box::new(FedAsyncState::new(
                    initial,
                    *base_mix,
                    *staleness,
                    *schedule_threshold,
                    0.0,
                ))
            }
            StrategySetup::FedSat => {
                Box::new(FedSatState::from_sample_counts(initial, sample_counts))
            }
        })
    }
}

/// Everything a simulation run needs, already loaded and partitioned.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub ground_station: GroundStation,
    /// `(satellite, shell index)`.
    pub satellites: Vec<(SatelliteSpec, u32)>,
    pub local_data: BTreeMap<u32, Dataset>,
    pub test_data: Dataset,
    pub training: TrainConfig,
    pub strategy: StrategySetup,
    pub horizon_s: f64,
    pub seed: u64,
    pub compute: ComputePolicy,
    /// Fixed latency of one connection; zero means instantaneous exchanges.
    pub exchange_delay_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolAction {
    ContactStart,
    ContactEnd,
    /// The satellite skipped a pass start because it was still computing.
    Busy,
    Upload {
        accepted: bool,
    },
    GlobalUpdate,
    Download,
    ComputeDone,
}

impl ProtocolAction {
    pub fn label(&self) -> &'static str {
        match self {
            ProtocolAction::ContactStart => "contact_start",
            ProtocolAction::ContactEnd => "contact_end",
            ProtocolAction::Busy => "busy",
            ProtocolAction::Upload { accepted: true } => "upload",
            ProtocolAction::Upload { accepted: false } => "upload_rejected",
            ProtocolAction::GlobalUpdate => "global_update",
            ProtocolAction::Download => "download",
            ProtocolAction::ComputeDone => "compute_done",
        }
    }
}

/// One line of the protocol audit log.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolEvent {
    pub time: f64,
    pub satellite_id: u32,
    pub action: ProtocolAction,
    /// Server epoch after the action.
    pub epoch: u64,
    /// Epoch tag of the model moved by an upload or download.
    pub tag: Option<u64>,
}

pub const EVENT_LOG_HEADER: &str = "time_s,satellite,action,epoch,tag";

pub fn write_event_log<W: Write>(events: &[ProtocolEvent], mut out: W) -> io::Result<()> {
    writeln!(out, "{EVENT_LOG_HEADER}")?;
    for e in events {
        let tag = e.tag.map(|t| t.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{:.3},{},{},{},{}",
            e.time,
            e.satellite_id,
            e.action.label(),
            e.epoch,
            tag
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub strategy: &'static str,
    pub records: Vec<MetricsRecord>,
    pub events: Vec<ProtocolEvent>,
    pub plan: ContactPlan,
    pub final_model: ParamVector,
}

impl SimOutcome {
    pub fn final_accuracy(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.test_accuracy)
    }

    pub fn metrics_csv(&self) -> String {
        metrics_csv_string(&self.records)
    }

    /// Wall times at which the global model changed.
    pub fn update_times(&self) -> Vec<f64> {
        self.records.iter().skip(1).map(|r| r.wall_time).collect()
    }
}

/// Worker-side protocol state of one satellite.
#[derive(Debug)]
struct SatelliteRuntime {
    dataset: Dataset,
    rng: ChaCha8Rng,
    /// Latest finished result and whether it was already uploaded.
    pending_result: Option<ParamVector>,
    sent: bool,
    /// Result under computation and its completion time.
    current_task: Option<(ParamVector, f64)>,
    in_contact: bool,
    /// An exchange already took place during the current pass.
    exchanged_this_pass: bool,
}

struct Engine<'a> {
    scenario: &'a Scenario,
    plan: ContactPlan,
    server: Box<dyn GroundStationProtocol>,
    sats: BTreeMap<u32, SatelliteRuntime>,
    queue: EventQueue,
    records: Vec<MetricsRecord>,
    events: Vec<ProtocolEvent>,
}

impl Engine<'_> {
    fn log(&mut self, time: f64, satellite_id: u32, action: ProtocolAction, tag: Option<u64>) {
        self.events.push(ProtocolEvent {
            time,
            satellite_id,
            action,
            epoch: self.server.epoch(),
            tag,
        });
    }

    fn record(&mut self, wall_time: f64) -> Result<(), SimError> {
        let eval = evaluate(self.server.global(), &self.scenario.test_data)?;
        self.records.push(MetricsRecord {
            wall_time,
            global_epoch: self.server.epoch(),
            test_accuracy: eval.accuracy,
            test_loss: eval.loss,
            strategy: self.server.name().to_string(),
        });
        Ok(())
    }

    fn connect(&mut self, id: u32, t: f64) -> Result<(), SimError> {
        let Some(window) = self.plan.window_at(id, t).copied() else {
            return Ok(());
        };
        let t = t + self.scenario.exchange_delay_s;
        if t > window.set_time {
            debug!("satellite {id}: pass too short for an exchange");
            return Ok(());
        }
        let rt = self.sats.get_mut(&id).expect("known satellite");
        rt.exchanged_this_pass = true;
        let delivered = match (&rt.pending_result, rt.sent) {
            (Some(result), false) => {
                rt.sent = true;
                Some(result.clone())
            }
            _ => None,
        };
        let upload_tag = delivered.as_ref().map(|d| d.source_epoch);
        let outcome = self.server.on_connect(id, delivered, t, &self.plan);
        if let Some(tag) = upload_tag {
            self.log(
                t,
                id,
                ProtocolAction::Upload {
                    accepted: outcome.received,
                },
                Some(tag),
            );
        }
        if outcome.global_changed {
            self.log(t, id, ProtocolAction::GlobalUpdate, None);
            self.record(t)?;
        }
        if let Some(model) = outcome.sent {
            let tag = model.source_epoch;
            self.log(t, id, ProtocolAction::Download, Some(tag));
            let rt = self.sats.get_mut(&id).expect("known satellite");
            let result = local_train(
                &model,
                tag,
                &rt.dataset,
                &self.scenario.training,
                &mut rt.rng,
            )?;
            let next = self.plan.next_rise_after(id, window.set_time);
            let done = compute_done_time(window.set_time, next, &self.scenario.compute).max(t);
            rt.current_task = Some((result, done));
            if done <= self.scenario.horizon_s {
                self.queue.push(SimEvent {
                    time: done,
                    kind: EventKind::ComputeDone,
                    satellite_id: id,
                });
            }
        }
        Ok(())
    }

    fn handle(&mut self, event: SimEvent) -> Result<(), SimError> {
        let id = event.satellite_id;
        let t = event.time;
        match event.kind {
            EventKind::ContactStart => {
                self.log(t, id, ProtocolAction::ContactStart, None);
                let rt = self.sats.get_mut(&id).expect("known satellite");
                rt.in_contact = true;
                rt.exchanged_this_pass = false;
                if rt.current_task.is_some() {
                    self.log(t, id, ProtocolAction::Busy, None);
                } else {
                    self.connect(id, t)?;
                }
            }
            EventKind::ContactEnd => {
                self.sats.get_mut(&id).expect("known satellite").in_contact = false;
                self.log(t, id, ProtocolAction::ContactEnd, None);
            }
            EventKind::ComputeDone => {
                let rt = self.sats.get_mut(&id).expect("known satellite");
                let (result, _) = rt.current_task.take().expect("a running task");
                let tag = result.source_epoch;
                rt.pending_result = Some(result);
                rt.sent = false;
                // A result that overruns into a pass it skipped waits for the next one.
                let reconnect = rt.in_contact && rt.exchanged_this_pass;
                self.log(t, id, ProtocolAction::ComputeDone, Some(tag));
                if reconnect {
                    self.connect(id, t)?;
                }
            }
        }
        Ok(())
    }
}

fn validate(s: &Scenario) -> Result<(), SimError> {
    let bad = |m: String| Err(SimError::InvalidScenario(m));
    if !(s.horizon_s.is_finite() && s.horizon_s > 0.0) {
        return bad(format!("horizon {} s must be positive", s.horizon_s));
    }
    if !(s.exchange_delay_s.is_finite() && s.exchange_delay_s >= 0.0) {
        return bad("exchange delay must be finite and non-negative".into());
    }
    if let ComputePolicy::Fixed { duration_s } = s.compute {
        if !(duration_s.is_finite() && duration_s >= 0.0) {
            return bad("compute duration must be finite and non-negative".into());
        }
    }
    s.ground_station.validate()?;
    s.training.validate()?;
    for (sat, _) in &s.satellites {
        sat.validate()?;
        let Some(data) = s.local_data.get(&sat.id) else {
            return bad(format!("satellite {} has no local dataset", sat.id));
        };
        if data.dim() != s.test_data.dim() || data.class_count() != s.test_data.class_count() {
            return bad(format!(
                "satellite {} data shape differs from the test set",
                sat.id
            ));
        }
    }
    Ok(())
}

/// Runs a fully resolved scenario.
pub fn simulate(scenario: &Scenario) -> Result<SimOutcome, SimError> {
    validate(scenario)?;
    let specs: Vec<SatelliteSpec> = scenario.satellites.iter().map(|(s, _)| *s).collect();
    let plan = ContactPlan::compute(&scenario.ground_station, &specs, 0.0, scenario.horizon_s)?;
    let d = param_count(scenario.test_data.dim(), scenario.test_data.class_count());
    let sample_counts: BTreeMap<u32, usize> = specs
        .iter()
        .map(|s| (s.id, scenario.local_data[&s.id].len()))
        .collect();
    let server = scenario
        .strategy
        .build(ParamVector::zeros(d), &sample_counts)?;

    let sats = specs
        .iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
            rng.set_stream(s.id as u64);
            let rt = SatelliteRuntime {
                dataset: scenario.local_data[&s.id].clone(),
                rng,
                pending_result: None,
                sent: false,
                current_task: None,
                in_contact: false,
                exchanged_this_pass: false,
            };
            (s.id, rt)
        })
        .collect();

    let mut queue = EventQueue::new();
    for w in plan.iter() {
        queue.push(SimEvent {
            time: w.rise_time,
            kind: EventKind::ContactStart,
            satellite_id: w.satellite_id,
        });
        queue.push(SimEvent {
            time: w.set_time,
            kind: EventKind::ContactEnd,
            satellite_id: w.satellite_id,
        });
    }

    let mut engine = Engine {
        scenario,
        plan,
        server,
        sats,
        queue,
        records: Vec::new(),
        events: Vec::new(),
    };
    engine.record(0.0)?;
    while let Some(event) = engine.queue.pop() {
        if event.time > scenario.horizon_s {
            break;
        }
        engine.handle(event)?;
    }
    Ok(SimOutcome {
        strategy: engine.server.name(),
        final_model: engine.server.global().clone(),
        records: engine.records,
        events: engine.events,
        plan: engine.plan,
    })
}

/// Loads, partitions and simulates a scenario configuration.
pub fn run(
    config: &crate::config::ScenarioConfig,
) -> Result<SimOutcome, crate::config::ConfigError> {
    let scenario = config.build_scenario()?;
    Ok(simulate(&scenario)?)
}

#[cfg(test)]
mod tests;
