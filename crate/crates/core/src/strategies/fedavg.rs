use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use serde::{Deserialize, Serialize};

use super::{check_len, dataset_weights, ConnectOutcome, GroundStationProtocol, StrategyError};
use crate::learning::ParamVector;
use crate::orbital::ContactPlan;

/// Which satellites take part in a synchronous epoch.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum SchedulePolicy {
    /// Every satellite, every epoch.
    #[default]
    Full,
    /// A fixed subset of satellite ids.
    Subset { satellites: Vec<u32> },
}

/// Workers for the next synchronous epoch.
pub fn schedule_fedavg(
    policy: &SchedulePolicy,
    constellation: &BTreeSet<u32>,
    _wall_time: f64,
) -> Result<BTreeSet<u32>, StrategyError> {
    let chosen: BTreeSet<u32> = match policy {
        SchedulePolicy::Full => constellation.clone(),
        SchedulePolicy::Subset { satellites } => {
            if let Some(bad) = satellites.iter().find(|s| !constellation.contains(s)) {
                return Err(StrategyError::UnknownSatellite(*bad));
            }
            satellites.iter().copied().collect()
        }
    };
    if chosen.is_empty() {
        return Err(StrategyError::EmptySchedule);
    }
    Ok(chosen)
}

/// Synchronous FedAvg over intermittent contacts.
///
/// `to_send` holds scheduled satellites that still need the current model,
/// `to_receive` those whose update is outstanding. The global model only
/// changes once both sets are empty.
#[derive(Debug, Clone)]
pub struct FedAvgState {
    epoch: u64,
    global: ParamVector,
    to_send: BTreeSet<u32>,
    to_receive: BTreeSet<u32>,
    accumulator: Vec<f64>,
    weights: BTreeMap<u32, f64>,
    sample_counts: BTreeMap<u32, usize>,
    policy: SchedulePolicy,
}

impl FedAvgState {
    pub fn new(
        initial: ParamVector,
        sample_counts: BTreeMap<u32, usize>,
        policy: SchedulePolicy,
        wall_time: f64,
    ) -> Result<Self, StrategyError> {
        let d = initial.len();
        let mut state = Self {
            epoch: 0,
            global: initial.with_epoch(0),
            to_send: BTreeSet::new(),
            to_receive: BTreeSet::new(),
            accumulator: vec![0.0; d],
            weights: BTreeMap::new(),
            sample_counts,
            policy,
        };
        state.start_epoch(wall_time)?;
        Ok(state)
    }

    fn start_epoch(&mut self, wall_time: f64) -> Result<(), StrategyError> {
        let all: BTreeSet<u32> = self.sample_counts.keys().copied().collect();
        let scheduled = schedule_fedavg(&self.policy, &all, wall_time)?;
        self.weights = dataset_weights(&self.sample_counts, &scheduled)?;
        self.to_receive = scheduled.clone();
        self.to_send = scheduled;
        self.accumulator.fill(0.0);
        Ok(())
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn global(&self) -> &ParamVector {
        &self.global
    }

    pub fn to_send(&self) -> &BTreeSet<u32> {
        &self.to_send
    }

    pub fn to_receive(&self) -> &BTreeSet<u32> {
        &self.to_receive
    }

    /// Aggregation weights of the current epoch's scheduled set.
    pub fn weights(&self) -> &BTreeMap<u32, f64> {
        &self.weights
    }

    pub fn accumulator(&self) -> &[f64] {
        &self.accumulator
    }
}

/// One connection of the synchronous ground-station loop.
///
/// A delivered update is accepted only from a satellite that already holds
/// the current model and has not returned yet, and only when tagged with the
/// current epoch. When the last outstanding update arrives the aggregate
/// becomes the new global model, the next epoch is scheduled, and the
/// still-connected satellite is served immediately if it was rescheduled.
pub fn fedavg_on_connect(
    state: &mut FedAvgState,
    satellite_id: u32,
    delivered: Option<ParamVector>,
    wall_time: f64,
) -> ConnectOutcome {
    let mut outcome = ConnectOutcome::default();
    if let Some(update) = delivered {
        let awaiting =
            state.to_receive.contains(&satellite_id) && !state.to_send.contains(&satellite_id);
        let verdict = if !awaiting {
            Err(StrategyError::Unscheduled {
                satellite: satellite_id,
                epoch: state.epoch,
            })
        } else if update.source_epoch != state.epoch {
            Err(StrategyError::StaleUpdate {
                satellite: satellite_id,
                tag: update.source_epoch,
                epoch: state.epoch,
            })
        } else {
            check_len(state.accumulator.len(), &update)
        };
        match verdict {
            Ok(()) => {
                let w = state.weights[&satellite_id];
                for (acc, v) in state.accumulator.iter_mut().zip(&update.values) {
                    *acc += w * v;
                }
                state.to_receive.remove(&satellite_id);
                outcome.received = true;
            }
            Err(e) => {
                warn!("fedavg: {e}");
                outcome.rejected = Some(e);
            }
        }
    }

    if outcome.received && state.to_send.is_empty() && state.to_receive.is_empty() {
        state.epoch += 1;
        state.global = ParamVector::new(state.accumulator.clone(), state.epoch);
        outcome.global_changed = true;
        if let Err(e) = state.start_epoch(wall_time) {
            // Only reachable with an inconsistent policy; keep the model and stop scheduling.
            warn!("fedavg: cannot schedule epoch {}: {e}", state.epoch);
        }
    }

    if state.to_send.remove(&satellite_id) {
        outcome.sent = Some(state.global.clone());
    }
    outcome
}

impl GroundStationProtocol for FedAvgState {
    fn name(&self) -> &'static str {
        "fedavg"
    }

    fn epoch(&self) -> u64 {
        self.epoch
    }

    fn global(&self) -> &ParamVector {
        &self.global
    }

    fn on_connect(
        &mut self,
        satellite_id: u32,
        delivered: Option<ParamVector>,
        wall_time: f64,
        _plan: &ContactPlan,
    ) -> ConnectOutcome {
        fedavg_on_connect(self, satellite_id, delivered, wall_time)
    }
}
