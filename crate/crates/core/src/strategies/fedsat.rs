use std::collections::BTreeMap;

use log::warn;

use super::{check_len, ConnectOutcome, GroundStationProtocol, StrategyError};
use crate::learning::ParamVector;
use crate::orbital::ContactPlan;

/// FedSat: FedAvg unrolled into per-contact increments.
///
/// The server keeps the last update delivered by every satellite. A new
/// delivery replaces that satellite's share of the running weighted average:
/// `global += alpha_k * (new - previous)`. With every cache entry starting
/// at the initial model and `sum(alpha_k) = 1`, one delivery per satellite
/// yields exactly the synchronous weighted average.
#[derive(Debug, Clone)]
pub struct FedSatState {
    epoch: u64,
    global: ParamVector,
    last_update: BTreeMap<u32, Vec<f64>>,
    weights: BTreeMap<u32, f64>,
}

impl FedSatState {
    /// `weights` maps each satellite to `alpha_k = n_k / n`.
    pub fn new(initial: ParamVector, weights: BTreeMap<u32, f64>) -> Self {
        let last_update = weights
            .keys()
            .map(|&id| (id, initial.values.clone()))
            .collect();
        Self {
            epoch: 0,
            global: initial.with_epoch(0),
            last_update,
            weights,
        }
    }

    /// Weights `n_k / n` from local dataset sizes.
    pub fn from_sample_counts(initial: ParamVector, counts: &BTreeMap<u32, usize>) -> Self {
        let total: usize = counts.values().sum();
        let weights = counts
            .iter()
            .map(|(&id, &n)| (id, n as f64 / total as f64))
            .collect();
        Self::new(initial, weights)
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn global(&self) -> &ParamVector {
        &self.global
    }

    pub fn weights(&self) -> &BTreeMap<u32, f64> {
        &self.weights
    }

    pub fn last_update(&self, satellite_id: u32) -> Option<&[f64]> {
        self.last_update.get(&satellite_id).map(Vec::as_slice)
    }
}

/// Incorporates one delivery and advances the epoch.
pub fn fedsat_update<'a>(
    state: &'a mut FedSatState,
    satellite_id: u32,
    delivered: &ParamVector,
) -> Result<&'a ParamVector, StrategyError> {
    check_len(state.global.len(), delivered)?;
    let alpha = *state
        .weights
        .get(&satellite_id)
        .ok_or(StrategyError::UnknownSatellite(satellite_id))?;
    let previous = state
        .last_update
        .get_mut(&satellite_id)
        .ok_or(StrategyError::UnknownSatellite(satellite_id))?;
    for ((g, prev), &new) in state
        .global
        .values
        .iter_mut()
        .zip(previous.iter_mut())
        .zip(&delivered.values)
    {
        *g += alpha * (new - *prev);
        *prev = new;
    }
    state.epoch += 1;
    state.global.source_epoch = state.epoch;
    Ok(&state.global)
}

impl GroundStationProtocol for FedSatState {
    fn name(&self) -> &'static str {
        "fedsat"
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
        _wall_time: f64,
        _plan: &ContactPlan,
    ) -> ConnectOutcome {
        let mut outcome = ConnectOutcome::default();
        if let Some(update) = delivered {
            match fedsat_update(self, satellite_id, &update) {
                Ok(_) => {
                    outcome.received = true;
                    outcome.global_changed = true;
                }
                Err(e) => {
                    warn!("fedsat: {e}");
                    outcome.rejected = Some(e);
                }
            }
        }
        // Full participation: every known satellite keeps computing.
        if self.weights.contains_key(&satellite_id) {
            outcome.sent = Some(self.global.clone());
        }
        outcome
    }
}
