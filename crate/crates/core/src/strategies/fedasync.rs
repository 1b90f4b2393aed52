use log::warn;
use serde::{Deserialize, Serialize};

use super::{check_len, ConnectOutcome, GroundStationProtocol, StrategyError};
use crate::learning::ParamVector;
use crate::orbital::ContactPlan;

/// Staleness weighting of late updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Staleness {
    /// `s = 1` for every update.
    None,
    /// Hinged decay over the wall-clock age of the model an update was
    /// trained from; flat up to `(1 + epsilon) * t_max` seconds.
    Hinged { epsilon: f64, a: f64, t_max: f64 },
}

impl Staleness {
    pub fn weight(&self, age_s: f64) -> f64 {
        match *self {
            Staleness::None => 1.0,
            Staleness::Hinged { epsilon, a, t_max } => hinged_staleness(age_s, epsilon, a, t_max),
        }
    }
}

/// `1` for `delta_t <= (1+eps) t_max`, else `1 / (1 + a (delta_t - (1+eps) t_max))`.
pub fn hinged_staleness(delta_t: f64, epsilon: f64, a: f64, t_max: f64) -> f64 {
    let hinge = (1.0 + epsilon) * t_max;
    if delta_t <= hinge {
        1.0
    } else {
        1.0 / (1.0 + a * (delta_t - hinge))
    }
}

/// FedAsync: every arriving update is mixed into the global model.
#[derive(Debug, Clone)]
pub struct FedAsyncState {
    epoch: u64,
    global: ParamVector,
    base_mix: f64,
    staleness: Staleness,
    schedule_threshold: f64,
    /// Wall time at which each epoch's model was produced.
    epoch_times: Vec<f64>,
}

impl FedAsyncState {
    pub fn new(
        initial: ParamVector,
        base_mix: f64,
        staleness: Staleness,
        schedule_threshold: f64,
        start_time: f64,
    ) -> Self {
        assert!(
            base_mix > 0.0 && base_mix <= 1.0,
            "base mixing factor must lie in (0, 1]"
        );
        Self {
            epoch: 0,
            global: initial.with_epoch(0),
            base_mix,
            staleness,
            schedule_threshold,
            epoch_times: vec![start_time],
        }
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn global(&self) -> &ParamVector {
        &self.global
    }

    pub fn epoch_time(&self, epoch: u64) -> Option<f64> {
        self.epoch_times.get(epoch as usize).copied()
    }

    /// `alpha' * s(t_now - t_tag)` for an update trained from epoch `tag`.
    pub fn mixing_factor(&self, tag: u64, wall_time: f64) -> Result<f64, StrategyError> {
        let produced = self.epoch_time(tag).filter(|_| tag <= self.epoch).ok_or(
            StrategyError::StalenessInconsistency {
                tag,
                epoch: self.epoch,
            },
        )?;
        Ok(self.base_mix * self.staleness.weight(wall_time - produced))
    }
}

/// `theta <- (1 - alpha) theta + alpha theta_k`, then `epoch += 1`.
pub fn fedasync_update<'a>(
    state: &'a mut FedAsyncState,
    delivered: &ParamVector,
    wall_time: f64,
) -> Result<&'a ParamVector, StrategyError> {
    check_len(state.global.len(), delivered)?;
    let alpha = state.mixing_factor(delivered.source_epoch, wall_time)?;
    for (g, &u) in state.global.values.iter_mut().zip(&delivered.values) {
        *g = (1.0 - alpha) * *g + alpha * u;
    }
    state.epoch += 1;
    state.global.source_epoch = state.epoch;
    state.epoch_times.push(wall_time);
    Ok(&state.global)
}

/// Whether `satellite_id` should receive a new task now.
///
/// The update it would return arrives at its next pass; if the mixing factor
/// predicted for that arrival is below the threshold the task is skipped.
/// A zero threshold never skips.
pub fn schedule_fedasync(
    satellite_id: u32,
    wall_time: f64,
    state: &FedAsyncState,
    plan: &ContactPlan,
) -> bool {
    if state.schedule_threshold <= 0.0 {
        return true;
    }
    let Some(next_pass) = plan.next_rise_after(satellite_id, wall_time) else {
        return false;
    };
    match state.mixing_factor(state.epoch, next_pass) {
        Ok(alpha) => alpha >= state.schedule_threshold,
        Err(_) => false,
    }
}

impl GroundStationProtocol for FedAsyncState {
    fn name(&self) -> &'static str {
        "fedasync"
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
        plan: &ContactPlan,
    ) -> ConnectOutcome {
        let mut outcome = ConnectOutcome::default();
        if let Some(update) = delivered {
            match fedasync_update(self, &update, wall_time) {
                Ok(_) => {
                    outcome.received = true;
                    outcome.global_changed = true;
                }
                Err(e) => {
                    warn!("fedasync: satellite {satellite_id}: {e}");
                    outcome.rejected = Some(e);
                }
            }
        }
        if schedule_fedasync(satellite_id, wall_time, self, plan) {
            outcome.sent = Some(self.global.clone());
        }
        outcome
    }
}
