//! Ground-station update rules and their connection handlers.
//!
//! Every strategy is driven through [`GroundStationProtocol::on_connect`]:
//! a satellite connects, optionally delivering the result of its last
//! computation, the server folds it into the global model and decides
//! whether the satellite gets a fresh `(global, epoch)` pair to work on.

mod fedasync;
mod fedavg;
mod fedsat;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::learning::ParamVector;
use crate::orbital::ContactPlan;

pub use fedasync::{
    fedasync_update, hinged_staleness, schedule_fedasync, FedAsyncState, Staleness,
};
pub use fedavg::{fedavg_on_connect, schedule_fedavg, FedAvgState, SchedulePolicy};
pub use fedsat::{fedsat_update, FedSatState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("satellite {satellite} is not scheduled in epoch {epoch}; update ignored")]
    Unscheduled { satellite: u32, epoch: u64 },
    #[error("update from satellite {satellite} tagged with epoch {tag}, server is at epoch {epoch}; discarded")]
    StaleUpdate {
        satellite: u32,
        tag: u64,
        epoch: u64,
    },
    #[error("update tagged with future epoch {tag} while server is at epoch {epoch}")]
    StalenessInconsistency { tag: u64, epoch: u64 },
    #[error("unknown satellite {0}")]
    UnknownSatellite(u32),
    #[error("schedule is empty")]
    EmptySchedule,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// What happened during one satellite connection.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConnectOutcome {
    /// The delivered update was incorporated (or accumulated).
    pub received: bool,
    /// The global model changed as a result of this connection.
    pub global_changed: bool,
    /// `(global, epoch)` handed to the satellite for its next computation.
    pub sent: Option<ParamVector>,
    /// Why a delivered update was not used.
    pub rejected: Option<StrategyError>,
}

/// Server-side state machine run by the ground station.
pub trait GroundStationProtocol {
    fn name(&self) -> &'static str;

    /// Current global epoch counter.
    fn epoch(&self) -> u64;

    fn global(&self) -> &ParamVector;

    fn on_connect(
        &mut self,
        satellite_id: u32,
        delivered: Option<ParamVector>,
        wall_time: f64,
        plan: &ContactPlan,
    ) -> ConnectOutcome;
}

/// `n_k / sum(n)` over the given satellites.
pub fn dataset_weights(
    sample_counts: &BTreeMap<u32, usize>,
    ids: &BTreeSet<u32>,
) -> Result<BTreeMap<u32, f64>, StrategyError> {
    let mut total = 0usize;
    for id in ids {
        total += *sample_counts
            .get(id)
            .ok_or(StrategyError::UnknownSatellite(*id))?;
    }
    if total == 0 {
        return Err(StrategyError::EmptySchedule);
    }
    Ok(ids
        .iter()
        .map(|id| (*id, sample_counts[id] as f64 / total as f64))
        .collect())
}

fn check_len(expected: usize, got: &ParamVector) -> Result<(), StrategyError> {
    if got.len() != expected {
        return Err(StrategyError::DimensionMismatch {
            expected,
            got: got.len(),
        });
    }
    Ok(())
}
