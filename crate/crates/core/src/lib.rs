//! Ground-assisted federated learning in LEO satellite constellations.
//!
//! * [`orbital`] generates Walker Delta constellations and predicts the
//!   contact windows between satellites and a ground station.
//! * [`learning`] holds the logistic-regression model, datasets and the
//!   worker SGD procedure.
//! * [`strategies`] implements the ground-station side: synchronous FedAvg,
//!   FedAsync with hinged staleness, and FedSat (incremental FedAvg).
//! * [`simulator`] drives a strategy through the contact windows of a
//!   scenario with a discrete-event loop and records test metrics.
//! * [`config`] and [`cli`] parse scenario files and expose the `satfl`
//!   command-line tool.
//!
//! The `examples/` directory has one runnable program per capability.

pub mod cli;
pub mod config;
pub mod learning;
pub mod orbital;
pub mod simulator;
pub mod strategies;

pub use config::ScenarioConfig;
pub use learning::{Dataset, ParamVector, TrainConfig};
pub use orbital::{ContactWindow, GroundStation, SatelliteSpec, WalkerSpec};
pub use simulator::{run, MetricsRecord, SimOutcome};
