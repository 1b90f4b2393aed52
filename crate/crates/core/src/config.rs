//! TOML scenario files.
//!
//! Angles are given in degrees here and converted to radians exactly once,
//! when the configuration is resolved into a [`Scenario`]. Relative data
//! paths are looked up under `$SATFL_DATA_DIR`, or `./data` when unset.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learning::{
    load_idx, partition, Dataset, LearningError, PartitionSpec, SyntheticBlobs, TrainConfig,
};
use crate::orbital::{
    generate_walker, orbital_period, GroundStation, OrbitalError, SatelliteSpec, WalkerSpec,
    EARTH_RADIUS_KM,
};
use crate::simulator::{ComputePolicy, Scenario, SimError, StrategySetup};
use crate::strategies::{SchedulePolicy, Staleness};

pub const DATA_DIR_ENV: &str = "SATFL_DATA_DIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize configuration: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("data file not found: {0}")]
    MissingData(PathBuf),
    #[error(transparent)]
    Orbital(#[from] OrbitalError),
    #[error(transparent)]
    Learning(#[from] LearningError),
    #[error(transparent)]
    Simulation(#[from] SimError),
}

/// One Walker Delta shell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellConfig {
    pub total_sats: u32,
    pub planes: u32,
    pub phasing: u32,
    pub inclination_deg: f64,
    pub altitude_km: f64,
    pub raan_offset_deg: f64,
}

impl ShellConfig {
    pub fn to_walker(&self) -> WalkerSpec {
        WalkerSpec {
            total_sats: self.total_sats,
            planes: self.planes,
            phasing: self.phasing,
            inclination: self.inclination_deg.to_radians(),
            altitude_km: self.altitude_km,
            raan_offset: self.raan_offset_deg.to_radians(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStationConfig {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_km: f64,
    pub min_elevation_deg: f64,
}

impl GroundStationConfig {
    pub fn to_ground_station(&self) -> GroundStation {
        GroundStation {
            latitude: self.latitude_deg.to_radians(),
            longitude: self.longitude_deg.to_radians(),
            altitude_km: self.altitude_km,
            min_elevation: self.min_elevation_deg.to_radians(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    /// MNIST-style IDX files.
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
    },
    /// Gaussian blobs, one per class.
    Synthetic {
        classes: usize,
        dim: usize,
        train_per_class: usize,
        test_per_class: usize,
        separation: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    #[serde(flatten)]
    pub source: DataSource,
    pub partition: PartitionSpec,
}

/// How the staleness constant `a` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StalenessScale {
    Preset(ScalePreset),
    /// Raw value in 1/s.
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalePreset {
    /// `a = 5 (1 + epsilon) t_max`, used as a number per second.
    PaperVerbatim,
    /// `a = 1 / (5 (1 + epsilon) t_max)`.
    Reciprocal,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StalenessConfig {
    #[default]
    None,
    Hinged {
        epsilon: f64,
        a: StalenessScale,
        /// Defaults to the longest orbital period of the constellation.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_max_s: Option<f64>,
    },
}

impl StalenessConfig {
    pub fn resolve(&self, constellation_t_max: f64) -> Result<Staleness, ConfigError> {
        Ok(match *self {
            StalenessConfig::None => Staleness::None,
            StalenessConfig::Hinged {
                epsilon,
                a,
                t_max_s,
            } => {
                let t_max = t_max_s.unwrap_or(constellation_t_max);
                if !(epsilon >= 0.0 && t_max > 0.0) {
                    return Err(ConfigError::Invalid(
                        "staleness needs epsilon >= 0 and a positive t_max".into(),
                    ));
                }
                let scale = 5.0 * (1.0 + epsilon) * t_max;
                let a = match a {
                    StalenessScale::Preset(ScalePreset::PaperVerbatim) => scale,
                    StalenessScale::Preset(ScalePreset::Reciprocal) => 1.0 / scale,
                    StalenessScale::Value(v) => v,
                };
                if !(a.is_finite() && a > 0.0) {
                    return Err(ConfigError::Invalid(format!(
                        "staleness constant a = {a} must be positive"
                    )));
                }
                Staleness::Hinged { epsilon, a, t_max }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StrategyConfig {
    Fedavg {
        #[serde(default)]
        schedule: SchedulePolicy,
    },
    Fedasync {
        alpha: f64,
        #[serde(default)]
        staleness: StalenessConfig,
        #[serde(default)]
        schedule_threshold: f64,
        /// Replaces `training.learning_rate` for this strategy.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        learning_rate: Option<f64>,
    },
    Fedsat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub horizon_s: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_log: Option<PathBuf>,
    #[serde(default)]
    pub compute: ComputePolicy,
    #[serde(default)]
    pub exchange_delay_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub constellation: Vec<ShellConfig>,
    pub ground_station: GroundStationConfig,
    pub data: DataConfig,
    pub training: TrainConfig,
    pub strategy: StrategyConfig,
    pub simulation: SimulationConfig,
}

/// Data directory from the environment, or `./data`.
pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    /// Checks everything that does not need the data files.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        for (i, shell) in self.constellation.iter().enumerate() {
            if shell.altitude_km <= 0.0 || !shell.altitude_km.is_finite() {
                return invalid(format!("shell {i}: altitude must be positive"));
            }
        }
        self.ground_station.to_ground_station().validate()?;
        self.training.validate()?;
        let sim = &self.simulation;
        if !(sim.horizon_s.is_finite() && sim.horizon_s > 0.0) {
            return invalid(format!("horizon_s = {} must be positive", sim.horizon_s));
        }
        if let StrategyConfig::Fedasync {
            alpha,
            schedule_threshold,
            learning_rate,
            ..
        } = &self.strategy
        {
            if !(*alpha > 0.0 && *alpha <= 1.0) {
                return invalid(format!("fedasync alpha = {alpha} outside (0, 1]"));
            }
            if schedule_threshold.is_nan() || *schedule_threshold < 0.0 {
                return invalid("schedule_threshold must be non-negative".into());
            }
            if let Some(lr) = learning_rate {
                if !(lr.is_finite() && *lr > 0.0) {
                    return invalid(format!("fedasync learning_rate = {lr} must be positive"));
                }
            }
        }
        if let DataSource::Synthetic {
            classes,
            dim,
            train_per_class,
            test_per_class,
            separation,
            ..
        } = &self.data.source
        {
            if *classes < 2 || *dim == 0 || *train_per_class == 0 || *test_per_class == 0 {
                return invalid("synthetic data needs >= 2 classes and non-empty sets".into());
            }
            if !(separation.is_finite() && *separation > 0.0) {
                return invalid("synthetic separation must be positive".into());
            }
        }
        Ok(())
    }

    /// Satellites of all shells, numbered consecutively, with their shell index.
    pub fn satellites(&self) -> Result<Vec<(SatelliteSpec, u32)>, ConfigError> {
        let mut out = Vec::new();
        for (shell, cfg) in self.constellation.iter().enumerate() {
            let base = out.len() as u32;
            for sat in generate_walker(&cfg.to_walker(), base)? {
                out.push((sat, shell as u32));
            }
        }
        Ok(out)
    }

    /// Longest orbital period in the constellation.
    pub fn max_period_s(&self) -> Result<f64, ConfigError> {
        let mut t_max = 0.0f64;
        for shell in &self.constellation {
            t_max = t_max.max(orbital_period(EARTH_RADIUS_KM + shell.altitude_km)?);
        }
        Ok(t_max)
    }

    /// Training and test sets; relative paths are taken under `data_dir`.
    pub fn load_data(&self, data_dir: &Path) -> Result<(Dataset, Dataset), ConfigError> {
        match &self.data.source {
            DataSource::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
            } => {
                let resolve = |p: &PathBuf| {
                    let full = if p.is_absolute() {
                        p.clone()
                    } else {
                        data_dir.join(p)
                    };
                    if full.is_file() {
                        Ok(full)
                    } else {
                        Err(ConfigError::MissingData(full))
                    }
                };
                let train = load_idx(&resolve(train_images)?, &resolve(train_labels)?)?;
                let test = load_idx(&resolve(test_images)?, &resolve(test_labels)?)?;
                if train.dim() != test.dim() {
                    return Err(ConfigError::Invalid(
                        "train and test feature sizes differ".into(),
                    ));
                }
                Ok((train, test))
            }
            DataSource::Synthetic {
                classes,
                dim,
                train_per_class,
                test_per_class,
                separation,
                seed,
            } => {
                let blobs = SyntheticBlobs::new(*classes, *dim, *separation, *seed);
                Ok((
                    blobs.sample(*train_per_class, 0)?,
                    blobs.sample(*test_per_class, 1)?,
                ))
            }
        }
    }

    /// Local datasets keyed by satellite id.
    pub fn partition_data(
        &self,
        train: &Dataset,
        satellites: &[(SatelliteSpec, u32)],
    ) -> Result<BTreeMap<u32, Dataset>, ConfigError> {
        let ids: Vec<(u32, u32)> = satellites.iter().map(|(s, shell)| (s.id, *shell)).collect();
        Ok(partition(train, &ids, &self.data.partition)?)
    }

    pub fn strategy_setup(&self) -> Result<(StrategySetup, TrainConfig), ConfigError> {
        let mut training = self.training;
        let setup = match &self.strategy {
            StrategyConfig::Fedavg { schedule } => StrategySetup::FedAvg {
                schedule: schedule.clone(),
            },
            StrategyConfig::Fedasync {
                alpha,
                staleness,
                schedule_threshold,
                learning_rate,
            } => {
                if let Some(lr) = learning_rate {
                    training.learning_rate = *lr;
                }
                StrategySetup::FedAsync {
                    base_mix: *alpha,
                    staleness: staleness.resolve(self.max_period_s()?)?,
                    schedule_threshold: *schedule_threshold,
                }
            }
            StrategyConfig::Fedsat => StrategySetup::FedSat,
        };
        Ok((setup, training))
    }

    /// Resolves the configuration using [`data_dir`].
    pub fn build_scenario(&self) -> Result<Scenario, ConfigError> {
        self.build_scenario_in(&data_dir())
    }

    pub fn build_scenario_in(&self, data_dir: &Path) -> Result<Scenario, ConfigError> {
        self.validate()?;
        let satellites = self.satellites()?;
        let (strategy, training) = self.strategy_setup()?;
        let (train, test_data) = self.load_data(data_dir)?;
        let local_data = self.partition_data(&train, &satellites)?;
        Ok(Scenario {
            ground_station: self.ground_station.to_ground_station(),
            satellites,
            local_data,
            test_data,
            training,
            strategy,
            horizon_s: self.simulation.horizon_s,
            seed: self.simulation.seed,
            compute: self.simulation.compute,
            exchange_delay_s: self.simulation.exchange_delay_s,
        })
    }
}
