//! Scenario files: one versioned JSON document describing the network, the
//! devices, their environment and the coordinator.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coordinator::{DEFAULT_HYSTERESIS_C, DEFAULT_OFFLINE_MULTIPLIER};
use crate::end_device::DeviceConfig;
use crate::network::sim::{EnvPoint, EnvProfile, Outage, Scenario, SimDevice};
use crate::network::topology::{build_topology, NodeSpec, Role, DEFAULT_MAX_RANGE_M};
use crate::network::RadioModel;
use crate::{NodeAddr, SimTime};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the config used when `--config` is omitted.
pub const CONFIG_ENV: &str = "DTMS_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: u32,
    pub seed: u64,
    pub duration_s: f64,
    pub topology: TopologyConfig,
    #[serde(default)]
    pub radio: RadioModel,
    pub devices: Vec<DeviceConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub environment: Vec<DeviceEnvironment>,
    #[serde(default)]
    pub coordinator: CoordinatorSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    #[serde(default = "default_range")]
    pub max_range_m: f64,
    pub nodes: Vec<NodeSpec>,
}

fn default_range() -> f64 {
    DEFAULT_MAX_RANGE_M
}

/// What one device's sensors see over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceEnvironment {
    pub device: NodeAddr,
    #[serde(default)]
    pub profile: Vec<EnvPoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outages: Vec<Outage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordinatorSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reading_log: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alarm_log: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(default = "default_hysteresis")]
    pub hysteresis_c: f64,
    #[serde(default = "default_multiplier")]
    pub offline_multiplier: f64,
}

fn default_hysteresis() -> f64 {
    DEFAULT_HYSTERESIS_C
}
fn default_multiplier() -> f64 {
    DEFAULT_OFFLINE_MULTIPLIER
}

impl Default for CoordinatorSection {
    fn default() -> Self {
        Self {
            reading_log: None,
            alarm_log: None,
            trace: None,
            hysteresis_c: DEFAULT_HYSTERESIS_C,
            offline_multiplier: DEFAULT_OFFLINE_MULTIPLIER,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}", Diagnostics(.0))]
    Invalid(Vec<FieldError>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub reason: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

struct Diagnostics<'a>(&'a [FieldError]);

impl fmt::Display for Diagnostics<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// A parsed config and the directory its relative paths are resolved against.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }
}

pub fn load(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let config = ScenarioConfig::parse(&text).map_err(|e| match e {
        ConfigError::Parse {
            line,
            column,
            message,
            ..
        } => ConfigError::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message,
        },
        other => other,
    })?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig { config, base_dir })
}

impl ScenarioConfig {
    /// Parses without semantic validation.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::from("<config>"),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    /// Every semantic problem, each tagged with a field path.
    pub fn check(&self, base_dir: &Path) -> Vec<FieldError> {
        let mut errs = Vec::new();
        let mut err = |field: String, reason: String| errs.push(FieldError { field, reason });
        if self.schema != SCHEMA_VERSION {
            err(
                "schema".into(),
                format!(
                    "unsupported version {} (expected {SCHEMA_VERSION})",
                    self.schema
                ),
            );
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            err("duration_s".into(), "must be positive".into());
        }
        if let Err(e) = self.radio.validate() {
            err("radio".into(), e);
        }
        let topology = build_topology(&self.topology.nodes, self.topology.max_range_m);
        if let Err(e) = &topology {
            err("topology".into(), e.to_string());
        }
        let mut seen = BTreeSet::new();
        for (i, d) in self.devices.iter().enumerate() {
            let at = format!("devices[{i}]");
            if !seen.insert(d.addr) {
                err(
                    format!("{at}.addr"),
                    format!("device {} listed twice", d.addr),
                );
            }
            match self.topology.nodes.iter().find(|n| n.addr == d.addr) {
                None => err(
                    format!("{at}.addr"),
                    format!("{} is not a topology node", d.addr),
                ),
                Some(n) if n.role != Role::EndDevice => err(
                    format!("{at}.addr"),
                    format!("{} is a {:?}, not an end device", d.addr, n.role),
                ),
                Some(_) => {}
            }
            if let Err(e) = d.validate() {
                err(at.clone(), e.to_string());
                continue;
            }
            if let Some(p) = &d.calibration {
                let full = base_dir.join(p);
                if !full.is_file() {
                    err(
                        format!("{at}.calibration"),
                        format!("{} does not exist", full.display()),
                    );
                    continue;
                }
            }
            if let Err(e) = d.calibration_table(base_dir) {
                err(format!("{at}.calibration"), e.to_string());
            }
        }
        let mut env_seen = BTreeSet::new();
        for (i, e) in self.environment.iter().enumerate() {
            let at = format!("environment[{i}]");
            if !seen.contains(&e.device) {
                err(
                    format!("{at}.device"),
                    format!("{} is not a configured device", e.device),
                );
            }
            if !env_seen.insert(e.device) {
                err(
                    format!("{at}.device"),
                    format!("{} has two environment entries", e.device),
                );
            }
            for (j, p) in e.profile.iter().enumerate() {
                if ![p.t_s, p.temp_c, p.oil_level_mm]
                    .iter()
                    .all(|v| v.is_finite())
                {
                    err(format!("{at}.profile[{j}]"), "values must be finite".into());
                }
            }
            for (j, o) in e.outages.iter().enumerate() {
                if !(o.from_s.is_finite() && o.to_s.is_finite() && o.from_s <= o.to_s) {
                    err(
                        format!("{at}.outages[{j}]"),
                        "need finite from_s <= to_s".into(),
                    );
                }
            }
        }
        let c = &self.coordinator;
        if !(c.hysteresis_c.is_finite() && c.hysteresis_c >= 0.0) {
            err(
                "coordinator.hysteresis_c".into(),
                "must be non-negative".into(),
            );
        }
        if !(c.offline_multiplier.is_finite() && c.offline_multiplier > 0.0) {
            err(
                "coordinator.offline_multiplier".into(),
                "must be positive".into(),
            );
        }
        errs
    }

    /// Validates and builds the runnable scenario.
    pub fn to_scenario(&self, base_dir: &Path) -> Result<Scenario, ConfigError> {
        let errs = self.check(base_dir);
        if !errs.is_empty() {
            return Err(ConfigError::Invalid(errs));
        }
        let invalid = |field: &str, reason: String| {
            ConfigError::Invalid(vec![FieldError {
                field: field.into(),
                reason,
            }])
        };
        let topology = build_topology(&self.topology.nodes, self.topology.max_range_m)
            .map_err(|e| invalid("topology", e.to_string()))?;
        let devices = self
            .devices
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let table = d
                    .calibration_table(base_dir)
                    .map_err(|e| invalid(&format!("devices[{i}].calibration"), e.to_string()))?;
                let env = self.environment.iter().find(|e| e.device == d.addr);
                Ok(SimDevice {
                    config: d.clone(),
                    table,
                    environment: env
                        .map(|e| EnvProfile::new(e.profile.clone()))
                        .unwrap_or_default(),
                    outages: env.map(|e| e.outages.clone()).unwrap_or_default(),
                })
            })
            .collect::<Result<_, ConfigError>>()?;
        Ok(Scenario {
            topology,
            radio: self.radio,
            devices,
            hysteresis_c: self.coordinator.hysteresis_c,
            offline_multiplier: self.coordinator.offline_multiplier,
            duration: SimTime::from_secs_f64(self.duration_s),
            seed: self.seed,
        })
    }

    /// Single coordinator, single end device 500 m away.
    pub fn minimal(device: NodeAddr) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            seed: 0,
            duration_s: 600.0,
            topology: TopologyConfig {
                max_range_m: DEFAULT_MAX_RANGE_M,
                nodes: vec![
                    NodeSpec::new(0, Role::Coordinator, 0.0, 0.0),
                    NodeSpec::new(device.0, Role::EndDevice, 500.0, 0.0),
                ],
            },
            radio: RadioModel::default(),
            devices: vec![DeviceConfig::new(device)],
            environment: Vec::new(),
            coordinator: CoordinatorSection::default(),
        }
    }
}
