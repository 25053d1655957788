use std::path::Path;

use metaregion::seir::{IsolationPolicy, SimConfig};
use metaregion::{data::Dataset, Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    None,
    Constant,
    Actual,
}

/// Scenario file. Command-line `--seed-week` and `--horizon` win over the
/// values given here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub policy: PolicyMode,
    /// Isolation level for the `constant` policy.
    pub level: Option<f64>,
    /// Optional constant levels for an end-of-horizon sweep.
    #[serde(default)]
    pub levels: Vec<f64>,
    pub horizon: Option<usize>,
    pub seed_week: Option<usize>,
    pub r0: Option<f64>,
    pub seed_fraction: Option<f64>,
    pub incubation_offset: Option<usize>,
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let s: Scenario = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        match (s.policy, s.level) {
            (PolicyMode::Constant, None) => {
                return Err(Error::Config("level is required for the constant policy".into()))
            }
            (PolicyMode::Constant, Some(l)) if !(0.0..=1.0).contains(&l) => {
                return Err(Error::Config(format!("level {l} outside [0,1]")))
            }
            (PolicyMode::None | PolicyMode::Actual, Some(_)) => {
                return Err(Error::Config("level is only valid with the constant policy".into()))
            }
            _ => {}
        }
        if let Some(l) = s.levels.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(Error::Config(format!("levels: {l} outside [0,1]")));
        }
        Ok(s)
    }

    pub fn sim_config(&self, horizon: Option<usize>) -> Result<SimConfig> {
        let d = SimConfig::default();
        let config = SimConfig {
            r0: self.r0.unwrap_or(d.r0),
            horizon: horizon.or(self.horizon).unwrap_or(d.horizon),
            seed_fraction: self.seed_fraction.unwrap_or(d.seed_fraction),
            incubation_offset: self.incubation_offset.unwrap_or(d.incubation_offset),
            ..d
        };
        config.validate()?;
        Ok(config)
    }

    pub fn policy(&self, dataset: &Dataset, seed_week: usize) -> Result<IsolationPolicy> {
        match self.policy {
            PolicyMode::None => Ok(IsolationPolicy::None),
            PolicyMode::Constant => IsolationPolicy::constant(self.level.expect("validated on load")),
            PolicyMode::Actual => IsolationPolicy::actual(&dataset.panel, seed_week),
        }
    }
}
