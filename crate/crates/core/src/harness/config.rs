use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::allocation::{Algorithm, ObjectiveMode};
use crate::error::{Error, Result};
use crate::population::{AttributeSchema, Population, RotationConfig, UnlockPolicy, WindowStart};
use crate::rdp::{AdpBudget, AlphaGrid};
use crate::workload::{Family, WorkloadConfig};

pub const CONFIG_SCHEMA: &str = "dpplan.config/v1";

/// How request costs reach the blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Accounting {
    /// Amplified cost on every active group, restricted to the predicate.
    #[default]
    Subsampled,
    /// Unamplified cost on a fraction of the groups, whole domain.
    Upc,
}

impl fmt::Display for Accounting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Accounting::Subsampled => "subsampled",
            Accounting::Upc => "upc",
        })
    }
}

impl FromStr for Accounting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "subsampled" | "subsampling" => Ok(Accounting::Subsampled),
            "upc" => Ok(Accounting::Upc),
            other => Err(Error::param(format!("unknown accounting {other:?}"))),
        }
    }
}

/// Size presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Desk,
    Paper,
}

impl FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(Profile::Desk),
            "paper" | "full" => Ok(Profile::Paper),
            other => Err(Error::param(format!("unknown profile {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub schema: String,
    pub workload: WorkloadConfig,
    pub rotation: RotationConfig,
    #[serde(default)]
    pub window_start: WindowStart,
    /// Unlocking slack Δ.
    pub delta_slack: f64,
    pub alphas: Vec<f64>,
    pub global_budget: AdpBudget,
    pub algorithm: Algorithm,
    pub accounting: Accounting,
    pub objective: ObjectiveMode,
    /// Exact-solver limit per round.
    pub time_limit_seconds: f64,
    /// Seeds run by replicated simulations.
    pub seeds: Vec<u64>,
}

impl SimulationConfig {
    pub fn new(workload: WorkloadConfig) -> Self {
        SimulationConfig {
            schema: CONFIG_SCHEMA.to_string(),
            workload,
            rotation: RotationConfig {
                window_k: 12,
                assignment_horizon_t: 12,
            },
            window_start: WindowStart::Warm,
            delta_slack: 0.4,
            alphas: AlphaGrid::standard().orders().to_vec(),
            global_budget: AdpBudget {
                epsilon: 3.0,
                delta: 1e-7,
            },
            algorithm: Algorithm::Dpk,
            accounting: Accounting::Subsampled,
            objective: ObjectiveMode::Utility,
            time_limit_seconds: 60.0,
            seeds: (0..5).collect(),
        }
    }

    pub fn profile(profile: Profile, family: Family) -> Self {
        match profile {
            Profile::Desk => SimulationConfig::new(WorkloadConfig::desk(family, 0)),
            Profile::Paper => SimulationConfig::new(crate::workload::build_workload(family, 0)),
        }
    }

    pub fn desk(family: Family) -> Self {
        Self::profile(Profile::Desk, family)
    }

    pub fn grid(&self) -> Result<AlphaGrid> {
        AlphaGrid::new(self.alphas.clone())
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(Error::Schema {
                expected: CONFIG_SCHEMA.into(),
                found: self.schema.clone(),
            });
        }
        self.workload.validate()?;
        self.rotation.validate()?;
        self.global_budget.validate()?;
        let policy = self.unlock_policy()?;
        policy.validate()?;
        if !(self.time_limit_seconds > 0.0) {
            return Err(Error::Config("time limit must be > 0".into()));
        }
        Ok(())
    }

    pub fn unlock_policy(&self) -> Result<UnlockPolicy> {
        UnlockPolicy::from_adp(self.delta_slack, self.rotation.window_k, &self.global_budget, &self.grid()?)
    }

    pub fn population(&self) -> Result<Population> {
        Population::with_start(
            AttributeSchema::new(self.workload.domain_size)?,
            self.rotation,
            self.unlock_policy()?,
            self.window_start,
        )
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.workload.seed = seed;
        c
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: SimulationConfig = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let c = SimulationConfig::desk(Family::W2);
        c.validate().unwrap();
        let text = c.to_toml().unwrap();
        assert!(text.contains("dpplan.config/v1"));
        assert_eq!(SimulationConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn wrong_schema_is_refused() {
        let mut c = SimulationConfig::desk(Family::W1);
        c.schema = "dpplan.config/v0".into();
        let text = c.to_toml().unwrap();
        assert!(matches!(SimulationConfig::from_toml(&text), Err(Error::Schema { .. })));
    }

    #[test]
    fn inconsistent_window_is_refused() {
        let mut c = SimulationConfig::desk(Family::W1);
        c.rotation.window_k = 5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn parsing_enums() {
        assert_eq!("UPC".parse::<Accounting>().unwrap(), Accounting::Upc);
        assert_eq!("desk".parse::<Profile>().unwrap(), Profile::Desk);
        assert!("tiny".parse::<Profile>().is_err());
    }
}
