//! One self-describing run configuration, loaded from TOML.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::FieldParams;
use crate::scene::SceneConfig;
use crate::sim::{AgentModel, RolloutConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Every knob of a run. Missing keys take their defaults; unknown keys are
/// errors.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub field: FieldParams,
    pub agent: AgentModel,
    pub scene: SceneConfig,
    pub rollout: RolloutConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The full effective configuration, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.field.validate().map_err(|e| inv(&e))?;
        self.agent.validate().map_err(|e| inv(&e))?;
        self.scene.validate().map_err(|e| inv(&e))?;
        self.rollout.validate().map_err(|e| inv(&e))?;
        Ok(())
    }
}
