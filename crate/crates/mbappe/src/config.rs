//! Planner configuration file (TOML).
//!
//! ```toml
//! predictor = "scripted"
//! replan_every = 5
//!
//! [search]
//! n_simulations = 256
//! c_puct = 2.0
//!
//! [reward]
//! off_route = -0.5
//!
//! [ablation]
//! use_learned_prior = false
//! ```
//!
//! Every key is optional; unknown keys are rejected.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use mbappe_core::{AblationSpec, RewardConfig, SearchConfig, VehicleParams};
use serde::{Deserialize, Serialize};

use crate::episode::EpisodeConfig;
use crate::error::{Error, Result};
use crate::predict::PredictorKind;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PredictorChoice {
    Cv,
    #[default]
    Scripted,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfigFile {
    pub search: SearchConfig,
    pub reward: RewardConfig,
    /// Replaces the scenario's ego vehicle parameters when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vehicle: Option<VehicleParams>,
    pub ablation: AblationSpec,
    pub predictor: PredictorChoice,
    /// Required with `predictor = "file"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prediction_file: Option<PathBuf>,
    pub replan_every: u32,
}

impl Default for PlannerConfigFile {
    fn default() -> Self {
        Self {
            search: SearchConfig::default(),
            reward: RewardConfig::default(),
            vehicle: None,
            ablation: AblationSpec::default(),
            predictor: PredictorChoice::default(),
            prediction_file: None,
            replan_every: 5,
        }
    }
}

impl PlannerConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.search.validate()?;
        self.reward.validate()?;
        if let Some(v) = &self.vehicle {
            v.validate()?;
        }
        if self.replan_every < 1 {
            return Err(Error::Config("replan_every must be >= 1".into()));
        }
        Ok(())
    }

    /// Episode settings; `predictor` overrides the file's choice.
    pub fn episode_config(&self, predictor: Option<PredictorChoice>) -> Result<EpisodeConfig> {
        let kind = match predictor.unwrap_or(self.predictor) {
            PredictorChoice::Cv => PredictorKind::ConstantVelocity,
            PredictorChoice::Scripted => PredictorKind::Scripted,
            PredictorChoice::File => {
                let path = self
                    .prediction_file
                    .as_ref()
                    .ok_or_else(|| Error::Config("predictor \"file\" needs prediction_file".into()))?;
                PredictorKind::from_file(path)?
            }
        };
        let mut search = self.search;
        search.ablation = self.ablation;
        Ok(EpisodeConfig {
            search,
            reward: self.reward,
            predictor: kind,
            replan_every: self.replan_every,
            ..EpisodeConfig::default()
        })
    }

    /// Applies the vehicle override to a scenario.
    pub fn apply_vehicle(&self, scenario: &mut Scenario) {
        if let Some(v) = self.vehicle {
            scenario.ego_init.params = v;
        }
    }
}
