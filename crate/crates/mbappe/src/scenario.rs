//! Scenario documents: map, ego start, replayed agent tracks and statics.
//!
//! Stored as JSON. Polylines are arrays of `[x, y]`, tracks arrays of
//! `[x, y, heading]` sampled every 0.1 s from `t = 0`.

use std::path::Path;

use mbappe_core::{
    footprint_in_drivable, AgentObservation, AgentTrack, EgoState, MapModel, OrientedBox, Pose,
    VehicleParams, WorldSnapshot, TICK,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoInit {
    pub state: EgoState,
    #[serde(default)]
    pub params: VehicleParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub map: MapModel,
    pub ego_init: EgoInit,
    #[serde(default)]
    pub agents: Vec<AgentTrack>,
    #[serde(default)]
    pub statics: Vec<OrientedBox>,
    pub duration: f64,
    #[serde(default = "default_tick")]
    pub tick: f64,
    /// Optional expert ego trajectory (0.1 s samples), used as the ego prior
    /// by the scripted predictor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expert: Option<Vec<Pose>>,
}

fn default_tick() -> f64 {
    TICK
}

impl Scenario {
    /// Number of 0.1 s ticks in the episode.
    pub fn n_ticks(&self) -> usize {
        mbappe_core::math::ceil_steps(self.duration, self.tick)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::scenario(&self.id, reason));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad("duration must be positive".into());
        }
        if (self.tick - TICK).abs() > 1e-12 {
            return bad(format!("tick must be {TICK} s, got {}", self.tick));
        }
        if let Err(e) = self.ego_init.params.validate() {
            return bad(format!("ego_init.params: {e}"));
        }
        if self.map.route().is_empty() {
            return bad("map.route is empty".into());
        }
        let needed = self.n_ticks() + 1;
        for (i, agent) in self.agents.iter().enumerate() {
            if let Err(e) = agent.validate() {
                return bad(format!("agents[{i}]: {e}"));
            }
            if self.agents[..i].iter().any(|a| a.id == agent.id) {
                return bad(format!("agents[{i}]: duplicate id {}", agent.id));
            }
            if agent.id == crate::predict::EGO_KEY {
                return bad(format!("agents[{i}]: id {:?} is reserved", agent.id));
            }
            if agent.trajectory.len() < needed {
                return bad(format!(
                    "agents[{i}] ({}): trajectory has {} samples, needs {needed} to cover the duration",
                    agent.id,
                    agent.trajectory.len()
                ));
            }
        }
        for (i, s) in self.statics.iter().enumerate() {
            if s.validate().is_err() {
                return bad(format!("statics[{i}]: dimensions must be positive"));
            }
        }
        let ego = &self.ego_init;
        if !footprint_in_drivable(&ego.params.footprint(&ego.state), &self.map) {
            return bad("ego_init does not lie in the drivable area".into());
        }
        Ok(())
    }

    /// Snapshot of the world at time `t` with the ego at `ego`.
    pub fn snapshot(&self, t: f64, ego: EgoState) -> WorldSnapshot<'_> {
        WorldSnapshot {
            time: t,
            ego,
            agents: self.agents.iter().map(|a| AgentObservation::from_track(a, t)).collect(),
            statics: self.statics.clone(),
            map: &self.map,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Input(format!("scenario: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::write(path, e))
    }
}
