//! Predictor selection and the precomputed-trajectory file format.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use mbappe_core::{ConstantVelocity, PredictionSet, Predictor, Pose, Scripted, WorldSnapshot, TICK};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Agent id under which a prediction file stores the ego prior.
pub const EGO_KEY: &str = "ego";

/// One precomputed trajectory: poses every 0.1 s starting at `t0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub scenario_id: String,
    pub t0: f64,
    pub agent_id: String,
    pub poses: Vec<Pose>,
}

/// Predictions loaded from disk, keyed by (scenario id, tick of `t0`, agent id).
#[derive(Debug, Clone, Default)]
pub struct PredictionFile {
    records: HashMap<(String, i64, String), Vec<Pose>>,
}

fn tick_key(t: f64) -> i64 {
    (t / TICK).round() as i64
}

impl PredictionFile {
    pub fn from_records(records: Vec<PredictionRecord>) -> Result<Self> {
        let mut map = HashMap::with_capacity(records.len());
        for r in records {
            if !r.t0.is_finite() || r.poses.is_empty() {
                return Err(Error::Input(format!(
                    "prediction record {}/{}: needs a finite t0 and at least one pose",
                    r.scenario_id, r.agent_id
                )));
            }
            let key = (r.scenario_id, tick_key(r.t0), r.agent_id);
            if map.insert(key.clone(), r.poses).is_some() {
                return Err(Error::Input(format!(
                    "duplicate prediction record {}/t0={:.1}/{}",
                    key.0,
                    key.1 as f64 * TICK,
                    key.2
                )));
            }
        }
        Ok(Self { records: map })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
        let records: Vec<PredictionRecord> = serde_json::from_str(&text)
            .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        Self::from_records(records)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn lookup(&self, scenario_id: &str, t0: f64, agent_id: &str, n: usize) -> mbappe_core::Result<Vec<Pose>> {
        let key = (scenario_id.to_owned(), tick_key(t0), agent_id.to_owned());
        let poses = self.records.get(&key).ok_or_else(|| {
            mbappe_core::Error::PredictionUnavailable(format!("{scenario_id}/t0={t0:.1}/{agent_id}"))
        })?;
        if poses.len() < n {
            return Err(mbappe_core::Error::MalformedInput(format!(
                "prediction {scenario_id}/t0={t0:.1}/{agent_id} has {} poses, needs {n}",
                poses.len()
            )));
        }
        Ok(poses[..n].to_vec())
    }
}

/// Writes records that reproduce another predictor at every time in `times`.
pub fn record_predictions(
    scenario: &Scenario,
    predictor: &dyn Predictor,
    times: &[f64],
    horizon: f64,
) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::new();
    for &t in times {
        let tick = tick_key(t) as usize;
        let ego = scenario
            .expert
            .as_ref()
            .and_then(|e| e.get(tick))
            .map_or(scenario.ego_init.state, |p| {
                mbappe_core::EgoState::new(p.x, p.y, p.heading, scenario.ego_init.state.velocity)
            });
        let set = predictor.predict(&scenario.snapshot(t, ego), horizon)?;
        out.push(PredictionRecord {
            scenario_id: scenario.id.clone(),
            t0: t,
            agent_id: EGO_KEY.into(),
            poses: set.ego_prior,
        });
        for (id, poses) in set.agent_futures {
            out.push(PredictionRecord {
                scenario_id: scenario.id.clone(),
                t0: t,
                agent_id: id,
                poses,
            });
        }
    }
    Ok(out)
}

struct FilePredictor<'a> {
    file: &'a PredictionFile,
    scenario_id: &'a str,
}

impl Predictor for FilePredictor<'_> {
    fn predict(&self, snapshot: &WorldSnapshot<'_>, horizon: f64) -> mbappe_core::Result<PredictionSet> {
        if !(horizon > 0.0) {
            return Err(mbappe_core::Error::Configuration("prediction horizon must be positive".into()));
        }
        let n = PredictionSet::samples_for(horizon);
        let ego_prior = self.file.lookup(self.scenario_id, snapshot.time, EGO_KEY, n)?;
        let mut agent_futures = BTreeMap::new();
        for a in &snapshot.agents {
            agent_futures.insert(a.id.clone(), self.file.lookup(self.scenario_id, snapshot.time, &a.id, n)?);
        }
        Ok(PredictionSet {
            horizon,
            ego_prior,
            agent_futures,
        })
    }
}

/// Which predictor an episode uses.
#[derive(Clone)]
pub enum PredictorKind {
    ConstantVelocity,
    /// Ground-truth tracks (oracle).
    Scripted,
    FromFile(Arc<PredictionFile>),
}

impl fmt::Debug for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictorKind::ConstantVelocity => f.write_str("ConstantVelocity"),
            PredictorKind::Scripted => f.write_str("Scripted"),
            PredictorKind::FromFile(file) => write!(f, "FromFile({} records)", file.len()),
        }
    }
}

impl PredictorKind {
    /// Loads a prediction file; fails if it does not exist or does not parse.
    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(PredictorKind::FromFile(Arc::new(PredictionFile::load(path)?)))
    }

    pub fn name(&self) -> &'static str {
        match self {
            PredictorKind::ConstantVelocity => "cv",
            PredictorKind::Scripted => "scripted",
            PredictorKind::FromFile(_) => "file",
        }
    }

    /// Instantiates the predictor for one scenario.
    pub fn build<'a>(&'a self, scenario: &'a Scenario) -> Box<dyn Predictor + 'a> {
        match self {
            PredictorKind::ConstantVelocity => Box::new(ConstantVelocity),
            PredictorKind::Scripted => Box::new(Scripted::new(&scenario.agents, scenario.expert.as_deref(), scenario.ego_init.params)),
            PredictorKind::FromFile(file) => Box::new(FilePredictor {
                file,
                scenario_id: &scenario.id,
            }),
        }
    }
}
