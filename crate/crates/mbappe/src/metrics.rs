//! Episode metrics: collision rate, drivable-area violations, ego progress
//! and a multiplicative composite score.

use serde::{Deserialize, Serialize};

use crate::episode::EpisodeLog;
use crate::error::{Error, Result};
use crate::scenario::Scenario;

const DRIVABLE_MULT: f64 = 0.5;
const ROUTE_MULT: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeScore {
    pub scenario_id: String,
    pub seed: u64,
    pub collided: bool,
    pub off_drivable: bool,
    pub off_route: bool,
    pub progress: f64,
    /// In [0, 100].
    pub composite: f64,
}

impl EpisodeScore {
    pub fn of(log: &EpisodeLog) -> Self {
        let h = &log.header;
        let collided = h.first_collision.is_some();
        let off_drivable = h.first_off_drivable.is_some();
        let off_route = h.first_off_route.is_some();
        let progress = log.progress_ratio();
        let mult = |flag: bool, m: f64| if flag { m } else { 1.0 };
        let composite =
            100.0 * mult(collided, 0.0) * mult(off_drivable, DRIVABLE_MULT) * mult(off_route, ROUTE_MULT) * progress;
        Self {
            scenario_id: h.scenario_id.clone(),
            seed: h.seed,
            collided,
            off_drivable,
            off_route,
            progress,
            composite,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Fraction of episodes with at least one collision.
    pub cr: f64,
    /// Fraction of episodes with at least one drivable-area violation.
    pub da: f64,
    /// Mean progress ratio.
    pub ep: f64,
    /// Mean composite, in [0, 100].
    pub score: f64,
    pub episodes: usize,
}

impl Metrics {
    /// Averages per-episode scores.
    pub fn aggregate(scores: &[EpisodeScore]) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::Input("no episodes to aggregate".into()));
        }
        let n = scores.len() as f64;
        let frac = |f: fn(&EpisodeScore) -> bool| scores.iter().filter(|s| f(s)).count() as f64 / n;
        Ok(Self {
            cr: frac(|s| s.collided),
            da: frac(|s| s.off_drivable),
            ep: scores.iter().map(|s| s.progress).sum::<f64>() / n,
            score: scores.iter().map(|s| s.composite).sum::<f64>() / n,
            episodes: scores.len(),
        })
    }
}

/// Metrics over logs paired one-to-one with their scenarios.
pub fn compute_metrics(logs: &[EpisodeLog], scenarios: &[&Scenario]) -> Result<Metrics> {
    if logs.len() != scenarios.len() {
        return Err(Error::Input(format!(
            "{} logs for {} scenarios",
            logs.len(),
            scenarios.len()
        )));
    }
    for (log, s) in logs.iter().zip(scenarios) {
        if log.header.scenario_id != s.id {
            return Err(Error::Input(format!(
                "log for {} paired with scenario {}",
                log.header.scenario_id, s.id
            )));
        }
    }
    let scores: Vec<_> = logs.iter().map(EpisodeScore::of).collect();
    Metrics::aggregate(&scores)
}
