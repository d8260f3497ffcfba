//! Prior-guided Monte-Carlo tree search over the action grid.
//!
//! One pass selects with PUCT down to an unexpanded node, expands it under
//! the continuity window (every child is rolled out and scored by the
//! explicit reward), takes the highest-ranked fresh child as the leaf, and
//! backs up cumulative rewards along the path.

mod prior;
mod search;
mod tree;

pub use prior::{compute_prior, constrained_actions, window_actions, window_radius};
pub use search::{expand, run_search, ExpansionContext, SearchOutcome, SearchStats};
pub use tree::{backup, extract_plan, select_child, Edge, EdgeStats, Node, NodeId, SearchTree, SimulationPath};

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math::whole_steps;

/// How cumulative returns are assigned to the edges of a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BackupRule {
    /// Edge `k` receives `sum_{j >= k} gamma^(j-k) r_j`: the reward of the node
    /// it leads to plus everything below.
    #[default]
    Inclusive,
    /// Edge `k` receives only the rewards strictly below the node it leads
    /// to, so the deepest edge of a path always receives 0.
    Exclusive,
}

/// Switches for the prior and continuity-constraint ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AblationSpec {
    pub use_learned_prior: bool,
    pub use_handcrafted_prior: bool,
    /// Root window centered on the previously executed action.
    pub use_tree_constraint: bool,
    /// Child windows centered on the parent's action.
    pub use_node_constraint: bool,
}

impl Default for AblationSpec {
    fn default() -> Self {
        Self {
            use_learned_prior: true,
            use_handcrafted_prior: true,
            use_tree_constraint: true,
            use_node_constraint: true,
        }
    }
}

impl AblationSpec {
    /// Short label such as `L+H|T+N`; disabled parts print as `-`.
    pub fn label(&self) -> alloc::string::String {
        let flag = |on: bool, s: &'static str| if on { s } else { "-" };
        alloc::format!(
            "{}+{}|{}+{}",
            flag(self.use_learned_prior, "L"),
            flag(self.use_handcrafted_prior, "H"),
            flag(self.use_tree_constraint, "T"),
            flag(self.use_node_constraint, "N"),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SearchConfig {
    pub n_simulations: u32,
    pub c_puct: f64,
    pub gamma: f64,
    /// Seconds of simulated time per tree level.
    pub node_duration: f64,
    /// Integration step inside a node.
    pub sub_dt: f64,
    /// The learned prior applies while `depth * node_duration <= prior_horizon`.
    pub prior_horizon: f64,
    /// Gaussian variance of both priors, in grid-index units squared.
    pub prior_variance: f64,
    /// Allowed acceleration change per `sub_dt`, m/s².
    pub accel_rate_limit: f64,
    /// Allowed steering change per `sub_dt`, rad.
    pub steer_rate_limit: f64,
    pub max_depth: u32,
    /// Recorded with each run. The search has no random draws: every tie is
    /// broken by a fixed rule.
    pub rng_seed: u64,
    pub backup: BackupRule,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub ablation: AblationSpec,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_simulations: 256,
            c_puct: 2.0,
            gamma: 1.0,
            node_duration: 1.0,
            sub_dt: 0.1,
            prior_horizon: 1.0,
            prior_variance: 100.0,
            accel_rate_limit: 0.15,
            steer_rate_limit: PI / 240.0,
            max_depth: 8,
            rng_seed: 0,
            backup: BackupRule::Inclusive,
            ablation: AblationSpec::default(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_simulations < 1 {
            return Err(Error::config("n_simulations must be >= 1"));
        }
        if !(self.c_puct >= 0.0) {
            return Err(Error::config("c_puct must be >= 0"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::config("gamma must lie in (0, 1]"));
        }
        if !(self.sub_dt > 0.0 && self.node_duration > 0.0) {
            return Err(Error::config("node_duration and sub_dt must be positive"));
        }
        let ratio = self.node_duration / self.sub_dt;
        if (ratio - crate::math::round(ratio)).abs() > 1e-9 || ratio < 0.5 {
            return Err(Error::config("node_duration must be an integer multiple of sub_dt"));
        }
        if (self.sub_dt - crate::TICK).abs() > 1e-12 {
            return Err(Error::config("sub_dt must equal the 0.1 s world tick"));
        }
        if !(self.prior_variance > 0.0) {
            return Err(Error::config("prior_variance must be positive"));
        }
        if !(self.accel_rate_limit >= 0.0 && self.steer_rate_limit >= 0.0) {
            return Err(Error::config("continuity limits must be >= 0"));
        }
        if self.max_depth < 1 {
            return Err(Error::config("max_depth must be >= 1"));
        }
        Ok(())
    }

    /// Integration steps per tree level.
    pub fn substeps_per_node(&self) -> usize {
        whole_steps(self.node_duration, self.sub_dt).max(1) as usize
    }

    /// Prediction horizon a search needs: the full tree depth plus the
    /// final sample.
    pub fn horizon(&self) -> f64 {
        self.max_depth as f64 * self.node_duration + self.sub_dt
    }
}
