//! Search core of the MBAPPE motion planner.
//!
//! Everything in this crate is allocation-only (`alloc`, no `std`): vehicle
//! kinematics over a discrete (acceleration, steering) grid, the geometric
//! world model the search simulates against, trajectory predictors, the
//! explicit driving reward, and the prior-guided Monte-Carlo tree search.
//!
//! File formats, the closed-loop simulator and the command line live in the
//! `mbappe` crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod geometry;
pub mod kinematics;
pub mod math;
pub mod mcts;
pub mod predictor;
pub mod reward;
pub mod world;

pub use error::{Error, Result};
pub use geometry::{OrientedBox, Point, Polygon};
pub use kinematics::{
    integrate, rollout, trajectory_to_actions, Action, ActionGrid, EgoState, GridIndex, Pose,
    VehicleParams,
};
pub use mcts::{
    backup, compute_prior, constrained_actions, extract_plan, run_search, select_child,
    AblationSpec, BackupRule, EdgeStats, NodeId, SearchConfig, SearchOutcome, SearchTree, SimulationPath,
};
pub use predictor::{ego_prior_actions, ConstantVelocity, ExpertDriver, PredictionSet, Predictor, Scripted};
pub use reward::{evaluate_node, RewardBreakdown, RewardConfig, Substep};
pub use world::{
    agent_pose_at, check_collision, footprint_in_drivable, project_to_centerline, AgentKind,
    AgentObservation, AgentTrack, Centerline, MapModel, ObstacleField, Projection,
    WorldSnapshot,
};

/// Fixed simulation tick of the world model, in seconds.
pub const TICK: f64 = 0.1;
