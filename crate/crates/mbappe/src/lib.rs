//! Closed-loop evaluation and tooling around the MBAPPE planner core:
//! scenario files and synthetic families, predictors, the episode
//! simulator, metrics, the ablation runner and the tree / trajectory
//! exporters behind the `mbappe` command.

pub mod ablation;
pub mod config;
pub mod episode;
pub mod error;
pub mod export;
pub mod metrics;
pub mod predict;
pub mod render;
pub mod scenario;
pub mod synth;

pub use ablation::{ablation_csv, run_ablation_matrix, AblationRow};
pub use config::{PlannerConfigFile, PredictorChoice};
pub use episode::{plan_once, run_episode, EpisodeConfig, EpisodeLog, EpisodeStatus};
pub use error::{Error, Result};
pub use export::TreeExport;
pub use metrics::{compute_metrics, EpisodeScore, Metrics};
pub use predict::PredictorKind;
pub use render::render_svg;
pub use scenario::Scenario;
pub use synth::{builtin_suite, generate_scenario, Family, ScenarioParams};
