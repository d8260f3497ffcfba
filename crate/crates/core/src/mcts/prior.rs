use alloc::vec::Vec;

use super::SearchConfig;
use crate::error::{Error, Result};
use crate::kinematics::{ActionGrid, GridIndex};
use crate::math::{exp, whole_steps};

/// Half-widths, in grid indices, of the continuity window around the
/// previous action: rate limits scaled to one node.
pub fn window_radius(grid: &ActionGrid, cfg: &SearchConfig) -> (u8, u8) {
    let steps = cfg.node_duration / cfg.sub_dt;
    let accel = whole_steps(cfg.accel_rate_limit * steps, grid.accel_step()).clamp(0, 12);
    let steer = whole_steps(cfg.steer_rate_limit * steps, grid.steer_step()).clamp(0, 12);
    (accel as u8, steer as u8)
}

/// Grid cells within `radius` of `center` on each axis, clipped at the grid
/// boundary, acceleration-major in ascending index order.
pub fn window_actions(center: GridIndex, radius: (u8, u8)) -> Vec<GridIndex> {
    let max = (ActionGrid::SIZE - 1) as u8;
    let a_lo = center.accel.saturating_sub(radius.0);
    let a_hi = center.accel.saturating_add(radius.0).min(max);
    let s_lo = center.steer.saturating_sub(radius.1);
    let s_hi = center.steer.saturating_add(radius.1).min(max);
    (a_lo..=a_hi)
        .flat_map(|a| (s_lo..=s_hi).map(move |s| GridIndex::new(a, s)))
        .collect()
}

/// Successor actions allowed after `prev` (the zero action when absent).
pub fn constrained_actions(prev: Option<GridIndex>, grid: &ActionGrid, cfg: &SearchConfig) -> Vec<GridIndex> {
    window_actions(prev.unwrap_or(GridIndex::CENTER), window_radius(grid, cfg))
}

fn gaussian(c: GridIndex, center: GridIndex, variance: f64) -> f64 {
    let (di, dj) = c.offset_from(center);
    exp(-((di * di + dj * dj) as f64) / (2.0 * variance))
}

/// Normalized prior over `candidates` for a node at `depth`.
///
/// The handcrafted term is a Gaussian in index space around the zero action;
/// the learned term, active while `depth * node_duration <= prior_horizon`,
/// is a Gaussian around the predictor's action. With neither term active
/// the prior is uniform.
pub fn compute_prior(
    candidates: &[GridIndex],
    depth: u32,
    learned: Option<GridIndex>,
    cfg: &SearchConfig,
) -> Result<Vec<f64>> {
    if candidates.is_empty() {
        return Err(Error::config("prior needs at least one candidate"));
    }
    let handcrafted = cfg.ablation.use_handcrafted_prior;
    let learned = learned
        .filter(|_| cfg.ablation.use_learned_prior)
        .filter(|_| depth as f64 * cfg.node_duration <= cfg.prior_horizon + 1e-9);
    let mut weights: Vec<f64> = candidates
        .iter()
        .map(|&c| {
            let mut w = 0.0;
            if handcrafted {
                w += gaussian(c, GridIndex::CENTER, cfg.prior_variance);
            }
            if let Some(nn) = learned {
                w += gaussian(c, nn, cfg.prior_variance);
            }
            w
        })
        .collect();
    if !handcrafted && learned.is_none() {
        weights.iter_mut().for_each(|w| *w = 1.0);
    }
    let sum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= sum);
    Ok(weights)
}
