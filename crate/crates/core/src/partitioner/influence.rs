//! Effective distances and the two influence update rules.

use super::ClusterState;
use crate::geometry::Point;
use crate::{Error, Result};

/// Euclidean distance to the center of `cluster`, divided by its influence.
pub fn effective_distance(p: &Point, cluster: usize, state: &ClusterState) -> f64 {
    p.dist(&state.centers[cluster]) / state.influence[cluster]
}

/// One balancing step for a single cluster.
///
/// With `gamma = target / current`, scaling every effective distance of a
/// cluster by `b` changes its size by roughly `b^-dim` for uniform density,
/// so the influence is multiplied by `gamma^(1/dim)`. The factor is clamped
/// to `[1 - cap, 1 + cap]`; an empty cluster gets the full increase.
pub fn adapted_influence(influence: f64, current: f64, target: f64, dim: usize, cap: f64) -> f64 {
    let factor = if current <= 0.0 {
        1.0 + cap
    } else {
        let gamma = target / current;
        if gamma == 1.0 {
            return influence;
        }
        gamma.powf(1.0 / dim as f64).clamp(1.0 - cap, 1.0 + cap)
    };
    let updated = influence * factor;
    // Keep the direction strict even when the factor rounds away.
    if updated == influence {
        if current <= 0.0 || target > current {
            return next_up(influence);
        }
        return next_down(influence);
    }
    updated
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

fn next_down(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

/// Applies [`adapted_influence`] to every cluster, using `state.block_weights`
/// as the current sizes.
pub fn adapt_influence(state: &mut ClusterState, targets: &[f64], cap: f64) -> Result<()> {
    if targets.len() != state.k() {
        return Err(Error::input("need one target weight per cluster"));
    }
    if targets.iter().any(|t| t.is_nan() || *t <= 0.0) {
        return Err(Error::input("target weights must be positive"));
    }
    if !(cap > 0.0 && cap < 1.0) {
        return Err(Error::input("influence step cap must lie in (0, 1)"));
    }
    let dim = state.dim();
    for (c, &target) in targets.iter().enumerate() {
        state.influence[c] =
            adapted_influence(state.influence[c], state.block_weights[c], target, dim, cap);
    }
    Ok(())
}

/// Erosion factor for a center that moved `moved` with cluster scale `beta`:
/// a sigmoid that is 0 for no movement and approaches 1 for large moves.
pub fn erosion_factor(moved: f64, beta: f64) -> f64 {
    2.0 / (1.0 + (-moved / beta).exp()) - 1.0
}

/// Pulls each influence toward 1 according to how far its center moved:
/// `influence <- influence^(1 - alpha)`.
pub fn erode_influence(state: &mut ClusterState, beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::input(format!(
            "erosion scale must be positive, got {beta}"
        )));
    }
    for c in 0..state.k() {
        let alpha = erosion_factor(state.last_move[c], beta);
        let old = state.influence[c];
        let eroded = old.powf(1.0 - alpha);
        state.influence[c] = if alpha > 0.0 && eroded == old && old != 1.0 {
            if old > 1.0 {
                next_down(old)
            } else {
                next_up(old)
            }
        } else {
            eroded
        };
    }
    Ok(())
}
