//! Per-point effective-distance bounds.
//!
//! `ub(p)` bounds the effective distance from `p` to its own center from
//! above, `lb(p)` bounds the smallest effective distance to any other center
//! from below. When `ub(p) < lb(p)` the assignment of `p` cannot have changed
//! and its center scan is skipped.

use super::ClusterState;

/// Relative slack applied on every relaxation so that float rounding in the
/// update can only loosen a bound.
const ROUNDING_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PointBounds {
    pub ub: Vec<f64>,
    pub lb: Vec<f64>,
}

impl PointBounds {
    /// `ub = inf`, `lb = 0`: forces an exact scan on first use.
    pub fn unknown(n: usize) -> Self {
        PointBounds {
            ub: vec![f64::INFINITY; n],
            lb: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.ub.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ub.is_empty()
    }

    #[inline]
    pub fn can_skip(&self, i: usize) -> bool {
        self.ub[i] < self.lb[i]
    }
}

/// Per-cluster factors for one relaxation step.
#[derive(Debug, Clone)]
pub struct Relaxation {
    /// `I_old(c) / I_new(c)`
    ratio: Vec<f64>,
    /// `delta(c) / I_new(c)`
    shift: Vec<f64>,
    min_ratio: f64,
    max_shift: f64,
}

impl Relaxation {
    /// Factors for moving from `old` to `new` (centers and influence).
    pub fn between(old: &ClusterState, new: &ClusterState) -> Self {
        assert_eq!(old.k(), new.k(), "cluster states must share k");
        let ratio: Vec<f64> = old
            .influence
            .iter()
            .zip(&new.influence)
            .map(|(o, n)| o / n)
            .collect();
        let shift: Vec<f64> = old
            .centers
            .iter()
            .zip(&new.centers)
            .zip(&new.influence)
            .map(|((a, b), i)| a.dist(b) / i)
            .collect();
        let min_ratio = ratio.iter().copied().fold(f64::INFINITY, f64::min);
        let max_shift = shift.iter().copied().fold(0.0, f64::max);
        Relaxation {
            ratio,
            shift,
            min_ratio,
            max_shift,
        }
    }

    /// True when neither centers nor influences changed.
    pub fn is_identity(&self) -> bool {
        self.max_shift == 0.0 && self.ratio.iter().all(|&r| r == 1.0)
    }

    #[inline]
    pub fn relax_point(&self, bounds: &mut PointBounds, i: usize, cluster: Option<usize>) {
        if let Some(c) = cluster {
            let ub = bounds.ub[i];
            if ub.is_finite() {
                bounds.ub[i] = (ub * self.ratio[c] + self.shift[c]) * (1.0 + ROUNDING_SLACK);
            }
        }
        let lb = bounds.lb[i] * self.min_ratio * (1.0 - ROUNDING_SLACK)
            - self.max_shift * (1.0 + ROUNDING_SLACK);
        bounds.lb[i] = lb.max(0.0);
    }
}

/// Relaxes all bounds of one rank for the change `old -> new`.
/// `assignment[i]` is the cluster of point `i`, `None` if unassigned.
///
/// For the own cluster `c`:
/// `ub' = ub * I_old(c)/I_new(c) + delta(c)/I_new(c)`,
/// and for the runner-up, which may be any cluster:
/// `lb' = lb * min_c' I_old(c')/I_new(c') - max_c' delta(c')/I_new(c')`,
/// floored at zero.
pub fn relax_bounds(
    bounds: &mut PointBounds,
    assignment: &[Option<usize>],
    old: &ClusterState,
    new: &ClusterState,
) {
    let relax = Relaxation::between(old, new);
    if relax.is_identity() {
        return;
    }
    for (i, &c) in assignment.iter().enumerate() {
        relax.relax_point(bounds, i, c);
    }
}
