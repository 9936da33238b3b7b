//! The assign-and-balance phase.

use super::bounds::{PointBounds, Relaxation};
use super::influence::adapt_influence;
use super::{ClusterState, KMeansSettings};
use crate::geometry::{BoundingBox, Point};
use crate::parsim::{ExactSum, RankWorld, Shard};
use crate::{Error, Result};

/// Rank-local k-means state that persists across phases.
#[derive(Debug, Clone)]
pub struct RankLocal {
    /// Cluster of each local point, `None` until first assigned.
    pub assignment: Vec<Option<usize>>,
    pub bounds: PointBounds,
    /// Box around all local points.
    pub bbox: Option<BoundingBox>,
    /// Sampling priority; a point is in a subsample round when its priority
    /// is below the round's threshold.
    pub priority: Vec<u64>,
}

impl RankLocal {
    pub fn new(shard: &Shard, seed: u64) -> Self {
        RankLocal {
            assignment: vec![None; shard.len()],
            bounds: PointBounds::unknown(shard.len()),
            bbox: BoundingBox::around(&shard.points),
            priority: shard
                .global_ids
                .iter()
                .map(|&g| sample_priority(seed, g))
                .collect(),
        }
    }

    #[inline]
    pub fn is_active(&self, i: usize, threshold: Option<u64>) -> bool {
        threshold.is_none_or(|t| self.priority[i] < t)
    }

    /// Relaxes the bounds of every local point for the change `old -> new`.
    pub fn relax(&mut self, relax: &Relaxation) {
        if relax.is_identity() {
            return;
        }
        for i in 0..self.assignment.len() {
            relax.relax_point(&mut self.bounds, i, self.assignment[i]);
        }
    }
}

/// splitmix64 of the seed-mixed vertex id: a fixed pseudo-random order of all
/// vertices that does not depend on how they are sharded.
fn sample_priority(seed: u64, id: usize) -> u64 {
    let mut z = seed ^ (id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counters from one or more assignment sweeps, summed over ranks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepCounts {
    /// Active point visits.
    pub visited: u64,
    /// Visits where `ub < lb` skipped the center scan.
    pub skipped: u64,
    /// Effective distances evaluated during scans.
    pub distance_evals: u64,
    /// Points whose bounds were rechecked exactly (instrumentation).
    pub bound_checks: u64,
    /// Bound contract violations found by the recheck.
    pub bound_violations: u64,
    /// Skipped points whose exact argmin differs from their kept cluster.
    pub skip_mismatches: u64,
}

impl SweepCounts {
    fn merge(&mut self, o: &SweepCounts) {
        self.visited += o.visited;
        self.skipped += o.skipped;
        self.distance_evals += o.distance_evals;
        self.bound_checks += o.bound_checks;
        self.bound_violations += o.bound_violations;
        self.skip_mismatches += o.skip_mismatches;
    }
}

/// Result of one assign-and-balance phase.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    /// Balancing rounds executed (assignment sweeps).
    pub rounds: usize,
    pub imbalance: f64,
    pub balanced: bool,
    pub counts: SweepCounts,
}

/// `max_c w(c) / ceil(total / k) - 1`.
pub fn imbalance_of(block_weights: &[f64]) -> f64 {
    let total: f64 = block_weights.iter().sum();
    let k = block_weights.len() as f64;
    let cap = (total / k).ceil();
    if cap <= 0.0 {
        return 0.0;
    }
    block_weights.iter().copied().fold(0.0, f64::max) / cap - 1.0
}

/// Exact best and second-best effective distance by brute force, ties to the
/// lower index. The reference the pruned scan must agree with.
pub fn brute_force_best(p: &Point, state: &ClusterState) -> (usize, f64, f64) {
    let mut best = (f64::INFINITY, usize::MAX);
    let mut second = f64::INFINITY;
    for c in 0..state.k() {
        let e = p.dist(&state.centers[c]) / state.influence[c];
        if (e, c) < best {
            second = best.0;
            best = (e, c);
        } else if e < second {
            second = e;
        }
    }
    (best.1, best.0, second)
}

struct SweepOutput {
    weights: Vec<ExactSum>,
    counts: SweepCounts,
}

/// One assignment sweep over the active points of a rank.
fn sweep_rank(
    shard: &Shard,
    local: &mut RankLocal,
    state: &ClusterState,
    threshold: Option<u64>,
    verify: bool,
) -> SweepOutput {
    let k = state.k();
    let mut weights = vec![ExactSum::new(); k];
    let mut counts = SweepCounts::default();

    // Centers ordered by their lowest possible effective distance to any
    // local point.
    let dist_to_box: Vec<f64> = match &local.bbox {
        Some(bbox) => (0..k)
            .map(|c| bbox.min_dist2(&state.centers[c]).sqrt() / state.influence[c])
            .collect(),
        None => vec![0.0; k],
    };
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| dist_to_box[a].total_cmp(&dist_to_box[b]).then(a.cmp(&b)));

    for i in 0..shard.len() {
        if !local.is_active(i, threshold) {
            continue;
        }
        counts.visited += 1;
        let p = &shard.points[i];

        if verify {
            if let Some(own) = local.assignment[i] {
                counts.bound_checks += 1;
                let own_eff = p.dist(&state.centers[own]) / state.influence[own];
                let runner_up = (0..k)
                    .filter(|&c| c != own)
                    .map(|c| p.dist(&state.centers[c]) / state.influence[c])
                    .fold(f64::INFINITY, f64::min);
                if local.bounds.ub[i] < own_eff || local.bounds.lb[i] > runner_up {
                    counts.bound_violations += 1;
                }
            }
        }

        if local.assignment[i].is_some() && local.bounds.can_skip(i) {
            counts.skipped += 1;
            if verify && brute_force_best(p, state).0 != local.assignment[i].unwrap() {
                counts.skip_mismatches += 1;
            }
        } else {
            let mut best = (f64::INFINITY, usize::MAX);
            let mut second = f64::INFINITY;
            for &c in &order {
                if dist_to_box[c] > second {
                    break;
                }
                counts.distance_evals += 1;
                let e = p.dist(&state.centers[c]) / state.influence[c];
                if (e, c) < best {
                    second = best.0;
                    best = (e, c);
                } else if e < second {
                    second = e;
                }
            }
            local.assignment[i] = Some(best.1);
            local.bounds.ub[i] = best.0;
            local.bounds.lb[i] = second;
        }
        weights[local.assignment[i].unwrap()].add(shard.weights[i]);
    }
    SweepOutput { weights, counts }
}

/// Assigns every active point to its effective-distance-minimal cluster,
/// then adapts influence values until the global block weights are within
/// `settings.epsilon` or `settings.max_balance_iter` sweeps have run.
///
/// `threshold` restricts the phase to the sampled points (see
/// [`RankLocal::is_active`]); `None` means all points. On return,
/// `state.block_weights` holds the weights of the returned assignment, and
/// the assignment is optimal for `state`: influence is not adapted after the
/// last sweep.
pub fn assign_and_balance(
    world: &mut RankWorld,
    state: &mut ClusterState,
    locals: &mut [RankLocal],
    settings: &KMeansSettings,
    threshold: Option<u64>,
) -> Result<BalanceReport> {
    if state.k() == 0 {
        return Err(Error::input("k must be at least 1"));
    }
    if locals.len() != world.num_ranks() {
        return Err(Error::input("need one rank-local state per rank"));
    }
    let mut counts = SweepCounts::default();
    let rounds = settings.max_balance_iter.max(1);
    for round in 0..rounds {
        let shared: &ClusterState = state;
        let outputs = world.map_ranks_with(locals, |_, shard, local| {
            sweep_rank(shard, local, shared, threshold, settings.verify_bounds)
        });
        let mut contributions = Vec::with_capacity(outputs.len());
        for out in outputs {
            counts.merge(&out.counts);
            contributions.push(out.weights);
        }
        state.block_weights = world.allreduce_exact(&contributions)?;
        let imbalance = imbalance_of(&state.block_weights);
        let balanced = imbalance <= settings.epsilon;
        if balanced || round + 1 == rounds || !settings.balance {
            return Ok(BalanceReport {
                rounds: round + 1,
                imbalance,
                balanced,
                counts,
            });
        }
        let before = state.clone();
        let total: f64 = state.block_weights.iter().sum();
        let targets = vec![total / state.k() as f64; state.k()];
        adapt_influence(state, &targets, settings.influence_step_cap)?;
        let relax = Relaxation::between(&before, state);
        world.map_ranks_with(locals, |_, _, local| local.relax(&relax));
    }
    unreachable!("the final round always returns")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parsim::RankWorld;

    fn world(points: Vec<Point>, p: usize) -> RankWorld {
        let n = points.len();
        let shards = (0..p)
            .map(|r| {
                let range = r * n / p..(r + 1) * n / p;
                Shard {
                    global_ids: range.clone().collect(),
                    points: points[range.clone()].to_vec(),
                    weights: vec![1.0; range.len()],
                }
            })
            .collect();
        RankWorld::from_shards(shards).unwrap()
    }

    fn locals(w: &RankWorld) -> Vec<RankLocal> {
        w.shards().iter().map(|s| RankLocal::new(s, 0)).collect()
    }

    #[test]
    fn imbalance_definition() {
        assert_eq!(imbalance_of(&[5.0, 5.0]), 0.0);
        assert!((imbalance_of(&[6.0, 4.0]) - 0.2).abs() < 1e-15);
        // ceil(10/3) = 4
        assert_eq!(imbalance_of(&[4.0, 3.0, 3.0]), 0.0);
    }

    #[test]
    fn single_cluster_takes_everything() {
        let pts: Vec<Point> = (0..10).map(|i| Point::xy(i as f64, 1.0)).collect();
        let mut w = world(pts, 2);
        let mut l = locals(&w);
        let mut s = ClusterState::new(vec![Point::xy(3.0, 3.0)]);
        let r = assign_and_balance(&mut w, &mut s, &mut l, &KMeansSettings::new(1), None).unwrap();
        assert_eq!(r.rounds, 1);
        assert_eq!(r.imbalance, 0.0);
        assert!(l.iter().all(|l| l.assignment.iter().all(|&a| a == Some(0))));
        assert_eq!(s.block_weights, vec![10.0]);
    }

    #[test]
    fn separated_pairs() {
        let pts = vec![
            Point::xy(0.0, 0.0),
            Point::xy(0.0, 1.0),
            Point::xy(10.0, 0.0),
            Point::xy(10.0, 1.0),
        ];
        let mut w = world(pts, 1);
        let mut l = locals(&w);
        let mut s = ClusterState::new(vec![Point::xy(0.5, 0.5), Point::xy(9.0, 0.5)]);
        let r = assign_and_balance(&mut w, &mut s, &mut l, &KMeansSettings::new(2), None).unwrap();
        assert_eq!(l[0].assignment, vec![Some(0), Some(0), Some(1), Some(1)]);
        assert_eq!(r.imbalance, 0.0);
        assert!(r.balanced);
    }

    #[test]
    fn ties_break_toward_lower_index() {
        let pts = vec![Point::xy(0.0, 0.0)];
        let mut w = world(pts, 1);
        let mut l = locals(&w);
        let mut s = ClusterState::new(vec![Point::xy(1.0, 0.0), Point::xy(-1.0, 0.0)]);
        let mut settings = KMeansSettings::new(2);
        settings.balance = false;
        assign_and_balance(&mut w, &mut s, &mut l, &settings, None).unwrap();
        assert_eq!(l[0].assignment, vec![Some(0)]);
        let mut s = ClusterState::new(vec![Point::xy(-1.0, 0.0), Point::xy(1.0, 0.0)]);
        l = locals(&w);
        assign_and_balance(&mut w, &mut s, &mut l, &settings, None).unwrap();
        assert_eq!(l[0].assignment, vec![Some(0)]);
    }

    #[test]
    fn balancing_shifts_weight_to_small_cluster() {
        // 90 points near the left center, 10 near the right one.
        let mut pts: Vec<Point> = (0..90).map(|i| Point::xy(i as f64 / 90.0, 0.0)).collect();
        pts.extend((0..10).map(|i| Point::xy(1.5 + i as f64 / 10.0, 0.0)));
        let mut w = world(pts, 3);
        let mut l = locals(&w);
        let mut s = ClusterState::new(vec![Point::xy(0.5, 0.0), Point::xy(2.0, 0.0)]);
        let mut settings = KMeansSettings::new(2);
        settings.max_balance_iter = 200;
        settings.verify_bounds = true;
        let r = assign_and_balance(&mut w, &mut s, &mut l, &settings, None).unwrap();
        assert!(r.balanced, "imbalance {}", r.imbalance);
        assert!(s.influence[1] > 1.0 && s.influence[0] < 1.0);
        assert_eq!(r.counts.bound_violations, 0);
        assert_eq!(r.counts.skip_mismatches, 0);
        // Final assignment is optimal under the final influence values.
        for (shard, local) in w.shards().iter().zip(&l) {
            for (p, a) in shard.points.iter().zip(&local.assignment) {
                assert_eq!(Some(brute_force_best(p, &s).0), *a);
            }
        }
    }

    #[test]
    fn sample_threshold_limits_active_points() {
        let pts: Vec<Point> = (0..1000).map(|i| Point::xy(i as f64, 0.0)).collect();
        let mut w = world(pts, 2);
        let mut l = locals(&w);
        let mut s = ClusterState::new(vec![Point::xy(0.0, 0.0)]);
        let threshold = u64::MAX / 10;
        let r = assign_and_balance(
            &mut w,
            &mut s,
            &mut l,
            &KMeansSettings::new(1),
            Some(threshold),
        )
        .unwrap();
        assert!(
            (50..150).contains(&r.counts.visited),
            "{}",
            r.counts.visited
        );
        let assigned = l
            .iter()
            .flat_map(|l| &l.assignment)
            .filter(|a| a.is_some())
            .count();
        assert_eq!(assigned as u64, r.counts.visited);
    }
}
