//! Balanced k-means bootstrapped from a Hilbert curve.
//!
//! Each cluster carries an influence value that divides its distances; the
//! assignment step therefore produces a multiplicatively weighted Voronoi
//! diagram. Influences are adapted until all blocks are within the
//! imbalance bound, then centers move to the weighted means of their blocks.

mod assign;
pub mod bounds;
pub mod influence;

pub use assign::{
    assign_and_balance, brute_force_best, imbalance_of, BalanceReport, RankLocal, SweepCounts,
};
pub use bounds::{relax_bounds, PointBounds, Relaxation};
pub use influence::{
    adapt_influence, adapted_influence, effective_distance, erode_influence, erosion_factor,
};

use crate::geometry::{default_depth, hilbert_key, BoundingBox, Point, SfcKey};
use crate::mesh::{GeometricGraph, Partition};
use crate::parsim::{ClusterMoments, CollectiveLog, ExactSum, RankWorld};
use crate::{Error, Result};

/// Centers, influences and block weights of a clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    pub centers: Vec<Point>,
    pub influence: Vec<f64>,
    /// Global weight of each block under the latest assignment.
    pub block_weights: Vec<f64>,
    /// Distance each center moved in the last movement step.
    pub last_move: Vec<f64>,
}

impl ClusterState {
    /// Neutral state: influence 1, no weights, no movement.
    pub fn new(centers: Vec<Point>) -> Self {
        let k = centers.len();
        ClusterState {
            centers,
            influence: vec![1.0; k],
            block_weights: vec![0.0; k],
            last_move: vec![0.0; k],
        }
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.centers.first().map_or(2, Point::dim)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansSettings {
    pub k: usize,
    /// Maximum allowed imbalance.
    pub epsilon: f64,
    /// Center movements on the full point set.
    pub max_iter: usize,
    /// Assignment sweeps per movement.
    pub max_balance_iter: usize,
    /// Stop once no center moves this far. Defaults to 1e-4 times the
    /// bounding box diagonal.
    pub delta_threshold: Option<f64>,
    /// Largest relative influence change per balancing sweep.
    pub influence_step_cap: f64,
    pub erosion: bool,
    /// Adapt influence values at all. Off gives plain weighted Lloyd.
    pub balance: bool,
    /// Size of the first random subsample; doubled after every movement
    /// until it covers the input. `None` starts on the full set.
    pub init_sample: Option<usize>,
    pub seed: u64,
    /// Hilbert key depth; defaults to the deepest 62-bit key.
    pub sfc_depth: Option<u32>,
    /// Recheck every bound exactly before it is used (slow).
    pub verify_bounds: bool,
}

impl KMeansSettings {
    pub fn new(k: usize) -> Self {
        KMeansSettings {
            k,
            epsilon: 0.03,
            max_iter: 50,
            max_balance_iter: 20,
            delta_threshold: None,
            influence_step_cap: 0.05,
            erosion: true,
            balance: true,
            init_sample: Some(100),
            seed: 0,
            sfc_depth: None,
            verify_bounds: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::input("k must be at least 1"));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::input("epsilon must be nonnegative"));
        }
        if !(self.influence_step_cap > 0.0 && self.influence_step_cap < 1.0) {
            return Err(Error::input("influence step cap must lie in (0, 1)"));
        }
        if self.max_iter == 0 || self.max_balance_iter == 0 {
            return Err(Error::input("iteration budgets must be positive"));
        }
        if self.init_sample == Some(0) {
            return Err(Error::input("initial sample size must be positive"));
        }
        if let Some(t) = self.delta_threshold {
            if t.is_nan() || t < 0.0 {
                return Err(Error::input("delta threshold must be nonnegative"));
            }
        }
        Ok(())
    }
}

/// Statistics of one movement iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationStats {
    /// True for the random-subsample warm-up rounds.
    pub sampled: bool,
    pub balance_rounds: usize,
    pub imbalance: f64,
    /// Largest center movement after this iteration.
    pub max_delta: f64,
    /// Weighted squared distances of the active points to their centers.
    pub objective: f64,
    pub counts: SweepCounts,
}

impl IterationStats {
    /// Fraction of point visits that skipped the center scan.
    pub fn skip_rate(&self) -> f64 {
        if self.counts.visited == 0 {
            return 0.0;
        }
        self.counts.skipped as f64 / self.counts.visited as f64
    }
}

#[derive(Debug, Clone)]
pub struct KMeansOutcome {
    pub partition: Partition,
    /// Whether the final assignment meets the imbalance bound.
    pub balanced: bool,
    pub imbalance: f64,
    pub converged: bool,
    /// State the returned partition was assigned with.
    pub state: ClusterState,
    pub iterations: Vec<IterationStats>,
    pub log: CollectiveLog,
}

impl KMeansOutcome {
    pub fn total_counts(&self) -> SweepCounts {
        let mut total = SweepCounts::default();
        for it in &self.iterations {
            let c = &it.counts;
            total.visited += c.visited;
            total.skipped += c.skipped;
            total.distance_evals += c.distance_evals;
            total.bound_checks += c.bound_checks;
            total.bound_violations += c.bound_violations;
            total.skip_mismatches += c.skip_mismatches;
        }
        total
    }
}

/// Centers at the sorted positions `floor(i*n/k + n/(2k))`, influence 1.
pub fn initial_centers_from_sfc(sorted: &mut RankWorld, k: usize) -> Result<ClusterState> {
    let n = sorted.len();
    if k == 0 || k > n {
        return Err(Error::input(format!("k = {k} must lie in 1..={n}")));
    }
    let centers = (0..k)
        .map(|i| sorted.point_at((2 * i * n + n) / (2 * k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusterState::new(centers))
}

/// Global bounding box from per-rank boxes.
fn global_bbox(world: &mut RankWorld, dim: usize) -> Result<BoundingBox> {
    let per_rank: Vec<Vec<f64>> = world.map_ranks(|_, shard| {
        let mut v = vec![f64::NEG_INFINITY; 2 * dim];
        if let Some(b) = BoundingBox::around(&shard.points) {
            for a in 0..dim {
                v[a] = -b.min().get(a);
                v[dim + a] = b.max().get(a);
            }
        }
        v
    });
    let reduced = world.allreduce_max(&per_rank)?;
    let min: Vec<f64> = reduced[..dim].iter().map(|x| -x).collect();
    BoundingBox::new(Point::new(&min)?, Point::new(&reduced[dim..])?)
}

/// Number of warm-up rounds and the sampling threshold of round `r`.
fn sample_schedule(n: usize, init_sample: Option<usize>) -> (usize, impl Fn(usize) -> u64) {
    let s0 = init_sample.unwrap_or(n).max(1);
    let rounds = if n > s0 {
        (n as f64 / s0 as f64).log2().ceil() as usize
    } else {
        0
    };
    let threshold = move |r: usize| {
        let fraction = (s0 as f64 * 2f64.powi(r as i32) / n as f64).min(1.0);
        (fraction * u64::MAX as f64) as u64
    };
    (rounds, threshold)
}

/// Partitions `graph` into `settings.k` blocks with balanced k-means run on
/// the simulated ranks of `world`.
///
/// The points are keyed along a Hilbert curve, globally sorted and
/// redistributed, and the initial centers are spread evenly along the
/// sorted order. Each iteration assigns and balances, then moves centers to
/// their blocks' weighted means, erodes influence of moved centers and
/// relaxes the point bounds. The first iterations run on growing random
/// subsamples.
pub fn balanced_kmeans(
    graph: &GeometricGraph,
    settings: &KMeansSettings,
    world: RankWorld,
) -> Result<KMeansOutcome> {
    settings.validate()?;
    let n = graph.num_vertices();
    let k = settings.k;
    if k > n {
        return Err(Error::input(format!(
            "k = {k} exceeds the vertex count {n}"
        )));
    }
    if world.len() != n {
        return Err(Error::input(
            "rank world does not hold the graph's vertices",
        ));
    }
    let mut world = world;
    let dim = graph.dim();

    let bbox = global_bbox(&mut world, dim)?;
    let depth = settings.sfc_depth.unwrap_or_else(|| default_depth(dim));
    let keys = world.map_ranks(|_, shard| {
        shard
            .points
            .iter()
            .map(|p| hilbert_key(p, &bbox, depth))
            .collect::<Result<Vec<SfcKey>>>()
    });
    let keys = keys.into_iter().collect::<Result<Vec<_>>>()?;
    let mut world = world.global_sort_redistribute(&keys)?;

    let mut state = initial_centers_from_sfc(&mut world, k)?;
    let mut locals: Vec<RankLocal> = world.map_ranks(|_, s| RankLocal::new(s, settings.seed));
    let threshold_delta = settings.delta_threshold.unwrap_or(1e-4 * bbox.diagonal());

    let (warmup, threshold_of) = sample_schedule(n, settings.init_sample);
    let total_rounds = warmup + settings.max_iter;
    let mut iterations = Vec::with_capacity(total_rounds);
    let mut converged = false;
    let mut last_report = None;

    for round in 0..total_rounds {
        let threshold = (round < warmup).then(|| threshold_of(round));
        let report = assign_and_balance(&mut world, &mut state, &mut locals, settings, threshold)?;

        // New centers, objective and cluster extents from this assignment.
        let shared = &state;
        let partials = world.map_ranks_with(&mut locals, |_, shard, local| {
            let mut moments = ClusterMoments::new(k, dim);
            let mut objective = ExactSum::new();
            let mut extent = vec![0.0f64; k];
            for i in 0..shard.len() {
                if !local.is_active(i, threshold) {
                    continue;
                }
                let Some(c) = local.assignment[i] else {
                    continue;
                };
                let p = &shard.points[i];
                let w = shard.weights[i];
                moments.add(c, p, w);
                let d2 = p.dist2(&shared.centers[c]);
                objective.add(w * d2);
                extent[c] = extent[c].max(d2.sqrt());
            }
            (moments, vec![objective], extent)
        });
        let mut moments = Vec::with_capacity(partials.len());
        let mut objectives = Vec::with_capacity(partials.len());
        let mut extents = Vec::with_capacity(partials.len());
        for (m, o, e) in partials {
            moments.push(m);
            objectives.push(o);
            extents.push(e);
        }
        let means = world.weighted_mean_reduce(&moments)?;
        // Instrumentation only; not part of the algorithm's communication.
        let objective: f64 = {
            let mut acc = ExactSum::new();
            for o in &objectives {
                acc.merge(&o[0]);
            }
            acc.value()
        };

        let mut moved = state.clone();
        for (c, mean) in means.iter().enumerate() {
            match mean {
                Some(m) => moved.centers[c] = *m,
                None if settings.balance => {
                    moved.influence[c] *= 1.0 + settings.influence_step_cap;
                }
                None => {}
            }
        }
        moved.last_move = state
            .centers
            .iter()
            .zip(&moved.centers)
            .map(|(a, b)| a.dist(b))
            .collect();
        let max_delta = moved.last_move.iter().copied().fold(0.0, f64::max);

        iterations.push(IterationStats {
            sampled: threshold.is_some(),
            balance_rounds: report.rounds,
            imbalance: report.imbalance,
            max_delta,
            objective,
            counts: report.counts,
        });
        let is_last = round + 1 == total_rounds;
        let full = threshold.is_none();
        last_report = Some(report);
        if full && (max_delta < threshold_delta || max_delta == 0.0) {
            converged = true;
            break;
        }
        if is_last {
            break;
        }

        if settings.erosion && settings.balance {
            let extents = world.allreduce_max(&extents)?;
            let occupied: Vec<f64> = extents
                .iter()
                .zip(&means)
                .filter(|(_, m)| m.is_some())
                .map(|(e, _)| 2.0 * e)
                .collect();
            let beta = occupied.iter().sum::<f64>() / occupied.len().max(1) as f64;
            if beta > 0.0 {
                erode_influence(&mut moved, beta)?;
            }
        }
        let relax = Relaxation::between(&state, &moved);
        world.map_ranks_with(&mut locals, |_, _, local| local.relax(&relax));
        state = moved;
    }

    let report = last_report.expect("at least one round runs");
    let per_rank: Vec<Vec<Option<usize>>> = locals.iter().map(|l| l.assignment.clone()).collect();
    let gathered = world.gather(&per_rank)?;
    let assignment = gathered
        .into_iter()
        .enumerate()
        .map(|(v, a)| a.ok_or_else(|| Error::input(format!("vertex {v} was never assigned"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(KMeansOutcome {
        partition: Partition::new(assignment, k)?,
        balanced: report.balanced,
        imbalance: report.imbalance,
        converged,
        state,
        iterations,
        log: world.log().clone(),
    })
}
