//! Simulated distributed execution.
//!
//! A [`RankWorld`] splits the points over `p` logical ranks. Rank-local work
//! runs through [`RankWorld::map_ranks`] (sequentially or on the rayon pool),
//! and ranks only exchange data through the collectives defined here. Every
//! collective merges contributions in a fixed order and real-valued sums are
//! exact (see [`ExactSum`]), so results are bit-identical for any rank count
//! and any scheduling.

mod exact;
mod log;

pub use exact::ExactSum;
pub use log::{CollectiveKind, CollectiveLog, CollectiveStats};

use crate::exec::Execution;
use crate::geometry::{Point, SfcKey};
use crate::mesh::GeometricGraph;
use crate::{Error, Result};

/// The points owned by one rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Shard {
    pub global_ids: Vec<usize>,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl Shard {
    pub fn len(&self) -> usize {
        self.global_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.global_ids.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct RankWorld {
    shards: Vec<Shard>,
    n: usize,
    exec: Execution,
    log: CollectiveLog,
}

/// Start offset of rank `r` when `n` items are split into `p` contiguous
/// chunks of size `ceil(n/p)` or `floor(n/p)`.
fn chunk_start(n: usize, p: usize, r: usize) -> usize {
    r * n / p
}

impl RankWorld {
    /// Distributes the vertices of `graph` over `p` ranks in contiguous id
    /// ranges.
    pub fn scatter(graph: &GeometricGraph, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::input("rank count must be at least 1"));
        }
        let n = graph.num_vertices();
        let shards = (0..p)
            .map(|r| {
                let range = chunk_start(n, p, r)..chunk_start(n, p, r + 1);
                Shard {
                    global_ids: range.clone().collect(),
                    points: graph.coords()[range.clone()].to_vec(),
                    weights: graph.vertex_weights()[range].to_vec(),
                }
            })
            .collect();
        Ok(RankWorld {
            shards,
            n,
            exec: Execution::default(),
            log: CollectiveLog::default(),
        })
    }

    /// Builds a world from explicit shards. The shards must partition
    /// `0..n` for some `n`.
    pub fn from_shards(shards: Vec<Shard>) -> Result<Self> {
        if shards.is_empty() {
            return Err(Error::input("rank count must be at least 1"));
        }
        let n: usize = shards.iter().map(Shard::len).sum();
        let mut seen = vec![false; n];
        for s in &shards {
            if s.points.len() != s.len() || s.weights.len() != s.len() {
                return Err(Error::input("shard fields have different lengths"));
            }
            for &g in &s.global_ids {
                if g >= n || std::mem::replace(&mut seen[g], true) {
                    return Err(Error::input(format!(
                        "global id {g} is out of range or owned twice"
                    )));
                }
            }
        }
        Ok(RankWorld {
            shards,
            n,
            exec: Execution::default(),
            log: CollectiveLog::default(),
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    pub fn num_ranks(&self) -> usize {
        self.shards.len()
    }

    /// Total number of points over all ranks.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn shards(&self) -> &[Shard] {
        &self.shards
    }

    pub fn log(&self) -> &CollectiveLog {
        &self.log
    }

    /// Runs `f` once per rank; results come back in rank order.
    pub fn map_ranks<R, F>(&self, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize, &Shard) -> R + Sync + Send,
    {
        let ranks: Vec<(usize, &Shard)> = self.shards.iter().enumerate().collect();
        self.exec.map(&ranks, |(r, s)| f(*r, s))
    }

    /// Like [`map_ranks`](Self::map_ranks), pairing each shard with one
    /// element of rank-local mutable state.
    pub fn map_ranks_with<S, R, F>(&self, state: &mut [S], f: F) -> Vec<R>
    where
        S: Send,
        R: Send,
        F: Fn(usize, &Shard, &mut S) -> R + Sync + Send,
    {
        assert_eq!(state.len(), self.num_ranks(), "one state per rank");
        let mut items: Vec<(usize, &Shard, &mut S)> = self
            .shards
            .iter()
            .zip(state.iter_mut())
            .enumerate()
            .map(|(r, (s, st))| (r, s, st))
            .collect();
        self.exec.map_mut(&mut items, |(r, s, st)| f(*r, s, st))
    }

    fn check_contributions<T>(&self, contributions: &[Vec<T>]) -> Result<usize> {
        if contributions.len() != self.num_ranks() {
            return Err(Error::input(format!(
                "expected {} contributions, got {}",
                self.num_ranks(),
                contributions.len()
            )));
        }
        let len = contributions[0].len();
        if contributions.iter().any(|c| c.len() != len) {
            return Err(Error::input("contributions have different lengths"));
        }
        Ok(len)
    }

    /// Element-wise sum over ranks. The sum is exact before the final
    /// rounding, so it does not depend on how values were split over ranks.
    pub fn allreduce_sum(&mut self, contributions: &[Vec<f64>]) -> Result<Vec<f64>> {
        let len = self.check_contributions(contributions)?;
        let mut acc = vec![ExactSum::new(); len];
        for c in contributions {
            for (a, &x) in acc.iter_mut().zip(c) {
                a.add(x);
            }
        }
        self.log
            .record(CollectiveKind::SumReduce, len * self.num_ranks());
        Ok(acc.iter().map(ExactSum::value).collect())
    }

    /// Sum of rank-local exact accumulators.
    pub fn allreduce_exact(&mut self, contributions: &[Vec<ExactSum>]) -> Result<Vec<f64>> {
        let len = self.check_contributions(contributions)?;
        let mut acc = vec![ExactSum::new(); len];
        for c in contributions {
            for (a, x) in acc.iter_mut().zip(c) {
                a.merge(x);
            }
        }
        self.log
            .record(CollectiveKind::SumReduce, len * self.num_ranks());
        Ok(acc.iter().map(ExactSum::value).collect())
    }

    /// Element-wise maximum over ranks.
    pub fn allreduce_max(&mut self, contributions: &[Vec<f64>]) -> Result<Vec<f64>> {
        let len = self.check_contributions(contributions)?;
        let mut acc = vec![f64::NEG_INFINITY; len];
        for c in contributions {
            for (a, &x) in acc.iter_mut().zip(c) {
                *a = a.max(x);
            }
        }
        self.log
            .record(CollectiveKind::MaxReduce, len * self.num_ranks());
        Ok(acc)
    }

    /// Element-wise sum of integer counters.
    pub fn allreduce_count(&mut self, contributions: &[Vec<u64>]) -> Result<Vec<u64>> {
        let len = self.check_contributions(contributions)?;
        let mut acc = vec![0u64; len];
        for c in contributions {
            for (a, &x) in acc.iter_mut().zip(c) {
                *a += x;
            }
        }
        self.log
            .record(CollectiveKind::SumReduce, len * self.num_ranks());
        Ok(acc)
    }

    /// Weighted cluster means from per-rank moments. `None` marks a cluster
    /// with zero total weight.
    pub fn weighted_mean_reduce(
        &mut self,
        partials: &[ClusterMoments],
    ) -> Result<Vec<Option<Point>>> {
        if partials.len() != self.num_ranks() {
            return Err(Error::input(format!(
                "expected {} partial moments, got {}",
                self.num_ranks(),
                partials.len()
            )));
        }
        let (k, dim) = (partials[0].k, partials[0].dim);
        if partials.iter().any(|m| m.k != k || m.dim != dim) {
            return Err(Error::input("partial moments disagree on k or dimension"));
        }
        let mut total = ClusterMoments::new(k, dim);
        for m in partials {
            for (a, b) in total.sums.iter_mut().zip(&m.sums) {
                a.merge(b);
            }
            for (a, b) in total.weights.iter_mut().zip(&m.weights) {
                a.merge(b);
            }
        }
        self.log
            .record(CollectiveKind::SumReduce, k * (dim + 1) * self.num_ranks());
        Ok((0..k)
            .map(|c| {
                let w = total.weights[c].value();
                if w <= 0.0 {
                    return None;
                }
                let mut p = Point::zero(dim);
                for (axis, v) in p.coords_mut().iter_mut().enumerate() {
                    *v = total.sums[c * dim + axis].value() / w;
                }
                Some(p)
            })
            .collect())
    }

    /// Collects one value per point into a vector indexed by global id.
    pub fn gather<T: Clone + Default>(&mut self, per_rank: &[Vec<T>]) -> Result<Vec<T>> {
        if per_rank.len() != self.num_ranks() {
            return Err(Error::input("gather needs one vector per rank"));
        }
        let mut out = vec![T::default(); self.n];
        for (shard, values) in self.shards.iter().zip(per_rank) {
            if values.len() != shard.len() {
                return Err(Error::input("gather vector length differs from shard size"));
            }
            for (&g, v) in shard.global_ids.iter().zip(values) {
                out[g] = v.clone();
            }
        }
        self.log.record(CollectiveKind::Gather, self.n);
        Ok(out)
    }

    /// Globally orders all points by `(key, global id)` and re-splits them into
    /// `p` contiguous near-equal shards. The order depends only on the input
    /// multiset, never on the current shard layout.
    pub fn global_sort_redistribute(mut self, keys: &[Vec<SfcKey>]) -> Result<RankWorld> {
        if keys.len() != self.num_ranks()
            || keys
                .iter()
                .zip(&self.shards)
                .any(|(k, s)| k.len() != s.len())
        {
            return Err(Error::input("need one key per owned point"));
        }
        // Gather, sort, scatter. A sample sort would give the same order.
        let mut all: Vec<(SfcKey, usize, Point, f64)> = Vec::with_capacity(self.n);
        for (shard, ks) in self.shards.iter().zip(keys) {
            for (i, &key) in ks.iter().enumerate() {
                all.push((key, shard.global_ids[i], shard.points[i], shard.weights[i]));
            }
        }
        all.sort_unstable_by_key(|e| (e.0, e.1));
        let p = self.num_ranks();
        let n = self.n;
        self.shards = (0..p)
            .map(|r| {
                let chunk = &all[chunk_start(n, p, r)..chunk_start(n, p, r + 1)];
                Shard {
                    global_ids: chunk.iter().map(|e| e.1).collect(),
                    points: chunk.iter().map(|e| e.2).collect(),
                    weights: chunk.iter().map(|e| e.3).collect(),
                }
            })
            .collect();
        self.log.record(CollectiveKind::SortRedistribute, n);
        Ok(self)
    }

    /// Point at a global position of the current (sorted) order. Positions
    /// map to ranks through the contiguous split, so only the owning rank's
    /// value is broadcast.
    pub fn point_at(&mut self, position: usize) -> Result<Point> {
        if position >= self.n {
            return Err(Error::input(format!(
                "position {position} >= n = {}",
                self.n
            )));
        }
        let mut offset = 0;
        for shard in &self.shards {
            if position < offset + shard.len() {
                self.log.record(CollectiveKind::Broadcast, 1);
                return Ok(shard.points[position - offset]);
            }
            offset += shard.len();
        }
        unreachable!("positions below n are owned by some shard")
    }
}

/// Rank-local weighted coordinate sums and weights per cluster.
#[derive(Debug, Clone)]
pub struct ClusterMoments {
    k: usize,
    dim: usize,
    sums: Vec<ExactSum>,
    weights: Vec<ExactSum>,
}

impl ClusterMoments {
    pub fn new(k: usize, dim: usize) -> Self {
        ClusterMoments {
            k,
            dim,
            sums: vec![ExactSum::new(); k * dim],
            weights: vec![ExactSum::new(); k],
        }
    }

    /// From plain row-major `k x dim` sums and `k` weights.
    pub fn from_dense(k: usize, dim: usize, sums: &[f64], weights: &[f64]) -> Result<Self> {
        if sums.len() != k * dim || weights.len() != k {
            return Err(Error::input("moment matrix has the wrong shape"));
        }
        let mut m = ClusterMoments::new(k, dim);
        for (a, &x) in m.sums.iter_mut().zip(sums) {
            a.add(x);
        }
        for (a, &x) in m.weights.iter_mut().zip(weights) {
            a.add(x);
        }
        Ok(m)
    }

    #[inline]
    pub fn add(&mut self, cluster: usize, p: &Point, weight: f64) {
        for (axis, &x) in p.coords().iter().enumerate() {
            self.sums[cluster * self.dim + axis].add(weight * x);
        }
        self.weights[cluster].add(weight);
    }
}
