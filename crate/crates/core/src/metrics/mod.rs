//! Partition quality: edge cut, communication volume, imbalance and block
//! diameters, plus the mean helpers used to aggregate them.

mod diameter;
mod report;

pub use diameter::{block_diameter_lb, DiameterBound, IFUB_ROUNDS};
pub use report::MetricsReport;

use crate::exec::Execution;
use crate::mesh::{GeometricGraph, Partition};
use crate::partitioner::imbalance_of;
use crate::{Error, Result};

fn check_cover(graph: &GeometricGraph, part: &Partition) -> Result<()> {
    if part.len() != graph.num_vertices() {
        return Err(Error::input(format!(
            "partition has {} entries but the graph has {} vertices",
            part.len(),
            graph.num_vertices()
        )));
    }
    Ok(())
}

/// Total weight of edges whose endpoints lie in different blocks, each
/// undirected edge counted once.
pub fn edge_cut(graph: &GeometricGraph, part: &Partition) -> Result<f64> {
    check_cover(graph, part)?;
    let mut cut = 0.0;
    for u in 0..graph.num_vertices() {
        for (w, weight) in graph.weighted_neighbors(u) {
            if u < w && part.block(u) != part.block(w) {
                cut += weight;
            }
        }
    }
    Ok(cut)
}

/// Number of foreign blocks adjacent to `v`.
fn foreign_blocks(
    graph: &GeometricGraph,
    part: &Partition,
    v: usize,
    seen: &mut Vec<usize>,
) -> usize {
    let own = part.block(v);
    seen.clear();
    for &w in graph.neighbors(v) {
        let b = part.block(w);
        if b != own && !seen.contains(&b) {
            seen.push(b);
        }
    }
    seen.len()
}

/// Communication volume of every block: for each vertex of the block, the
/// number of other blocks holding one of its neighbors.
pub fn block_comm(graph: &GeometricGraph, part: &Partition) -> Result<Vec<usize>> {
    check_cover(graph, part)?;
    let mut comm = vec![0usize; part.k()];
    let mut seen = Vec::new();
    for v in 0..graph.num_vertices() {
        comm[part.block(v)] += foreign_blocks(graph, part, v, &mut seen);
    }
    Ok(comm)
}

/// `(max, total)` communication volume over blocks.
pub fn comm_volumes(graph: &GeometricGraph, part: &Partition) -> Result<(usize, usize)> {
    let comm = block_comm(graph, part)?;
    Ok((comm.iter().copied().max().unwrap_or(0), comm.iter().sum()))
}

pub fn block_weights(graph: &GeometricGraph, part: &Partition) -> Result<Vec<f64>> {
    check_cover(graph, part)?;
    let mut weights = vec![0.0; part.k()];
    for (v, &w) in graph.vertex_weights().iter().enumerate() {
        weights[part.block(v)] += w;
    }
    Ok(weights)
}

/// `max_c w(c) / ceil(total / k) - 1`.
pub fn imbalance(graph: &GeometricGraph, part: &Partition) -> Result<f64> {
    Ok(imbalance_of(&block_weights(graph, part)?))
}

/// Harmonic mean of block diameters. Unbounded blocks contribute a zero
/// reciprocal, a zero diameter makes the mean zero, and the mean is
/// unbounded only when every block is.
pub fn harmonic_mean_diameter(diameters: &[DiameterBound]) -> Result<Option<f64>> {
    if diameters.is_empty() {
        return Err(Error::input("harmonic mean of an empty list"));
    }
    let sum: f64 = diameters.iter().map(|d| d.reciprocal()).sum();
    if sum == 0.0 {
        return Ok(None);
    }
    Ok(Some(diameters.len() as f64 / sum))
}

/// Geometric mean of positive values.
pub fn geometric_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::input("geometric mean of an empty list"));
    }
    if values
        .iter()
        .any(|&v| v.is_nan() || v <= 0.0 || v.is_infinite())
    {
        return Err(Error::input("geometric mean needs positive finite values"));
    }
    let log_sum: f64 = values.iter().map(|v| v.ln()).sum();
    Ok((log_sum / values.len() as f64).exp())
}

/// Harmonic mean of positive values; infinite entries contribute zero.
pub fn harmonic_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::input("harmonic mean of an empty list"));
    }
    if values.iter().any(|&v| v.is_nan() || v < 0.0) {
        return Err(Error::input("harmonic mean needs nonnegative values"));
    }
    let sum: f64 = values.iter().map(|v| 1.0 / v).sum();
    Ok(values.len() as f64 / sum)
}

/// Evaluates every metric; per-block diameters run in parallel.
pub fn evaluate(graph: &GeometricGraph, part: &Partition) -> Result<MetricsReport> {
    evaluate_with(graph, part, Execution::default())
}

pub fn evaluate_with(
    graph: &GeometricGraph,
    part: &Partition,
    exec: Execution,
) -> Result<MetricsReport> {
    check_cover(graph, part)?;
    let empty = part.empty_blocks();
    if let Some(&b) = empty.first() {
        return Err(Error::input(format!("block {b} is empty")));
    }
    let per_block_comm = block_comm(graph, part)?;
    let diameters = exec
        .map_range(part.k(), |b| block_diameter_lb(graph, part, b))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let weights = block_weights(graph, part)?;
    Ok(MetricsReport {
        edge_cut: edge_cut(graph, part)?,
        max_comm: per_block_comm.iter().copied().max().unwrap_or(0),
        total_comm: per_block_comm.iter().sum(),
        imbalance: imbalance_of(&weights),
        harmonic_mean_diameter: harmonic_mean_diameter(&diameters)?,
        per_block_diameter_lb: diameters,
        per_block_comm,
        block_weights: weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::mesh::{generate_random_geometric, random_geometric_from_points};
    use proptest::prelude::*;
    use std::collections::{BTreeSet, VecDeque};

    fn path4() -> GeometricGraph {
        let pts = (0..4).map(|i| Point::xy(i as f64, 0.0)).collect();
        random_geometric_from_points(pts, 1.0, Execution::Sequential).unwrap()
    }

    fn star(leaves: usize) -> GeometricGraph {
        let mut offsets = vec![0, leaves];
        let mut neighbors: Vec<usize> = (1..=leaves).collect();
        for _ in 0..leaves {
            neighbors.push(0);
            offsets.push(neighbors.len());
        }
        let coords = (0..=leaves).map(|i| Point::xy(i as f64, 0.0)).collect();
        GeometricGraph::new(offsets, neighbors, None, coords, None).unwrap()
    }

    #[test]
    fn path_examples() {
        let g = path4();
        let p = Partition::new(vec![0, 0, 1, 1], 2).unwrap();
        assert_eq!(edge_cut(&g, &p).unwrap(), 1.0);
        assert_eq!(comm_volumes(&g, &p).unwrap(), (1, 2));
        let one = Partition::new(vec![0; 4], 1).unwrap();
        assert_eq!(edge_cut(&g, &one).unwrap(), 0.0);
        assert_eq!(comm_volumes(&g, &one).unwrap(), (0, 0));
        assert!(edge_cut(&g, &Partition::new(vec![0; 3], 1).unwrap()).is_err());
    }

    #[test]
    fn star_center_sees_three_blocks() {
        let g = star(6);
        let p = Partition::new(vec![0, 1, 1, 2, 2, 3, 3], 4).unwrap();
        assert_eq!(block_comm(&g, &p).unwrap(), vec![3, 2, 2, 2]);
    }

    #[test]
    fn aggregation_examples() {
        use DiameterBound::*;
        assert_eq!(
            harmonic_mean_diameter(&[Finite(2), Finite(2)]).unwrap(),
            Some(2.0)
        );
        assert_eq!(
            harmonic_mean_diameter(&[Finite(1), Unbounded]).unwrap(),
            Some(2.0)
        );
        assert_eq!(harmonic_mean_diameter(&[Unbounded]).unwrap(), None);
        assert_eq!(
            harmonic_mean_diameter(&[Finite(0), Finite(5)]).unwrap(),
            Some(0.0)
        );
        assert!((geometric_mean(&[1.0, 4.0]).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(harmonic_mean(&[1.0, f64::INFINITY]).unwrap(), 2.0);
        assert!(geometric_mean(&[]).is_err());
        assert!(geometric_mean(&[0.0]).is_err());
    }

    #[test]
    fn evaluate_reports_everything() {
        let g = path4();
        let p = Partition::new(vec![0, 0, 1, 1], 2).unwrap();
        let r = evaluate(&g, &p).unwrap();
        assert_eq!(r.edge_cut, 1.0);
        assert_eq!((r.max_comm, r.total_comm), (1, 2));
        assert_eq!(r.imbalance, 0.0);
        assert_eq!(r.per_block_diameter_lb, vec![DiameterBound::Finite(1); 2]);
        assert_eq!(r.harmonic_mean_diameter, Some(1.0));
        assert_eq!(r.block_weights, vec![2.0, 2.0]);
        assert!(evaluate(&g, &Partition::new(vec![0; 4], 2).unwrap()).is_err());
    }

    fn exact_diameter(g: &GeometricGraph, p: &Partition, block: usize) -> Option<usize> {
        let members: Vec<usize> = (0..g.num_vertices())
            .filter(|&v| p.block(v) == block)
            .collect();
        let mut best = 0;
        for &s in &members {
            let mut dist = vec![usize::MAX; g.num_vertices()];
            dist[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &w in g.neighbors(u) {
                    if p.block(w) == block && dist[w] == usize::MAX {
                        dist[w] = dist[u] + 1;
                        q.push_back(w);
                    }
                }
            }
            for &v in &members {
                if dist[v] == usize::MAX {
                    return None;
                }
                best = best.max(dist[v]);
            }
        }
        Some(best)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn metrics_match_definitions(n in 20usize..300, k in 1usize..8, seed in any::<u64>()) {
            let g = generate_random_geometric(n, 2, 6.0, seed).unwrap();
            let assignment: Vec<usize> = (0..n).map(|v| (v.wrapping_mul(2654435761) ^ seed as usize) % k).collect();
            let p = Partition::new(assignment.clone(), k).unwrap();

            let mut cut = 0.0;
            let mut comm = vec![0usize; k];
            for u in 0..n {
                let foreign: BTreeSet<usize> = g.neighbors(u).iter().map(|&w| assignment[w]).filter(|&b| b != assignment[u]).collect();
                comm[assignment[u]] += foreign.len();
                for &w in g.neighbors(u) {
                    if u < w && assignment[u] != assignment[w] {
                        cut += 1.0;
                    }
                }
            }
            prop_assert_eq!(edge_cut(&g, &p).unwrap(), cut);
            prop_assert_eq!(block_comm(&g, &p).unwrap(), comm.clone());
            let (mx, tot) = comm_volumes(&g, &p).unwrap();
            prop_assert!(mx <= tot);
            prop_assert!(2.0 * cut <= (tot * g.max_degree()) as f64);
            let boundary = (0..n).filter(|&u| g.neighbors(u).iter().any(|&w| assignment[w] != assignment[u])).count();
            prop_assert!(tot >= boundary);

            // Relabeling blocks leaves every metric unchanged.
            let relabeled = Partition::new(assignment.iter().map(|&b| k - 1 - b).collect(), k).unwrap();
            prop_assert_eq!(edge_cut(&g, &relabeled).unwrap(), cut);
            prop_assert_eq!(comm_volumes(&g, &relabeled).unwrap(), (mx, tot));
            prop_assert_eq!(imbalance(&g, &relabeled).unwrap(), imbalance(&g, &p).unwrap());

            for b in 0..k {
                if p.empty_blocks().contains(&b) {
                    continue;
                }
                let lb = block_diameter_lb(&g, &p, b).unwrap();
                match exact_diameter(&g, &p, b) {
                    None => prop_assert_eq!(lb, DiameterBound::Unbounded),
                    Some(d) => match lb {
                        DiameterBound::Finite(l) => prop_assert!(l <= d),
                        DiameterBound::Unbounded => prop_assert!(false, "connected block reported unbounded"),
                    },
                }
            }
        }
    }
}
