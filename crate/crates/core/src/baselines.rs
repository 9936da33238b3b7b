//! Reference geometric partitioners: recursive coordinate bisection and
//! Hilbert curve splitting.

use crate::exec::Execution;
use crate::geometry::{default_depth, hilbert_key, BoundingBox};
use crate::mesh::{GeometricGraph, Partition};
use crate::{Error, Result};

fn check_k(graph: &GeometricGraph, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::input("k must be at least 1"));
    }
    if k > graph.num_vertices() {
        return Err(Error::input(format!(
            "k = {k} exceeds the vertex count {}",
            graph.num_vertices()
        )));
    }
    Ok(())
}

/// Recursive coordinate bisection.
///
/// Each step cuts the current vertex set orthogonally to its widest axis at
/// the weighted position that splits the block budget `ceil(k/2) : floor(k/2)`.
/// Vertices with equal coordinates are ordered by id.
pub fn rcb_partition(graph: &GeometricGraph, k: usize) -> Result<Partition> {
    rcb_partition_with(graph, k, Execution::default())
}

pub fn rcb_partition_with(graph: &GeometricGraph, k: usize, exec: Execution) -> Result<Partition> {
    check_k(graph, k)?;
    let mut ids: Vec<usize> = (0..graph.num_vertices()).collect();
    let mut assignment = vec![0usize; graph.num_vertices()];
    let pieces = bisect(graph, &mut ids, k, 0, exec);
    for (block, members) in pieces {
        for v in members {
            assignment[v] = block;
        }
    }
    Partition::new(assignment, k)
}

/// Splits `ids` into `k` blocks numbered from `first`; returns the members of
/// each block.
fn bisect(
    graph: &GeometricGraph,
    ids: &mut [usize],
    k: usize,
    first: usize,
    exec: Execution,
) -> Vec<(usize, Vec<usize>)> {
    if k == 1 {
        return vec![(first, ids.to_vec())];
    }
    let coords = graph.coords();
    let weights = graph.vertex_weights();
    let bbox = BoundingBox::around(ids.iter().map(|&v| &coords[v])).expect("nonempty block");
    let axis = (0..bbox.dim())
        .max_by(|&a, &b| bbox.extent(a).total_cmp(&bbox.extent(b)).then(b.cmp(&a)))
        .unwrap();
    ids.sort_unstable_by(|&a, &b| {
        coords[a]
            .get(axis)
            .total_cmp(&coords[b].get(axis))
            .then(a.cmp(&b))
    });

    let k_left = k.div_ceil(2);
    let total: f64 = ids.iter().map(|&v| weights[v]).sum();
    let target = total * k_left as f64 / k as f64;
    // Weighted median: the prefix whose weight is closest to the target,
    // leaving at least one vertex per block on each side.
    let mut best = (f64::INFINITY, k_left);
    let mut prefix = 0.0;
    let hi = ids.len() - (k - k_left);
    for (i, &v) in ids.iter().enumerate().take(hi) {
        prefix += weights[v];
        let cut = i + 1;
        if cut < k_left {
            continue;
        }
        let err = (prefix - target).abs();
        if err < best.0 {
            best = (err, cut);
        }
    }
    let (left, right) = ids.split_at_mut(best.1);
    let (mut a, b) = exec.join(
        || bisect(graph, left, k_left, first, exec),
        || bisect(graph, right, k - k_left, first + k_left, exec),
    );
    a.extend(b);
    a
}

/// Hilbert curve partitioning: sort by key (ties by id) and cut the sequence
/// at multiples of `total_weight / k`. A vertex goes to the block containing
/// the midpoint of its weight interval.
pub fn sfc_partition(graph: &GeometricGraph, k: usize) -> Result<Partition> {
    check_k(graph, k)?;
    let bbox = graph.bounding_box().expect("k <= n implies a vertex");
    let depth = default_depth(graph.dim());
    let mut order: Vec<(u64, usize)> = graph
        .coords()
        .iter()
        .enumerate()
        .map(|(v, p)| hilbert_key(p, &bbox, depth).map(|key| (key.value, v)))
        .collect::<Result<_>>()?;
    order.sort_unstable();

    let weights = graph.vertex_weights();
    let total: f64 = weights.iter().sum();
    let mut assignment = vec![0usize; graph.num_vertices()];
    let mut before = 0.0;
    for &(_, v) in &order {
        let mid = before + weights[v] / 2.0;
        assignment[v] = ((mid * k as f64 / total).floor() as usize).min(k - 1);
        before += weights[v];
    }
    Partition::new(assignment, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::mesh::{
        generate_grid_mesh, generate_random_geometric, random_geometric_from_points,
    };

    fn collinear(n: usize) -> GeometricGraph {
        let pts = (0..n).map(|i| Point::xy(i as f64, 0.0)).collect();
        random_geometric_from_points(pts, 1.0, Execution::Sequential).unwrap()
    }

    #[test]
    fn rcb_examples() {
        let g = collinear(4);
        assert_eq!(rcb_partition(&g, 2).unwrap().assignment(), &[0, 0, 1, 1]);
        assert!(rcb_partition(&g, 1)
            .unwrap()
            .assignment()
            .iter()
            .all(|&b| b == 0));
        assert!(rcb_partition(&g, 5).is_err());
        assert!(rcb_partition(&g, 0).is_err());

        // 4x4 grid into quadrants: x first, then y within each half.
        let g = generate_grid_mesh(4, 2).unwrap();
        let p = rcb_partition(&g, 4).unwrap();
        for v in 0..16 {
            let (x, y) = (v % 4, v / 4);
            let expected = (x / 2) * 2 + y / 2;
            assert_eq!(p.block(v), expected, "vertex ({x},{y})");
        }
    }

    #[test]
    fn rcb_odd_k_splits_budget() {
        let g = collinear(9);
        let p = rcb_partition(&g, 3).unwrap();
        assert_eq!(p.block_sizes(), vec![3, 3, 3]);
        let p = rcb_partition(&generate_grid_mesh(10, 2).unwrap(), 5).unwrap();
        assert_eq!(p.block_sizes(), vec![20; 5]);
    }

    #[test]
    fn rcb_is_mirror_symmetric_on_grids() {
        let g = generate_grid_mesh(8, 2).unwrap();
        let p = rcb_partition(&g, 2).unwrap();
        for v in 0..64 {
            let (x, y) = (v % 8, v / 8);
            let mirror = (7 - x) + 8 * y;
            assert_ne!(p.block(v), p.block(mirror));
        }
    }

    #[test]
    fn sequential_and_parallel_rcb_agree() {
        let g = generate_random_geometric(3000, 3, 8.0, 4).unwrap();
        assert_eq!(
            rcb_partition_with(&g, 13, Execution::Sequential).unwrap(),
            rcb_partition_with(&g, 13, Execution::Parallel).unwrap()
        );
    }

    #[test]
    fn sfc_examples() {
        let g = generate_grid_mesh(6, 2).unwrap();
        assert!(sfc_partition(&g, 1)
            .unwrap()
            .assignment()
            .iter()
            .all(|&b| b == 0));
        let p = sfc_partition(&g, 36).unwrap();
        assert_eq!(p.block_sizes(), vec![1; 36]);
        for k in [2, 3, 4, 6, 9, 12, 18] {
            assert_eq!(
                sfc_partition(&g, k).unwrap().block_sizes(),
                vec![36 / k; k],
                "k = {k}"
            );
        }
        assert!(sfc_partition(&g, 37).is_err());
    }

    #[test]
    fn sfc_blocks_are_contiguous_on_the_curve() {
        let g = generate_random_geometric(2000, 2, 8.0, 1).unwrap();
        let p = sfc_partition(&g, 7).unwrap();
        let bbox = g.bounding_box().unwrap();
        let mut order: Vec<(u64, usize)> = g
            .coords()
            .iter()
            .enumerate()
            .map(|(v, c)| (hilbert_key(c, &bbox, 31).unwrap().value, v))
            .collect();
        order.sort();
        let blocks: Vec<usize> = order.iter().map(|&(_, v)| p.block(v)).collect();
        assert!(blocks.windows(2).all(|w| w[0] <= w[1]));
    }
}
