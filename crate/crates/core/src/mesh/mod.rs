//! The geometric graph data model, file formats and synthetic meshes.

mod generate;
mod io;

pub use generate::{
    generate_grid_mesh, generate_random_geometric, random_geometric_from_points, rgg_radius,
};
pub use io::{
    load_metis_graph, read_partition, write_coordinates, write_metis_graph, write_partition,
};

use crate::geometry::{BoundingBox, Point};
use crate::{Error, Result};

/// Undirected graph in compressed adjacency form with a point per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricGraph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    edge_weights: Option<Vec<f64>>,
    coords: Vec<Point>,
    vertex_weights: Vec<f64>,
}

impl GeometricGraph {
    /// Validates and assembles a graph. `edge_weights`, when present, is
    /// parallel to `neighbors`; `vertex_weights` defaults to all ones.
    pub fn new(
        offsets: Vec<usize>,
        neighbors: Vec<usize>,
        edge_weights: Option<Vec<f64>>,
        coords: Vec<Point>,
        vertex_weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = coords.len();
        let vertex_weights = vertex_weights.unwrap_or_else(|| vec![1.0; n]);
        if offsets.len() != n + 1 || offsets[0] != 0 || offsets[n] != neighbors.len() {
            return Err(Error::input("adjacency offsets do not match vertex count"));
        }
        if offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::input("adjacency offsets must be nondecreasing"));
        }
        if vertex_weights.len() != n {
            return Err(Error::input(
                "vertex weight count differs from vertex count",
            ));
        }
        if let Some(w) = vertex_weights
            .iter()
            .find(|w| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::input(format!("vertex weight {w} is not positive")));
        }
        if let Some(ew) = &edge_weights {
            if ew.len() != neighbors.len() {
                return Err(Error::input(
                    "edge weight count differs from adjacency size",
                ));
            }
            if let Some(w) = ew.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
                return Err(Error::input(format!("edge weight {w} is not positive")));
            }
        }
        if let Some(first) = coords.first() {
            if coords.iter().any(|p| p.dim() != first.dim()) {
                return Err(Error::input("points have mixed dimensions"));
            }
        }

        let graph = GeometricGraph {
            offsets,
            neighbors,
            edge_weights,
            coords,
            vertex_weights,
        };
        graph.check_symmetry()?;
        Ok(graph)
    }

    fn check_symmetry(&self) -> Result<()> {
        let n = self.num_vertices();
        for u in 0..n {
            let row = self.neighbors(u);
            for (slot, &v) in row.iter().enumerate() {
                if v >= n {
                    return Err(Error::input(format!("vertex {u} lists neighbor {v} >= n")));
                }
                if v == u {
                    return Err(Error::input(format!("self-loop at vertex {u}")));
                }
                if row[..slot].contains(&v) {
                    return Err(Error::input(format!("duplicate edge {u}-{v}")));
                }
                let back = self.neighbors(v).iter().position(|&x| x == u);
                let Some(back) = back else {
                    return Err(Error::input(format!("edge {u}->{v} has no reverse edge")));
                };
                if let Some(ew) = &self.edge_weights {
                    if ew[self.offsets[u] + slot] != ew[self.offsets[v] + back] {
                        return Err(Error::input(format!("edge {u}-{v} has asymmetric weight")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len()
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn dim(&self) -> usize {
        self.coords.first().map_or(2, Point::dim)
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.num_vertices())
            .map(|v| self.degree(v))
            .max()
            .unwrap_or(0)
    }

    /// Neighbors of `v` paired with edge weights (1 when unweighted).
    pub fn weighted_neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        let weights = self.edge_weights.as_ref().map(|w| &w[range.clone()]);
        self.neighbors[range]
            .iter()
            .enumerate()
            .map(move |(i, &u)| (u, weights.map_or(1.0, |w| w[i])))
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn adjacency(&self) -> &[usize] {
        &self.neighbors
    }

    pub fn edge_weights(&self) -> Option<&[f64]> {
        self.edge_weights.as_deref()
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn vertex_weights(&self) -> &[f64] {
        &self.vertex_weights
    }

    pub fn has_unit_vertex_weights(&self) -> bool {
        self.vertex_weights.iter().all(|&w| w == 1.0)
    }

    pub fn total_weight(&self) -> f64 {
        self.vertex_weights.iter().sum()
    }

    pub fn bounding_box(&self) -> Option<BoundingBox> {
        BoundingBox::around(&self.coords)
    }
}

/// Block assignment of every vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::input("block count must be at least 1"));
        }
        if let Some(b) = assignment.iter().find(|&&b| b >= k) {
            return Err(Error::input(format!("block id {b} is not below k = {k}")));
        }
        Ok(Partition { assignment, k })
    }

    /// Uses `max id + 1` as the block count.
    pub fn from_assignment(assignment: Vec<usize>) -> Result<Self> {
        let k = assignment.iter().max().map_or(1, |m| m + 1);
        Partition::new(assignment, k)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    #[inline]
    pub fn block(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &b in &self.assignment {
            sizes[b] += 1;
        }
        sizes
    }

    /// Blocks that received no vertex.
    pub fn empty_blocks(&self) -> Vec<usize> {
        self.block_sizes()
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 0)
            .map(|(b, _)| b)
            .collect()
    }
}
