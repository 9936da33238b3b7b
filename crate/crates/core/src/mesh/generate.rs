//! Seeded random geometric graphs and structured grid meshes.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GeometricGraph;
use crate::exec::Execution;
use crate::geometry::{BoundingBox, Point};
use crate::{Error, Result};

/// Connection radius giving an expected degree of `avg_degree` for `n`
/// uniform points in the unit square or cube, ignoring boundary effects.
pub fn rgg_radius(n: usize, dim: usize, avg_degree: f64) -> f64 {
    let n = n as f64;
    match dim {
        2 => (avg_degree / (PI * n)).sqrt(),
        _ => (3.0 * avg_degree / (4.0 * PI * n)).cbrt(),
    }
}

/// `n` seeded uniform points in the unit hypercube, joined when within the
/// radius that targets `avg_degree` neighbors per vertex.
pub fn generate_random_geometric(
    n: usize,
    dim: usize,
    avg_degree: f64,
    seed: u64,
) -> Result<GeometricGraph> {
    if n < 2 {
        return Err(Error::input(
            "random geometric graphs need at least 2 vertices",
        ));
    }
    if !(2..=3).contains(&dim) {
        return Err(Error::input(format!("dimension must be 2 or 3, got {dim}")));
    }
    if !(avg_degree > 0.0 && avg_degree.is_finite()) {
        return Err(Error::input("average degree target must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Point> = (0..n)
        .map(|_| {
            let mut c = [0.0; 3];
            for v in c.iter_mut().take(dim) {
                *v = rng.gen::<f64>();
            }
            Point::new(&c[..dim]).expect("finite")
        })
        .collect();
    random_geometric_from_points(points, rgg_radius(n, dim, avg_degree), Execution::default())
}

/// Joins every pair of `points` at distance at most `radius`. Neighbor
/// search runs over a uniform cell grid with cell side at least `radius`,
/// so only the 3^d surrounding cells are inspected per point.
pub fn random_geometric_from_points(
    points: Vec<Point>,
    radius: f64,
    exec: Execution,
) -> Result<GeometricGraph> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::input("radius must be finite and nonnegative"));
    }
    let n = points.len();
    let Some(bbox) = BoundingBox::around(&points) else {
        return GeometricGraph::new(vec![0], vec![], None, points, None);
    };
    let dim = bbox.dim();

    let grid = CellGrid::new(&bbox, radius, n);
    let cell_of: Vec<usize> = points.iter().map(|p| grid.cell_index(p)).collect();
    // Counting sort of point ids by cell.
    let mut starts = vec![0usize; grid.num_cells() + 1];
    for &c in &cell_of {
        starts[c + 1] += 1;
    }
    for i in 0..grid.num_cells() {
        starts[i + 1] += starts[i];
    }
    let mut fill = starts.clone();
    let mut members = vec![0usize; n];
    for (i, &c) in cell_of.iter().enumerate() {
        members[fill[c]] = i;
        fill[c] += 1;
    }

    let r2 = radius * radius;
    let lists: Vec<Vec<usize>> = exec.map_range(n, |i| {
        let p = &points[i];
        let mut out = Vec::new();
        grid.for_each_adjacent_cell(p, |c| {
            for &j in &members[starts[c]..starts[c + 1]] {
                if j != i && p.dist2(&points[j]) <= r2 {
                    out.push(j);
                }
            }
        });
        out.sort_unstable();
        out
    });

    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut neighbors = Vec::with_capacity(lists.iter().map(Vec::len).sum());
    for list in lists {
        neighbors.extend(list);
        offsets.push(neighbors.len());
    }
    debug_assert!(points.iter().all(|p| p.dim() == dim));
    GeometricGraph::new(offsets, neighbors, None, points, None)
}

struct CellGrid {
    origin: Point,
    cell_side: [f64; 3],
    cells: [usize; 3],
    dim: usize,
}

impl CellGrid {
    fn new(bbox: &BoundingBox, radius: f64, n: usize) -> Self {
        let dim = bbox.dim();
        // Keep the grid at most ~2 cells per point.
        let budget = (2 * n.max(1)) as f64;
        let mut per_axis = [1usize; 3];
        let mut side = [f64::INFINITY; 3];
        let cap = budget.powf(1.0 / dim as f64).floor().max(1.0);
        for axis in 0..dim {
            let ext = bbox.extent(axis);
            let cells = if radius > 0.0 {
                (ext / radius).floor()
            } else {
                cap
            };
            let cells = cells.clamp(1.0, cap) as usize;
            per_axis[axis] = cells;
            side[axis] = if ext > 0.0 {
                ext / cells as f64
            } else {
                f64::INFINITY
            };
        }
        CellGrid {
            origin: *bbox.min(),
            cell_side: side,
            cells: per_axis,
            dim,
        }
    }

    fn num_cells(&self) -> usize {
        self.cells[..self.dim].iter().product()
    }

    fn coord(&self, p: &Point, axis: usize) -> usize {
        if !self.cell_side[axis].is_finite() {
            return 0;
        }
        let c = ((p.get(axis) - self.origin.get(axis)) / self.cell_side[axis]).floor();
        (c.max(0.0) as usize).min(self.cells[axis] - 1)
    }

    fn cell_index(&self, p: &Point) -> usize {
        let mut idx = 0;
        for axis in (0..self.dim).rev() {
            idx = idx * self.cells[axis] + self.coord(p, axis);
        }
        idx
    }

    fn for_each_adjacent_cell(&self, p: &Point, mut f: impl FnMut(usize)) {
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for axis in 0..self.dim {
            let c = self.coord(p, axis);
            lo[axis] = c.saturating_sub(1);
            hi[axis] = (c + 1).min(self.cells[axis] - 1);
        }
        let (zlo, zhi) = if self.dim == 3 {
            (lo[2], hi[2])
        } else {
            (0, 0)
        };
        for z in zlo..=zhi {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    f(x + self.cells[0] * (y + self.cells[1] * z));
                }
            }
        }
    }
}

/// `side^dim` vertices on the integer lattice, joined to their axis
/// neighbors. Vertex ids run x-fastest.
pub fn generate_grid_mesh(side: usize, dim: usize) -> Result<GeometricGraph> {
    if side < 2 {
        return Err(Error::input("grid side must be at least 2"));
    }
    if !(2..=3).contains(&dim) {
        return Err(Error::input(format!("dimension must be 2 or 3, got {dim}")));
    }
    let n = side.pow(dim as u32);
    let stride = [1, side, side * side];
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut neighbors = Vec::with_capacity(2 * dim * n);
    let mut coords = Vec::with_capacity(n);
    for v in 0..n {
        let pos: Vec<usize> = (0..dim).map(|a| (v / stride[a]) % side).collect();
        let mut list = Vec::with_capacity(2 * dim);
        for axis in 0..dim {
            if pos[axis] > 0 {
                list.push(v - stride[axis]);
            }
            if pos[axis] + 1 < side {
                list.push(v + stride[axis]);
            }
        }
        list.sort_unstable();
        neighbors.extend(list);
        offsets.push(neighbors.len());
        let c: Vec<f64> = pos.iter().map(|&x| x as f64).collect();
        coords.push(Point::new(&c)?);
    }
    GeometricGraph::new(offsets, neighbors, None, coords, None)
}
