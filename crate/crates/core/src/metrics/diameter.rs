//! Lower bounds on the hop diameter of a block's induced subgraph.

use std::collections::VecDeque;
use std::fmt;

use crate::mesh::{GeometricGraph, Partition};
use crate::{Error, Result};

/// Diameter lower bound of a block. Disconnected blocks have infinite
/// diameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DiameterBound {
    Finite(usize),
    Unbounded,
}

impl DiameterBound {
    /// Reciprocal for harmonic means; zero for unbounded blocks.
    pub fn reciprocal(self) -> f64 {
        match self {
            DiameterBound::Finite(d) => 1.0 / d as f64,
            DiameterBound::Unbounded => 0.0,
        }
    }
}

impl fmt::Display for DiameterBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiameterBound::Finite(d) => write!(f, "{d}"),
            DiameterBound::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl std::str::FromStr for DiameterBound {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "unbounded" {
            return Ok(DiameterBound::Unbounded);
        }
        s.parse()
            .map(DiameterBound::Finite)
            .map_err(|_| format!("invalid diameter {s:?}"))
    }
}

/// Number of fringe rounds run after the double sweep.
pub const IFUB_ROUNDS: usize = 3;

/// BFS restricted to one block, reusing buffers across calls.
struct BlockBfs<'a> {
    graph: &'a GeometricGraph,
    part: &'a Partition,
    block: usize,
    dist: Vec<usize>,
    touched: Vec<usize>,
    queue: VecDeque<usize>,
}

impl<'a> BlockBfs<'a> {
    fn new(graph: &'a GeometricGraph, part: &'a Partition, block: usize) -> Self {
        BlockBfs {
            graph,
            part,
            block,
            dist: vec![usize::MAX; graph.num_vertices()],
            touched: Vec::new(),
            queue: VecDeque::new(),
        }
    }

    /// Runs a BFS from `root`; returns (eccentricity, farthest vertex with
    /// the lowest id, reached count). Distances stay readable until the next
    /// call.
    fn run(&mut self, root: usize) -> (usize, usize, usize) {
        for &v in &self.touched {
            self.dist[v] = usize::MAX;
        }
        self.touched.clear();
        self.dist[root] = 0;
        self.touched.push(root);
        self.queue.push_back(root);
        let mut far = (0, root);
        while let Some(u) = self.queue.pop_front() {
            let du = self.dist[u];
            if du > far.0 || (du == far.0 && u < far.1) {
                far = (du, u);
            }
            for &w in self.graph.neighbors(u) {
                if self.part.block(w) == self.block && self.dist[w] == usize::MAX {
                    self.dist[w] = du + 1;
                    self.touched.push(w);
                    self.queue.push_back(w);
                }
            }
        }
        (far.0, far.1, self.touched.len())
    }

    /// Walks back from `target` to the last BFS root along decreasing
    /// distances and returns the vertex at distance `steps` from the root.
    fn ancestor_at(&self, target: usize, steps: usize) -> usize {
        let mut v = target;
        while self.dist[v] > steps {
            v = *self
                .graph
                .neighbors(v)
                .iter()
                .filter(|&&w| self.part.block(w) == self.block && self.dist[w] != usize::MAX)
                .filter(|&&w| self.dist[w] + 1 == self.dist[v])
                .min()
                .expect("BFS predecessor exists");
        }
        v
    }
}

/// Lower bound on the diameter of `block`: a double sweep, then up to
/// [`IFUB_ROUNDS`] rounds of iFUB from the midpoint of the swept path,
/// each BFS-ing from every vertex of the next-lower fringe level. Stops early
/// once the bound is certified exact.
pub fn block_diameter_lb(
    graph: &GeometricGraph,
    part: &Partition,
    block: usize,
) -> Result<DiameterBound> {
    if part.len() != graph.num_vertices() {
        return Err(Error::input("partition length differs from vertex count"));
    }
    let members: Vec<usize> = (0..graph.num_vertices())
        .filter(|&v| part.block(v) == block)
        .collect();
    let Some(&start) = members.first() else {
        return Err(Error::input(format!("block {block} is empty")));
    };
    let mut bfs = BlockBfs::new(graph, part, block);

    let (_, a, reached) = bfs.run(start);
    if reached < members.len() {
        return Ok(DiameterBound::Unbounded);
    }
    let (ecc_a, b, _) = bfs.run(a);
    let mut lb = ecc_a;
    // Midpoint of the a-b path.
    let mid = bfs.ancestor_at(b, ecc_a / 2);

    let (height, _, _) = bfs.run(mid);
    lb = lb.max(height);
    let mut levels: Vec<Vec<usize>> = vec![Vec::new(); height + 1];
    for &v in &members {
        levels[bfs.dist[v]].push(v);
    }

    // iFUB: once lb > 2(i - 1), vertices at level < i cannot beat it.
    let mut level = height;
    for _ in 0..IFUB_ROUNDS {
        if level == 0 || lb > 2 * (level - 1) {
            break;
        }
        for &v in &levels[level] {
            let (ecc, _, _) = bfs.run(v);
            lb = lb.max(ecc);
        }
        if lb > 2 * (level - 1) {
            break;
        }
        level -= 1;
    }
    Ok(DiameterBound::Finite(lb))
}
