//! Points, axis-aligned boxes and Hilbert curve keys in two and three
//! dimensions.

use crate::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

/// A point in 2D or 3D. Unused trailing coordinates are kept at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: u8,
}

impl Point {
    /// Builds a point from 2 or 3 finite coordinates.
    pub fn new(coords: &[f64]) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&coords.len()) {
            return Err(Error::input(format!(
                "points must have 2 or 3 coordinates, got {}",
                coords.len()
            )));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::input(format!("non-finite coordinate {c}")));
        }
        let mut buf = [0.0; MAX_DIM];
        buf[..coords.len()].copy_from_slice(coords);
        Ok(Point {
            coords: buf,
            dim: coords.len() as u8,
        })
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Point::new(&[x, y]).expect("finite 2D point")
    }

    pub fn xyz(x: f64, y: f64, z: f64) -> Self {
        Point::new(&[x, y, z]).expect("finite 3D point")
    }

    /// Origin of the given dimension.
    pub fn zero(dim: usize) -> Self {
        assert!((2..=MAX_DIM).contains(&dim));
        Point {
            coords: [0.0; MAX_DIM],
            dim: dim as u8,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim()]
    }

    #[inline]
    pub fn coords_mut(&mut self) -> &mut [f64] {
        let d = self.dim();
        &mut self.coords[..d]
    }

    #[inline]
    pub fn get(&self, axis: usize) -> f64 {
        self.coords()[axis]
    }

    /// Squared distance without the dimension check. Both points must share
    /// a dimension; the unused coordinates are zero so the 3-term sum is exact
    /// for 2D points too.
    #[inline]
    pub(crate) fn dist2(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let dx = self.coords[0] - other.coords[0];
        let dy = self.coords[1] - other.coords[1];
        let dz = self.coords[2] - other.coords[2];
        dx * dx + dy * dy + dz * dz
    }

    #[inline]
    pub(crate) fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a,
            found: b,
        });
    }
    Ok(())
}

/// Squared Euclidean distance between two points of the same dimension.
pub fn squared_distance(a: &Point, b: &Point) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    Ok(a.dist2(b))
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    min: Point,
    max: Point,
}

impl BoundingBox {
    pub fn new(min: Point, max: Point) -> Result<Self> {
        check_dims(min.dim(), max.dim())?;
        if min
            .coords()
            .iter()
            .zip(max.coords())
            .any(|(lo, hi)| lo > hi)
        {
            return Err(Error::input("bounding box min exceeds max"));
        }
        Ok(BoundingBox { min, max })
    }

    /// Smallest box containing all `points`; `None` for an empty slice.
    pub fn around<'a, I>(points: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a Point>,
    {
        let mut iter = points.into_iter();
        let first = *iter.next()?;
        let (mut min, mut max) = (first, first);
        for p in iter {
            for axis in 0..first.dim() {
                let v = p.coords[axis];
                if v < min.coords[axis] {
                    min.coords[axis] = v;
                }
                if v > max.coords[axis] {
                    max.coords[axis] = v;
                }
            }
        }
        Some(BoundingBox { min, max })
    }

    pub fn min(&self) -> &Point {
        &self.min
    }

    pub fn max(&self) -> &Point {
        &self.max
    }

    pub fn dim(&self) -> usize {
        self.min.dim()
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.max.coords[axis] - self.min.coords[axis]
    }

    pub fn diagonal(&self) -> f64 {
        self.min.dist(&self.max)
    }

    /// Grows the box to cover `other`.
    pub fn merge(&self, other: &BoundingBox) -> BoundingBox {
        let mut out = *self;
        for axis in 0..self.dim() {
            out.min.coords[axis] = out.min.coords[axis].min(other.min.coords[axis]);
            out.max.coords[axis] = out.max.coords[axis].max(other.max.coords[axis]);
        }
        out
    }

    /// Squared distance from `p` to the nearest point of the box. The per-axis
    /// gap never exceeds the per-axis offset to any point inside the box, and
    /// float rounding is monotone, so the result is a true lower bound on
    /// [`Point::dist2`] for every contained point.
    #[inline]
    pub(crate) fn min_dist2(&self, p: &Point) -> f64 {
        let mut sum = 0.0;
        for axis in 0..MAX_DIM {
            let v = p.coords[axis];
            let gap = if v < self.min.coords[axis] {
                self.min.coords[axis] - v
            } else if v > self.max.coords[axis] {
                v - self.max.coords[axis]
            } else {
                0.0
            };
            sum += gap * gap;
        }
        sum
    }
}

/// Minimum Euclidean distance from `p` to any point of `bbox` (0 inside).
pub fn min_distance_point_box(bbox: &BoundingBox, p: &Point) -> Result<f64> {
    check_dims(bbox.dim(), p.dim())?;
    Ok(bbox.min_dist2(p).sqrt())
}

/// Position of a grid cell along a Hilbert curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SfcKey {
    pub value: u64,
    pub depth: u32,
}

/// Deepest key that still fits 62 bits: 31 levels in 2D, 20 in 3D.
pub fn default_depth(dim: usize) -> u32 {
    (62 / dim) as u32
}

/// Maps `p` to the Hilbert index of its cell in the `2^depth`-per-axis grid
/// laid over `bbox`. Points on the upper face are clamped into the last cell.
pub fn hilbert_key(p: &Point, bbox: &BoundingBox, depth: u32) -> Result<SfcKey> {
    check_dims(bbox.dim(), p.dim())?;
    let dim = p.dim();
    if depth == 0 {
        return Err(Error::input("hilbert depth must be positive"));
    }
    if depth > default_depth(dim) {
        return Err(Error::input(format!(
            "hilbert depth {depth} does not fit a 62-bit key in {dim}D"
        )));
    }
    let mut cell = [0u32; MAX_DIM];
    for (axis, slot) in cell.iter_mut().enumerate().take(dim) {
        *slot = grid_cell(
            p.coords[axis],
            bbox.min.coords[axis],
            bbox.max.coords[axis],
            depth,
        )?;
    }
    let value = match dim {
        2 => hilbert_index_2d(cell[0], cell[1], depth),
        _ => hilbert_index_3d(cell, depth),
    };
    Ok(SfcKey { value, depth })
}

fn grid_cell(v: f64, lo: f64, hi: f64, depth: u32) -> Result<u32> {
    let extent = hi - lo;
    let tol = 1e-9 * extent.abs().max(lo.abs()).max(hi.abs()).max(1.0);
    if v < lo - tol || v > hi + tol {
        return Err(Error::input(format!(
            "coordinate {v} lies outside [{lo}, {hi}]"
        )));
    }
    if extent <= 0.0 {
        return Ok(0);
    }
    let cells = (1u64 << depth) as f64;
    let scaled = ((v - lo) / extent * cells).floor();
    let last = (1u64 << depth) - 1;
    Ok(scaled.clamp(0.0, last as f64) as u32)
}

/// Classic rotate-and-flip Hilbert index for a cell of the `2^depth` square
/// grid. Starts at (0, 0) and ends at (2^depth - 1, 0).
pub fn hilbert_index_2d(x: u32, y: u32, depth: u32) -> u64 {
    let (mut x, mut y) = (x as u64, y as u64);
    let mut index = 0u64;
    let mut s = 1u64 << (depth - 1);
    while s > 0 {
        let rx = u64::from(x & s != 0);
        let ry = u64::from(y & s != 0);
        index += s * s * ((3 * rx) ^ ry);
        x &= s - 1;
        y &= s - 1;
        // Rotate the quadrant so the sub-curve has the canonical orientation.
        if ry == 0 {
            if rx == 1 {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s >>= 1;
    }
    index
}

/// 3D Hilbert index via Skilling's transpose transform ("Programming the
/// Hilbert curve", AIP Conf. Proc. 707, 2004): undo the per-level
/// rotations/reflections, Gray-encode, then interleave bits.
pub fn hilbert_index_3d(cell: [u32; MAX_DIM], depth: u32) -> u64 {
    let mut x = cell;
    let n = MAX_DIM;
    let top = 1u32 << (depth - 1);

    let mut q = top;
    while q > 1 {
        let mask = q - 1;
        for i in 0..n {
            if x[i] & q != 0 {
                x[0] ^= mask;
            } else {
                let t = (x[0] ^ x[i]) & mask;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
        q >>= 1;
    }

    for i in 1..n {
        x[i] ^= x[i - 1];
    }
    let mut t = 0;
    let mut q = top;
    while q > 1 {
        if x[n - 1] & q != 0 {
            t ^= q - 1;
        }
        q >>= 1;
    }
    for v in x.iter_mut() {
        *v ^= t;
    }

    let mut index = 0u64;
    for bit in (0..depth).rev() {
        for v in &x {
            index = (index << 1) | u64::from((v >> bit) & 1);
        }
    }
    index
}
