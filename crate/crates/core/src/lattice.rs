//! Hexagonal amacrine-cell lattice clipped to a circular retina.
//!
//! Cells sit on a pointy-top hex grid with unit spacing. Axial coordinate
//! `(q, r)` maps to the plane as `x = q + r/2`, `y = r * sqrt(3)/2`, so the
//! squared distance between two cells is the integer `dq² + dq·dr + dr²`.
//! Membership and neighbor tests use that integer form; floating point is
//! only involved in the final comparison against the requested radius.

use crate::error::{Error, Result};
use crate::real::Real;

/// Axial hex coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Axial {
    pub q: i32,
    pub r: i32,
}

impl Axial {
    pub fn new(q: i32, r: i32) -> Self {
        Self { q, r }
    }

    /// Squared Euclidean norm in lattice units, exact.
    #[inline]
    pub fn norm_sq(self) -> i64 {
        let (q, r) = (i64::from(self.q), i64::from(self.r));
        q * q + q * r + r * r
    }

    pub fn to_cartesian<T: Real>(self) -> [T; 2] {
        let q = T::from_i32(self.q).unwrap();
        let r = T::from_i32(self.r).unwrap();
        let half = T::lit(0.5);
        [q + r * half, r * T::lit(3.0).sqrt() * half]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell<T> {
    pub index: usize,
    pub axial: Axial,
    pub position: [T; 2],
    /// Within one unit of the disc edge.
    pub boundary: bool,
}

/// Uniform grid of unit buckets over the retina's bounding square, stored
/// compressed (bucket offsets + cell indices).
#[derive(Clone, Debug, PartialEq)]
struct SpatialIndex<T> {
    origin: T,
    dim: usize,
    offsets: Vec<u32>,
    items: Vec<u32>,
}

impl<T: Real> SpatialIndex<T> {
    fn build(radius: T, cells: &[Cell<T>]) -> Self {
        let origin = -radius;
        let dim = (radius + radius).ceil().to_usize().unwrap() + 1;
        let mut counts = vec![0u32; dim * dim + 1];
        let slot = |p: &[T; 2]| -> usize {
            let bx = Self::clamp_bucket((p[0] - origin).floor(), dim);
            let by = Self::clamp_bucket((p[1] - origin).floor(), dim);
            by * dim + bx
        };
        for c in cells {
            counts[slot(&c.position) + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let offsets = counts;
        let mut fill = offsets.clone();
        let mut items = vec![0u32; cells.len()];
        for c in cells {
            let s = slot(&c.position);
            items[fill[s] as usize] = c.index as u32;
            fill[s] += 1;
        }
        Self { origin, dim, offsets, items }
    }

    #[inline]
    fn clamp_bucket(v: T, dim: usize) -> usize {
        if v <= T::zero() {
            0
        } else {
            v.to_usize().unwrap_or(usize::MAX).min(dim - 1)
        }
    }

    #[inline]
    fn bucket(&self, bx: usize, by: usize) -> &[u32] {
        let s = by * self.dim + bx;
        &self.items[self.offsets[s] as usize..self.offsets[s + 1] as usize]
    }
}

/// Immutable retina geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct RetinaLattice<T> {
    radius: T,
    cells: Vec<Cell<T>>,
    index: SpatialIndex<T>,
}

impl<T: Real> RetinaLattice<T> {
    /// All hex-grid points within `radius` of the origin, ordered by
    /// (axial row, axial column).
    pub fn build(radius: T) -> Result<Self> {
        if !(radius >= T::one()) || !radius.is_finite() {
            return Err(Error::invalid(format!("retina radius must be >= 1, got {radius}")));
        }
        let radius_sq = radius * radius;
        let inner = radius - T::one();
        // |y| = |r|·√3/2 <= radius bounds the rows; |x| <= radius bounds q per row.
        let r_max = (radius * T::lit(2.0) / T::lit(3.0).sqrt()).ceil().to_i32().unwrap();
        let q_span = radius.ceil().to_i32().unwrap() + r_max;
        let mut cells = Vec::new();
        for r in -r_max..=r_max {
            for q in -q_span..=q_span {
                let axial = Axial::new(q, r);
                let n = T::from_i64(axial.norm_sq()).unwrap();
                if n > radius_sq {
                    continue;
                }
                cells.push(Cell {
                    index: cells.len(),
                    axial,
                    position: axial.to_cartesian(),
                    boundary: n.sqrt() > inner,
                });
            }
        }
        let index = SpatialIndex::build(radius, &cells);
        Ok(Self { radius, cells, index })
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn cells(&self) -> &[Cell<T>] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn position(&self, cell: usize) -> [T; 2] {
        self.cells[cell].position
    }

    pub fn is_boundary(&self, cell: usize) -> bool {
        self.cells[cell].boundary
    }

    /// Index of the cell nearest to `point`, or `None` when the point lies
    /// outside the disc. Ties go to the lowest index.
    pub fn nearest_cell(&self, point: [T; 2]) -> Option<usize> {
        if !(point[0] * point[0] + point[1] * point[1] <= self.radius * self.radius) {
            return None;
        }
        let idx = &self.index;
        let dim = idx.dim as i64;
        let bx = SpatialIndex::clamp_bucket((point[0] - idx.origin).floor(), idx.dim) as i64;
        let by = SpatialIndex::clamp_bucket((point[1] - idx.origin).floor(), idx.dim) as i64;
        let mut best: Option<(T, u32)> = None;
        for ring in 0..dim {
            for (x, y) in ring_buckets(bx, by, ring) {
                if x < 0 || y < 0 || x >= dim || y >= dim {
                    continue;
                }
                for &c in idx.bucket(x as usize, y as usize) {
                    let d = dist_sq(self.cells[c as usize].position, point);
                    best = match best {
                        Some((bd, bi)) if bd < d || (bd == d && bi < c) => Some((bd, bi)),
                        _ => Some((d, c)),
                    };
                }
            }
            // Buckets in ring k+1 are at least k units away from any point in the center bucket.
            if let Some((bd, _)) = best {
                let reach = T::from_i64(ring).unwrap();
                if bd < reach * reach {
                    break;
                }
            }
        }
        best.map(|(_, i)| i as usize)
    }

    /// Neighbor table at the given dendritic radius.
    pub fn neighbors(&self, dendritic_radius: T) -> Result<NeighborTable> {
        NeighborTable::build(self, dendritic_radius)
    }
}

#[inline]
pub(crate) fn dist_sq<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn ring_buckets(cx: i64, cy: i64, ring: i64) -> impl Iterator<Item = (i64, i64)> {
    let span = -ring..=ring;
    span.clone().flat_map(move |dy| {
        let edge = dy.abs() == ring;
        let step = if edge || ring == 0 { 1 } else { (2 * ring) as usize };
        (-ring..=ring).step_by(step.max(1)).map(move |dx| (cx + dx, cy + dy))
    })
}

/// Tolerance applied when comparing exact integer squared distances against a
/// floating point radius, so that a radius of exactly 2 includes cells at distance 2.
const RADIUS_SLACK: f64 = 1e-9;

/// Per-cell neighbor lists within a dendritic radius, compressed row storage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborTable {
    offsets: Vec<u32>,
    items: Vec<u32>,
}

impl NeighborTable {
    pub fn build<T: Real>(lattice: &RetinaLattice<T>, dendritic_radius: T) -> Result<Self> {
        if !(dendritic_radius >= T::one()) || !dendritic_radius.is_finite() {
            return Err(Error::invalid(format!(
                "dendritic radius must be >= 1, got {dendritic_radius}"
            )));
        }
        let limit = dendritic_radius * dendritic_radius + T::lit(RADIUS_SLACK);
        let reach = (dendritic_radius * T::lit(2.0) / T::lit(3.0).sqrt()).ceil().to_i32().unwrap() + 1;
        let mut stencil = Vec::new();
        for dr in -reach..=reach {
            for dq in -reach..=reach {
                let off = Axial::new(dq, dr);
                let n = off.norm_sq();
                if n > 0 && T::from_i64(n).unwrap() <= limit {
                    stencil.push(off);
                }
            }
        }

        // Dense axial -> cell lookup over the bounding box.
        let (min_q, max_q, min_r, max_r) = lattice.cells.iter().fold(
            (i32::MAX, i32::MIN, i32::MAX, i32::MIN),
            |(a, b, c, d), cell| {
                (a.min(cell.axial.q), b.max(cell.axial.q), c.min(cell.axial.r), d.max(cell.axial.r))
            },
        );
        let width = (max_q - min_q + 1) as usize;
        let height = (max_r - min_r + 1) as usize;
        let mut lookup = vec![u32::MAX; width * height];
        for cell in &lattice.cells {
            let k = (cell.axial.r - min_r) as usize * width + (cell.axial.q - min_q) as usize;
            lookup[k] = cell.index as u32;
        }

        let mut offsets = Vec::with_capacity(lattice.len() + 1);
        let mut items = Vec::with_capacity(lattice.len() * stencil.len());
        offsets.push(0);
        let mut scratch = Vec::with_capacity(stencil.len());
        for cell in &lattice.cells {
            scratch.clear();
            for off in &stencil {
                let q = cell.axial.q + off.q;
                let r = cell.axial.r + off.r;
                if q < min_q || q > max_q || r < min_r || r > max_r {
                    continue;
                }
                let j = lookup[(r - min_r) as usize * width + (q - min_q) as usize];
                if j != u32::MAX {
                    scratch.push(j);
                }
            }
            scratch.sort_unstable();
            items.extend_from_slice(&scratch);
            offsets.push(items.len() as u32);
        }
        Ok(Self { offsets, items })
    }

    #[inline]
    pub fn of(&self, cell: usize) -> &[u32] {
        &self.items[self.offsets[cell] as usize..self.offsets[cell + 1] as usize]
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
