use crate::system::Aabb;
use crate::{Error, Point, Result};

/// Uniform grid of cells tiling a box. Cell `(i, j)` has index `i·ny + j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellGrid {
    pub domain: Aabb,
    pub nx: usize,
    pub ny: usize,
}

impl CellGrid {
    /// Grid with resolution as close to `h` as tiles the box exactly.
    pub fn new(domain: Aabb, h: f64) -> Result<CellGrid> {
        if !(h > 0.0) || !domain.is_valid() {
            return Err(Error::InvalidInput(format!("bad grid: h = {h}, domain {domain:?}")));
        }
        let w = domain.width();
        let nx = ((w.x / h).round() as usize).max(1);
        let ny = ((w.y / h).round() as usize).max(1);
        Ok(CellGrid { domain, nx, ny })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h(&self) -> Point {
        let w = self.domain.width();
        Point::new(w.x / self.nx as f64, w.y / self.ny as f64)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx / self.ny, idx % self.ny)
    }

    pub fn cell_box(&self, idx: usize) -> Aabb {
        let (i, j) = self.coords(idx);
        let h = self.h();
        let lo = self.domain.lo + Point::new(i as f64 * h.x, j as f64 * h.y);
        Aabb::new(lo, lo + h)
    }

    pub fn cell_of(&self, p: &Point) -> Option<usize> {
        if !self.domain.contains(p) {
            return None;
        }
        let h = self.h();
        let i = (((p.x - self.domain.lo.x) / h.x) as usize).min(self.nx - 1);
        let j = (((p.y - self.domain.lo.y) / h.y) as usize).min(self.ny - 1);
        Some(self.index(i, j))
    }

    /// Sample points of a cell: 1 → center; 5 → center and corners; 9 →
    /// plus edge midpoints; otherwise an `m × m` lattice with `m = ⌈√n⌉`.
    pub fn samples(&self, idx: usize, n: usize) -> Vec<Point> {
        let b = self.cell_box(idx);
        let c = 0.5 * (b.lo + b.hi);
        let corners = [b.lo, Point::new(b.hi.x, b.lo.y), Point::new(b.lo.x, b.hi.y), b.hi];
        match n {
            0 | 1 => vec![c],
            5 => std::iter::once(c).chain(corners).collect(),
            9 => {
                let mids = [
                    Point::new(c.x, b.lo.y),
                    Point::new(c.x, b.hi.y),
                    Point::new(b.lo.x, c.y),
                    Point::new(b.hi.x, c.y),
                ];
                std::iter::once(c).chain(corners).chain(mids).collect()
            }
            _ => {
                let m = (n as f64).sqrt().ceil() as usize;
                let w = b.width();
                let mut v = Vec::with_capacity(m * m);
                for a in 0..m {
                    for bb in 0..m {
                        let u = a as f64 / (m - 1).max(1) as f64;
                        let s = bb as f64 / (m - 1).max(1) as f64;
                        v.push(b.lo + Point::new(u * w.x, s * w.y));
                    }
                }
                v
            }
        }
    }

    /// Cells whose closed box meets the closed disk of radius `r` about `y`.
    pub fn cells_near(&self, y: &Point, r: f64, out: &mut Vec<usize>) {
        let h = self.h();
        let lo = self.domain.lo;
        let i0 = ((y.x - r - lo.x) / h.x).floor().max(0.0) as i64;
        let i1 = (((y.x + r - lo.x) / h.x).floor() as i64).min(self.nx as i64 - 1);
        let j0 = ((y.y - r - lo.y) / h.y).floor().max(0.0) as i64;
        let j1 = (((y.y + r - lo.y) / h.y).floor() as i64).min(self.ny as i64 - 1);
        for i in i0..=i1 {
            for j in j0..=j1 {
                let idx = self.index(i as usize, j as usize);
                if self.cell_box(idx).distance(y) <= r {
                    out.push(idx);
                }
            }
        }
    }
}
