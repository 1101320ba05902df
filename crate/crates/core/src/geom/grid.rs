use super::{check_dim, Aabb, GeomError};
use crate::math;
use crate::point::{Point, MAX_DIM};

/// Hard cap on the number of cells of a single raster.
pub const MAX_CELLS: u128 = 1 << 26;

/// A uniform cell lattice. Cell `(i, j, k)` occupies
/// `[(offset + idx) h, (offset + idx + 1) h)` per axis, so two grids with the
/// same `h` always share a lattice and differ only by an integer shift.
/// Axis 0 varies fastest in linear indices; unused axes have one cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub h: f64,
    pub offset: [i64; MAX_DIM],
    pub n: [usize; MAX_DIM],
}

impl Grid {
    pub fn new(dim: usize, h: f64, offset: [i64; MAX_DIM], n: [usize; MAX_DIM]) -> Result<Self, GeomError> {
        check_dim(dim)?;
        if !(h.is_finite() && h > 0.0) {
            return Err(GeomError::InvalidResolution { h, s: 1 });
        }
        let mut g = Grid { dim, h, offset, n };
        for k in dim..MAX_DIM {
            g.offset[k] = 0;
            g.n[k] = 1;
        }
        let cells: u128 = g.n.iter().map(|&v| v as u128).product();
        if cells > MAX_CELLS || g.n.iter().any(|&v| v == 0) {
            return Err(GeomError::GridTooLarge { cells });
        }
        Ok(g)
    }

    /// Smallest lattice-aligned grid covering `bbox`, padded by `pad` cells.
    pub fn covering(dim: usize, h: f64, bbox: &Aabb, pad: usize) -> Result<Self, GeomError> {
        check_dim(dim)?;
        if !(h.is_finite() && h > 0.0) {
            return Err(GeomError::InvalidResolution { h, s: 1 });
        }
        let mut offset = [0i64; MAX_DIM];
        let mut n = [1usize; MAX_DIM];
        let mut cells: u128 = 1;
        for k in 0..dim {
            let lo = math::floor(bbox.min.0[k] / h);
            let hi = math::ceil(bbox.max.0[k] / h);
            let span = hi - lo + 2.0 * pad as f64;
            if !(lo.is_finite() && hi.is_finite()) || span > 1e12 {
                return Err(GeomError::GridTooLarge { cells: u128::MAX });
            }
            offset[k] = lo as i64 - pad as i64;
            n[k] = (span as usize).max(1);
            cells = cells.saturating_mul(n[k] as u128);
        }
        if cells > MAX_CELLS {
            return Err(GeomError::GridTooLarge { cells });
        }
        Grid::new(dim, h, offset, n)
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n[0] * (j + self.n[1] * k)
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> [usize; MAX_DIM] {
        let i = idx % self.n[0];
        let r = idx / self.n[0];
        [i, r % self.n[1], r / self.n[1]]
    }

    /// Lower corner of cell `(0, 0, 0)`.
    pub fn origin(&self) -> Point {
        let mut p = Point::ORIGIN;
        for k in 0..self.dim {
            p.0[k] = self.offset[k] as f64 * self.h;
        }
        p
    }

    /// Coordinate of the centre of cell `i` along `axis`.
    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        (self.offset[axis] as f64 + i as f64 + 0.5) * self.h
    }

    pub fn center(&self, c: [usize; MAX_DIM]) -> Point {
        let mut p = Point::ORIGIN;
        for k in 0..self.dim {
            p.0[k] = self.coord(k, c[k]);
        }
        p
    }

    pub fn cell_measure(&self) -> f64 {
        math::powi(self.h, self.dim as i32)
    }

    pub fn bbox(&self) -> Aabb {
        let min = self.origin();
        let mut max = min;
        for k in 0..self.dim {
            max.0[k] += self.n[k] as f64 * self.h;
        }
        Aabb { min, max }
    }

    /// Same dimension and cell size, hence the same lattice.
    pub fn compatible(&self, o: &Grid) -> bool {
        self.dim == o.dim && (self.h - o.h).abs() <= 1e-12 * self.h.max(o.h)
    }

    /// Smallest grid containing both.
    pub fn hull(&self, o: &Grid) -> Result<Grid, GeomError> {
        if !self.compatible(o) {
            return Err(GeomError::IncompatibleRasters);
        }
        let mut offset = [0i64; MAX_DIM];
        let mut n = [1usize; MAX_DIM];
        for k in 0..self.dim {
            let lo = self.offset[k].min(o.offset[k]);
            let hi = (self.offset[k] + self.n[k] as i64).max(o.offset[k] + o.n[k] as i64);
            offset[k] = lo;
            n[k] = (hi - lo) as usize;
        }
        Grid::new(self.dim, self.h, offset, n)
    }

    /// Index of `idx` (a cell of `self`) inside the larger grid `outer`.
    #[inline]
    pub fn reindex(&self, c: [usize; MAX_DIM], outer: &Grid) -> usize {
        let mut o = [0usize; MAX_DIM];
        for k in 0..MAX_DIM {
            o[k] = (self.offset[k] - outer.offset[k] + c[k] as i64) as usize;
        }
        outer.index(o[0], o[1], o[2])
    }

    /// Same grid grown by `pad` cells on each side of every used axis.
    pub fn padded(&self, pad: usize) -> Result<Grid, GeomError> {
        let mut offset = self.offset;
        let mut n = self.n;
        for k in 0..self.dim {
            offset[k] -= pad as i64;
            n[k] += 2 * pad;
        }
        Grid::new(self.dim, self.h, offset, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covering_is_lattice_aligned_and_padded() {
        let bb = Aabb { min: Point::x(-1.0), max: Point::x(1.0) };
        let g = Grid::covering(1, 0.5, &bb, 1).unwrap();
        assert_eq!(g.offset[0], -3);
        assert_eq!(g.n, [6, 1, 1]);
        assert_eq!(g.coord(0, 0), -1.25);
        assert_eq!(g.bbox().max.0[0], 1.5);
    }

    #[test]
    fn hull_and_reindex() {
        let a = Grid::new(2, 0.1, [0, 0, 0], [4, 3, 1]).unwrap();
        let b = Grid::new(2, 0.1, [-2, 1, 0], [3, 5, 1]).unwrap();
        let u = a.hull(&b).unwrap();
        assert_eq!(u.offset, [-2, 0, 0]);
        assert_eq!(u.n, [6, 6, 1]);
        let idx = a.reindex([1, 2, 0], &u);
        assert_eq!(u.unindex(idx), [3, 2, 0]);
        let c = Grid::new(2, 0.2, [0, 0, 0], [1, 1, 1]).unwrap();
        assert_eq!(a.hull(&c), Err(GeomError::IncompatibleRasters));
    }

    #[test]
    fn oversized_grid_is_refused() {
        let bb = Aabb { min: Point::xy(0.0, 0.0), max: Point::xy(1.0, 1.0) };
        assert!(matches!(Grid::covering(2, 1e-5, &bb, 1), Err(GeomError::GridTooLarge { .. })));
    }
}
