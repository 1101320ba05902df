use alloc::vec;
use alloc::vec::Vec;

use super::{Aabb, GeomError, Grid, Node, SetExpr};
use crate::math::{self, CompensatedSum};
use crate::point::MAX_DIM;

/// Largest number of subsamples per cell.
const MAX_SAMPLES: usize = 4096;

/// Default subsamples per cell edge: 64 in 1-D, 8 in 2-D, 4 in 3-D, i.e.
/// 64 samples (one machine word) per cell.
pub fn default_supersampling(dim: usize) -> usize {
    match dim {
        1 => 64,
        2 => 8,
        _ => 4,
    }
}

/// Indicator of a set on a uniform grid with fractional cell coverage.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterSet {
    grid: Grid,
    s: usize,
    coverage: Vec<f64>,
}

/// A measure together with an error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasureEstimate {
    pub value: f64,
    pub error_bound: f64,
}

impl RasterSet {
    pub fn from_coverage(grid: Grid, s: usize, coverage: Vec<f64>) -> Result<Self, GeomError> {
        if coverage.len() != grid.len() {
            return Err(GeomError::CoverageLength { expected: grid.len(), found: coverage.len() });
        }
        if let Some(&c) = coverage.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(GeomError::InvalidCoverage(c));
        }
        Ok(RasterSet { grid, s: s.max(1), coverage })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn h(&self) -> f64 {
        self.grid.h
    }

    pub fn supersampling(&self) -> usize {
        self.s
    }

    pub fn coverage(&self) -> &[f64] {
        &self.coverage
    }

    #[inline]
    pub fn occupied(&self, idx: usize) -> bool {
        self.coverage[idx] >= 0.5
    }

    pub fn occupancy(&self) -> Vec<bool> {
        self.coverage.iter().map(|&c| c >= 0.5).collect()
    }

    pub fn occupied_count(&self) -> usize {
        self.coverage.iter().filter(|&&c| c >= 0.5).count()
    }

    pub fn measure(&self) -> f64 {
        let s: CompensatedSum = self.coverage.iter().copied().collect();
        s.value() * self.grid.cell_measure()
    }

    /// Boundary size of the occupancy pattern: number of occupied/empty
    /// cell faces times `h^(N-1)`.
    pub fn perimeter_estimate(&self) -> f64 {
        let g = &self.grid;
        let mut faces = 0usize;
        for idx in 0..g.len() {
            let c = g.unindex(idx);
            let me = self.occupied(idx);
            for k in 0..g.dim {
                let mut nb = c;
                // Faces on the grid edge count against the (empty) outside.
                if c[k] == 0 && me {
                    faces += 1;
                }
                if c[k] + 1 == g.n[k] {
                    if me {
                        faces += 1;
                    }
                    continue;
                }
                nb[k] += 1;
                if me != self.occupied(g.index(nb[0], nb[1], nb[2])) {
                    faces += 1;
                }
            }
        }
        faces as f64 * math::powi(g.h, g.dim as i32 - 1)
    }

    /// Measure with the error bound `h × perimeter`.
    pub fn measure_estimate(&self) -> MeasureEstimate {
        MeasureEstimate { value: self.measure(), error_bound: self.grid.h * self.perimeter_estimate() }
    }

    /// Coverage-weighted centre of mass.
    pub fn center_of_mass(&self) -> Option<crate::point::Point> {
        let g = &self.grid;
        let mut w = CompensatedSum::new();
        let mut acc = [CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new()];
        for (idx, &c) in self.coverage.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let p = g.center(g.unindex(idx));
            w.add(c);
            for k in 0..g.dim {
                acc[k].add(c * p.0[k]);
            }
        }
        let w = w.value();
        if w <= 0.0 {
            return None;
        }
        let mut p = crate::point::Point::ORIGIN;
        for k in 0..g.dim {
            p.0[k] = acc[k].value() / w;
        }
        Some(p)
    }

    /// Bounding box of occupied cells (cell extents, not centres).
    pub fn occupied_bbox(&self) -> Option<Aabb> {
        let g = &self.grid;
        let mut lo = [usize::MAX; MAX_DIM];
        let mut hi = [0usize; MAX_DIM];
        let mut any = false;
        for idx in 0..g.len() {
            if self.occupied(idx) {
                any = true;
                let c = g.unindex(idx);
                for k in 0..MAX_DIM {
                    lo[k] = lo[k].min(c[k]);
                    hi[k] = hi[k].max(c[k]);
                }
            }
        }
        if !any {
            return None;
        }
        let mut bb = Aabb { min: g.origin(), max: g.origin() };
        for k in 0..g.dim {
            bb.min.0[k] += lo[k] as f64 * g.h;
            bb.max.0[k] += (hi[k] + 1) as f64 * g.h;
        }
        Some(bb)
    }

    /// Copy onto a larger grid on the same lattice.
    pub fn embed(&self, outer: &Grid) -> Result<RasterSet, GeomError> {
        let bigger = self.grid.hull(outer)?;
        if bigger != *outer {
            return Err(GeomError::IncompatibleRasters);
        }
        let mut cov = vec![0.0; outer.len()];
        for (idx, &c) in self.coverage.iter().enumerate() {
            if c != 0.0 {
                cov[self.grid.reindex(self.grid.unindex(idx), outer)] = c;
            }
        }
        Ok(RasterSet { grid: *outer, s: self.s, coverage: cov })
    }

    /// Scales every coverage value, e.g. to build `α·1_E`.
    pub fn scaled_coverage(&self, amplitude: f64) -> Vec<f64> {
        self.coverage.iter().map(|c| c * amplitude).collect()
    }
}

/// Bit masks of subsample membership, `words` u64 per cell.
struct Masks {
    grid: Grid,
    s: usize,
    words: usize,
    samples: usize,
    bits: Vec<u64>,
    full: Vec<u64>,
}

#[derive(Clone, Copy)]
enum Op {
    Or,
    AndNot,
}

impl Masks {
    fn empty(grid: Grid, s: usize) -> Self {
        let samples = math::powi(s as f64, grid.dim as i32) as usize;
        let words = samples.div_ceil(64);
        let mut full = vec![u64::MAX; words];
        let rem = samples % 64;
        if rem != 0 {
            full[words - 1] = (1u64 << rem) - 1;
        }
        Masks { grid, s, words, samples, bits: vec![0; grid.len() * words], full }
    }

    fn cell_range(&self, bb: &Aabb) -> Option<[(usize, usize); MAX_DIM]> {
        let g = &self.grid;
        let mut r = [(0usize, 1usize); MAX_DIM];
        for k in 0..g.dim {
            let lo = math::floor(bb.min.0[k] / g.h) as i64 - g.offset[k];
            let hi = math::ceil(bb.max.0[k] / g.h) as i64 - g.offset[k];
            let lo = lo.max(0);
            let hi = hi.min(g.n[k] as i64);
            if lo >= hi {
                return None;
            }
            r[k] = (lo as usize, hi as usize);
        }
        Some(r)
    }

    /// Subsample coordinate `j` of cell `i` on `axis`.
    #[inline]
    fn sample(&self, axis: usize, i: usize, j: usize) -> f64 {
        (self.grid.offset[axis] as f64 + i as f64 + (j as f64 + 0.5) / self.s as f64) * self.grid.h
    }

    fn apply(&mut self, cell: usize, m: &[u64], op: Op) {
        let w = self.words;
        let dst = &mut self.bits[cell * w..(cell + 1) * w];
        for (d, s) in dst.iter_mut().zip(m) {
            match op {
                Op::Or => *d |= s,
                Op::AndNot => *d &= !s,
            }
        }
    }

    fn paint(&mut self, prim: &Node, op: Op) {
        let dim = self.grid.dim;
        let Some(bb) = prim.bbox(dim) else { return };
        let Some(range) = self.cell_range(&bb) else { return };
        let h = self.grid.h;
        let s = self.s;
        let full = self.full.clone();
        let mut m = vec![0u64; self.words];
        for k3 in range[2].0..range[2].1 {
            for j3 in range[1].0..range[1].1 {
                for i3 in range[0].0..range[0].1 {
                    let c = [i3, j3, k3];
                    let mut lo = [0.0; MAX_DIM];
                    let mut hi = [0.0; MAX_DIM];
                    for k in 0..dim {
                        lo[k] = (self.grid.offset[k] as f64 + c[k] as f64) * h;
                        hi[k] = lo[k] + h;
                    }
                    let cell = self.grid.index(i3, j3, k3);
                    match prim {
                        Node::Ball { center, radius } => {
                            let r2 = radius * radius;
                            let (mut dmin, mut dmax) = (0.0, 0.0);
                            for k in 0..dim {
                                let x = center.0[k];
                                let q = x.clamp(lo[k], hi[k]) - x;
                                dmin += q * q;
                                let f = (x - lo[k]).abs().max((hi[k] - x).abs());
                                dmax += f * f;
                            }
                            if dmin >= r2 {
                                continue;
                            }
                            if dmax <= r2 {
                                self.apply(cell, &full, op);
                                continue;
                            }
                            m.iter_mut().for_each(|w| *w = 0);
                            for t in 0..self.samples {
                                let mut d2 = 0.0;
                                let mut rest = t;
                                for k in 0..dim {
                                    let q = self.sample(k, c[k], rest % s) - center.0[k];
                                    rest /= s;
                                    d2 += q * q;
                                }
                                if d2 < r2 {
                                    m[t / 64] |= 1 << (t % 64);
                                }
                            }
                            self.apply(cell, &m, op);
                        }
                        Node::Box { min, max } => {
                            let inside = (0..dim).all(|k| min.0[k] <= lo[k] && hi[k] <= max.0[k]);
                            if inside {
                                self.apply(cell, &full, op);
                                continue;
                            }
                            // Separable: per-axis pass masks.
                            let mut pass = [[false; 64]; MAX_DIM];
                            let mut any = true;
                            for k in 0..dim {
                                let mut some = false;
                                for j in 0..s.min(64) {
                                    let x = self.sample(k, c[k], j);
                                    pass[k][j] = x > min.0[k] && x < max.0[k];
                                    some |= pass[k][j];
                                }
                                any &= some;
                            }
                            if !any {
                                continue;
                            }
                            m.iter_mut().for_each(|w| *w = 0);
                            for t in 0..self.samples {
                                let mut rest = t;
                                let mut ok = true;
                                for k in 0..dim {
                                    ok &= pass[k][rest % s];
                                    rest /= s;
                                }
                                if ok {
                                    m[t / 64] |= 1 << (t % 64);
                                }
                            }
                            self.apply(cell, &m, op);
                        }
                        _ => unreachable!("paint on a composite node"),
                    }
                }
            }
        }
    }

    fn eval(grid: Grid, s: usize, node: &Node) -> Masks {
        let mut acc = Masks::empty(grid, s);
        match node {
            Node::Ball { .. } | Node::Box { .. } => acc.paint(node, Op::Or),
            Node::Union(ch) => {
                for c in ch {
                    if c.is_primitive() {
                        acc.paint(c, Op::Or);
                    } else {
                        let m = Masks::eval(grid, s, c);
                        acc.bits.iter_mut().zip(&m.bits).for_each(|(a, b)| *a |= b);
                    }
                }
            }
            Node::Intersect(ch) => {
                let mut it = ch.iter();
                if let Some(first) = it.next() {
                    acc = Masks::eval(grid, s, first);
                }
                for c in it {
                    let m = Masks::eval(grid, s, c);
                    acc.bits.iter_mut().zip(&m.bits).for_each(|(a, b)| *a &= b);
                }
            }
            Node::Diff(a, b) => {
                acc = Masks::eval(grid, s, a);
                if b.is_primitive() {
                    acc.paint(b, Op::AndNot);
                } else {
                    let m = Masks::eval(grid, s, b);
                    acc.bits.iter_mut().zip(&m.bits).for_each(|(a, b)| *a &= !b);
                }
            }
        }
        acc
    }

    fn coverage(&self) -> Vec<f64> {
        let inv = 1.0 / self.samples as f64;
        self.bits
            .chunks_exact(self.words)
            .map(|w| w.iter().map(|x| x.count_ones()).sum::<u32>() as f64 * inv)
            .collect()
    }
}

fn check_resolution(dim: usize, h: f64, s: usize) -> Result<(), GeomError> {
    let samples = (s as u128).checked_pow(dim as u32).unwrap_or(u128::MAX);
    if !(h.is_finite() && h > 0.0) || s == 0 || s > 64 || samples > MAX_SAMPLES as u128 {
        return Err(GeomError::InvalidResolution { h, s });
    }
    Ok(())
}

/// Rasterizes on the lattice-aligned bounding box padded by one cell.
pub fn rasterize(expr: &SetExpr, h: f64, s: usize) -> Result<RasterSet, GeomError> {
    check_resolution(expr.dim(), h, s)?;
    let bb = expr.bbox();
    let extent = (0..expr.dim()).map(|k| bb.extent(k)).fold(0.0, f64::max);
    if h > extent {
        return Err(GeomError::DegenerateRaster { h, extent });
    }
    let grid = Grid::covering(expr.dim(), h, &bb, 1)?;
    rasterize_on(expr, &grid, s)
}

/// Rasterizes onto a caller-supplied grid; parts outside it are dropped.
pub fn rasterize_on(expr: &SetExpr, grid: &Grid, s: usize) -> Result<RasterSet, GeomError> {
    if grid.dim != expr.dim() {
        return Err(GeomError::DimensionMismatch { expected: grid.dim, found: expr.dim() });
    }
    check_resolution(grid.dim, grid.h, s)?;
    let m = Masks::eval(*grid, s, expr.node());
    Ok(RasterSet { grid: *grid, s, coverage: m.coverage() })
}

/// Measure of an expression: exact when a closed form exists, otherwise an
/// `s = 8` raster at cell size `h` with the `h × perimeter` error bound.
pub fn measure_expr(expr: &SetExpr, h: f64) -> Result<MeasureEstimate, GeomError> {
    if let Some(v) = expr.exact_measure() {
        return Ok(MeasureEstimate { value: v, error_bound: 0.0 });
    }
    let s = if expr.dim() == 1 { 64 } else { 8 };
    Ok(rasterize(expr, h, s)?.measure_estimate())
}

/// `λ(A Δ B)` on rasters sharing a lattice.
pub fn d1(a: &RasterSet, b: &RasterSet) -> Result<f64, GeomError> {
    if !a.grid.compatible(&b.grid) {
        return Err(GeomError::IncompatibleRasters);
    }
    let u = a.grid.hull(&b.grid)?;
    let ea = a.embed(&u)?;
    let eb = b.embed(&u)?;
    let sum: CompensatedSum = ea.coverage.iter().zip(&eb.coverage).map(|(x, y)| (x - y).abs()).collect();
    Ok(sum.value() * u.cell_measure())
}

/// `λ(A Δ B)` for expressions, via the symmetric-difference expression.
pub fn d1_expr(a: &SetExpr, b: &SetExpr, h: f64) -> Result<MeasureEstimate, GeomError> {
    if a.dim() != b.dim() {
        return Err(GeomError::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    if a == b {
        return Ok(MeasureEstimate { value: 0.0, error_bound: 0.0 });
    }
    let sym = Node::Union(vec![
        Node::Diff(alloc::boxed::Box::new(a.node().clone()), alloc::boxed::Box::new(b.node().clone())),
        Node::Diff(alloc::boxed::Box::new(b.node().clone()), alloc::boxed::Box::new(a.node().clone())),
    ]);
    // An empty symmetric difference has no bounding box.
    match SetExpr::new(a.dim(), sym) {
        Ok(e) => {
            if let Some(v) = e.exact_measure() {
                return Ok(MeasureEstimate { value: v, error_bound: 0.0 });
            }
            let bb = a.bbox().union(&b.bbox());
            let grid = Grid::covering(a.dim(), h, &bb, 1)?;
            let s = if a.dim() == 1 { 64 } else { 8 };
            Ok(rasterize_on(&e, &grid, s)?.measure_estimate())
        }
        Err(GeomError::EmptyBoundingBox) => Ok(MeasureEstimate { value: 0.0, error_bound: 0.0 }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::Point;

    #[test]
    fn unit_interval_from_ball() {
        let e = SetExpr::ball(1, Point::ORIGIN, 1.0).unwrap();
        let r = rasterize(&e, 0.5, 64).unwrap();
        assert!((r.measure() - 2.0).abs() <= 2.0 * 0.5);
        let bb = r.grid().bbox();
        assert!(bb.min.0[0] <= -1.0 && bb.max.0[0] >= 1.0);
    }

    #[test]
    fn grid_aligned_box_is_exact() {
        let e = SetExpr::cuboid(2, Point::xy(0.0, 0.0), Point::xy(1.0, 1.0)).unwrap();
        let r = rasterize(&e, 0.25, 1).unwrap();
        assert_eq!(r.measure(), 1.0);
        assert_eq!(r.occupied_count(), 16);
    }

    #[test]
    fn disk_area_converges() {
        let e = SetExpr::ball(2, Point::xy(0.3, -0.1), 1.0).unwrap();
        let r = rasterize(&e, 0.02, 8).unwrap();
        let est = r.measure_estimate();
        assert!((est.value - math::PI).abs() < 2e-4);
        assert!((est.value - math::PI).abs() <= est.error_bound);
    }

    #[test]
    fn cube_ball_reduces_to_cube() {
        let a = 1.0;
        let q = SetExpr::cube(2, Point::ORIGIN, a).unwrap();
        let b = SetExpr::ball(2, Point::ORIGIN, a * math::sqrt(2.0) / 2.0).unwrap();
        let c = SetExpr::intersect(vec![q, b]).unwrap();
        let m1 = measure_expr(&c, 0.02).unwrap().value;
        let m2 = measure_expr(&c, 0.005).unwrap().value;
        assert!((m2 - 1.0).abs() < (m1 - 1.0).abs() + 1e-12);
        assert!((m2 - 1.0).abs() < 2e-3);
    }

    #[test]
    fn diff_and_intersection_coverage() {
        let big = SetExpr::ball(2, Point::ORIGIN, 1.0).unwrap();
        let hole = SetExpr::ball(2, Point::ORIGIN, 0.5).unwrap();
        let ring = SetExpr::diff(big, hole).unwrap();
        let m = rasterize(&ring, 0.01, 8).unwrap().measure();
        assert!((m - 0.75 * math::PI).abs() < 1e-3);
    }

    #[test]
    fn refuses_degenerate_rasters() {
        let e = SetExpr::interval(0.0, 0.1).unwrap();
        assert!(matches!(rasterize(&e, 0.5, 8), Err(GeomError::DegenerateRaster { .. })));
        assert!(matches!(rasterize(&e, 0.01, 0), Err(GeomError::InvalidResolution { .. })));
    }

    #[test]
    fn d1_examples() {
        let a = SetExpr::interval(0.0, 2.0).unwrap();
        let b = SetExpr::interval(1.0, 3.0).unwrap();
        assert_eq!(d1_expr(&a, &b, 0.1).unwrap().value, 2.0);
        assert_eq!(d1_expr(&a, &a, 0.1).unwrap().value, 0.0);
        let c = SetExpr::interval(-1.0, 1.0).unwrap();
        let d = SetExpr::interval(2.0, 4.0).unwrap();
        assert_eq!(d1_expr(&c, &d, 0.1).unwrap().value, 4.0);
        let ra = rasterize(&a, 0.125, 64).unwrap();
        let rb = rasterize(&b, 0.125, 64).unwrap();
        assert!((d1(&ra, &rb).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(d1(&ra, &rb).unwrap(), d1(&rb, &ra).unwrap());
        let rc = rasterize(&a, 0.1, 64).unwrap();
        assert_eq!(d1(&ra, &rc), Err(GeomError::IncompatibleRasters));
    }

    #[test]
    fn d1_of_identical_disks_in_2d() {
        let a = SetExpr::ball(2, Point::ORIGIN, 1.0).unwrap();
        let b = SetExpr::union(vec![a.clone(), a.clone()]).unwrap();
        assert!(d1_expr(&a, &b, 0.05).unwrap().value < 1e-12);
    }
}
