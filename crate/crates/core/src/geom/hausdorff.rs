use alloc::vec::Vec;

use super::{default_supersampling, rasterize_on, squared_distance_transform, GeomError, Grid, RasterSet, SetExpr};
use crate::math;

/// Largest distance from an occupied cell of `from` to the occupied cells
/// of `to`, both given as occupancy on `grid`.
fn directed(grid: &Grid, from: &[bool], to: &[bool]) -> f64 {
    let d2 = squared_distance_transform(grid.n, to);
    let m = from
        .iter()
        .zip(&d2)
        .filter(|(f, _)| **f)
        .map(|(_, d)| *d)
        .fold(0.0, f64::max);
    math::sqrt(m) * grid.h
}

/// Essential Hausdorff distance between rasters on a common lattice,
/// measured between occupied cell centres with an exact distance
/// transform. `+∞` when exactly one set is negligible, 0 when both are.
pub fn essential_hausdorff(a: &RasterSet, b: &RasterSet) -> Result<f64, GeomError> {
    if !a.grid().compatible(b.grid()) {
        return Err(GeomError::IncompatibleRasters);
    }
    let u = a.grid().hull(b.grid())?;
    let oa: Vec<bool> = a.embed(&u)?.occupancy();
    let ob: Vec<bool> = b.embed(&u)?.occupancy();
    let (ea, eb) = (oa.iter().any(|&x| x), ob.iter().any(|&x| x));
    match (ea, eb) {
        (false, false) => return Ok(0.0),
        (true, false) | (false, true) => return Ok(f64::INFINITY),
        _ => {}
    }
    Ok(directed(&u, &oa, &ob).max(directed(&u, &ob, &oa)))
}

/// Essential Hausdorff distance between expressions, rasterized at cell
/// size `h` on a common grid.
pub fn essential_hausdorff_expr(a: &SetExpr, b: &SetExpr, h: f64) -> Result<f64, GeomError> {
    if a.dim() != b.dim() {
        return Err(GeomError::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let grid = Grid::covering(a.dim(), h, &a.bbox().union(&b.bbox()), 1)?;
    let s = default_supersampling(a.dim());
    essential_hausdorff(&rasterize_on(a, &grid, s)?, &rasterize_on(b, &grid, s)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::rasterize;
    use crate::point::Point;
    use alloc::vec;

    #[test]
    fn interval_examples() {
        let a = SetExpr::interval(0.0, 1.0).unwrap();
        let b = SetExpr::interval(0.0, 2.0).unwrap();
        assert!((essential_hausdorff_expr(&a, &b, 0.01).unwrap() - 1.0).abs() < 0.011);
        assert_eq!(essential_hausdorff_expr(&a, &a, 0.01).unwrap(), 0.0);
    }

    #[test]
    fn negligible_set_conventions() {
        let a = SetExpr::interval(0.0, 1.0).unwrap();
        let ra = rasterize(&a, 0.1, 8).unwrap();
        let empty = RasterSet::from_coverage(*ra.grid(), 8, vec![0.0; ra.grid().len()]).unwrap();
        assert_eq!(essential_hausdorff(&ra, &empty).unwrap(), f64::INFINITY);
        assert_eq!(essential_hausdorff(&empty, &ra).unwrap(), f64::INFINITY);
        assert_eq!(essential_hausdorff(&empty, &empty).unwrap(), 0.0);
    }

    #[test]
    fn disks_in_the_plane() {
        let a = SetExpr::ball(2, Point::ORIGIN, 1.0).unwrap();
        let b = SetExpr::ball(2, Point::xy(0.5, 0.0), 1.0).unwrap();
        let d = essential_hausdorff_expr(&a, &b, 0.01).unwrap();
        assert!((d - 0.5).abs() < 0.02);
        let d2 = essential_hausdorff_expr(&b, &a, 0.01).unwrap();
        assert_eq!(d, d2);
    }

    #[test]
    fn thin_sliver_is_invisible() {
        // A box thinner than half a cell has no occupied cell anywhere.
        let a = SetExpr::ball(2, Point::ORIGIN, 1.0).unwrap();
        let sliver = SetExpr::cuboid(2, Point::xy(1.5, 0.0), Point::xy(3.0, 0.001)).unwrap();
        let b = SetExpr::union(vec![a.clone(), sliver]).unwrap();
        assert!(essential_hausdorff_expr(&a, &b, 0.05).unwrap() < 1e-12);
    }
}
