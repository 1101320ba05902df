use alloc::vec::Vec;

use super::{GeomError, RasterSet};
use crate::math;
use crate::point::{Point, MAX_DIM};

/// Smallest ball containing a set, up to a negligible set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnclosingBall {
    pub center: Point,
    pub radius: f64,
}

fn cross(o: &Point, a: &Point, b: &Point) -> f64 {
    (a.0[0] - o.0[0]) * (b.0[1] - o.0[1]) - (a.0[1] - o.0[1]) * (b.0[0] - o.0[0])
}

/// Convex hull (monotone chain), counter-clockwise, collinear points dropped.
pub(crate) fn convex_hull_2d(mut pts: Vec<Point>) -> Vec<Point> {
    pts.sort_by(|a, b| a.lex_cmp(b, 2));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: &mut dyn Iterator<Item = &Point> =
            if pass == 0 { &mut pts.iter() } else { &mut pts.iter().rev() };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

/// Occupied cell centres that realise every maximum distance from an
/// arbitrary point: the two extremes in 1-D, the convex hull of the row
/// extremes in 2-D, the row extremes in 3-D.
pub(crate) fn outline_points(r: &RasterSet) -> Vec<Point> {
    let g = r.grid();
    let mut pts = Vec::new();
    let rows = g.n[1] * g.n[2];
    for row in 0..rows {
        let base = row * g.n[0];
        let first = (0..g.n[0]).find(|&i| r.occupied(base + i));
        let Some(first) = first else { continue };
        let last = (0..g.n[0]).rev().find(|&i| r.occupied(base + i)).expect("row has an occupied cell");
        let c = g.unindex(base);
        pts.push(g.center([first, c[1], c[2]]));
        if last != first {
            pts.push(g.center([last, c[1], c[2]]));
        }
    }
    if g.dim == 2 {
        return convex_hull_2d(pts);
    }
    pts
}

fn solve_small(a: &mut [[f64; MAX_DIM]; MAX_DIM], b: &mut [f64; MAX_DIM], n: usize) -> Option<[f64; MAX_DIM]> {
    let scale = (0..n).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; MAX_DIM];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in (row + 1)..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Smallest ball with all of `bnd` on its boundary (circumsphere within the
/// affine hull). Returns the squared radius.
fn circumball(bnd: &[Point]) -> (Point, f64) {
    match bnd.len() {
        0 => (Point::ORIGIN, -1.0),
        1 => (bnd[0], 0.0),
        _ => {
            let p0 = bnd[0];
            let m = bnd.len() - 1;
            let vs: Vec<Point> = bnd[1..].iter().map(|p| *p - p0).collect();
            let mut a = [[0.0; MAX_DIM]; MAX_DIM];
            let mut b = [0.0; MAX_DIM];
            for i in 0..m {
                for j in 0..m {
                    a[i][j] = vs[i].dot(&vs[j]);
                }
                b[i] = 0.5 * vs[i].norm2();
            }
            match solve_small(&mut a, &mut b, m) {
                Some(l) => {
                    let mut c = p0;
                    for i in 0..m {
                        c = c + vs[i] * l[i];
                    }
                    (c, c.dist2(&p0))
                }
                None => {
                    // Degenerate boundary: fall back to the farthest pair.
                    let mut best = (p0, 0.0);
                    for i in 0..bnd.len() {
                        for j in (i + 1)..bnd.len() {
                            let d2 = bnd[i].dist2(&bnd[j]);
                            if d2 > 4.0 * best.1 {
                                best = (bnd[i].midpoint(&bnd[j]), d2 / 4.0);
                            }
                        }
                    }
                    best
                }
            }
        }
    }
}

fn outside(p: &Point, c: &Point, r2: f64) -> bool {
    p.dist2(c) > r2 * (1.0 + 1e-12) + 1e-300
}

fn welzl(pts: &[Point], n: usize, bnd: &mut Vec<Point>, dim: usize) -> (Point, f64) {
    let (mut c, mut r2) = circumball(bnd);
    if bnd.len() == dim + 1 {
        return (c, r2);
    }
    for i in 0..n {
        if outside(&pts[i], &c, r2) {
            bnd.push(pts[i]);
            (c, r2) = welzl(pts, i, bnd, dim);
            bnd.pop();
        }
    }
    (c, r2)
}

/// Minimal ball around `pts` (Welzl's algorithm on a deterministically
/// shuffled copy). Returns centre and radius.
pub fn min_ball(pts: &[Point], dim: usize) -> Option<(Point, f64)> {
    if pts.is_empty() {
        return None;
    }
    if dim == 1 {
        let lo = pts.iter().map(|p| p.0[0]).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p.0[0]).fold(f64::NEG_INFINITY, f64::max);
        return Some((Point::x(0.5 * (lo + hi)), 0.5 * (hi - lo)));
    }
    let mut v = pts.to_vec();
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    for i in (1..v.len()).rev() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        v.swap(i, (state % (i as u64 + 1)) as usize);
    }
    let mut bnd = Vec::with_capacity(dim + 1);
    let (c, r2) = welzl(&v, v.len(), &mut bnd, dim);
    // Rounding can leave a point a hair outside; grow to cover it.
    let r = v.iter().map(|p| p.dist(&c)).fold(math::sqrt(r2.max(0.0)), f64::max);
    Some((c, r))
}

/// Minimal ball around the occupied cell centres, radius grown by the cell
/// half-diagonal `h√N/2`.
pub fn enclosing_ball(r: &RasterSet) -> Result<EnclosingBall, GeomError> {
    let pts = outline_points(r);
    let (center, radius) = min_ball(&pts, r.dim()).ok_or(GeomError::EmptySet)?;
    Ok(EnclosingBall { center, radius: radius + half_diagonal(r) })
}

pub(crate) fn half_diagonal(r: &RasterSet) -> f64 {
    r.h() * math::sqrt(r.dim() as f64) / 2.0
}

/// Largest distance between occupied cell centres plus `h√N`.
pub fn essential_diameter(r: &RasterSet) -> Result<f64, GeomError> {
    let pts = outline_points(r);
    if pts.is_empty() {
        return Err(GeomError::EmptySet);
    }
    let mut best = 0.0f64;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            best = best.max(pts[i].dist2(&pts[j]));
        }
    }
    Ok(math::sqrt(best) + 2.0 * half_diagonal(r))
}
