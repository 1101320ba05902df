use core::cmp::Ordering;
use core::ops::{Add, Mul, Sub};

use crate::math;

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// A point of `R^N`, `N <= 3`. Coordinates past the dimension in use are
/// kept at zero, so norms and distances never need to know `N`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point(pub [f64; MAX_DIM]);

impl Point {
    pub const ORIGIN: Point = Point([0.0; MAX_DIM]);

    /// Builds a point from up to three coordinates.
    ///
    /// # Panics
    /// If more than [`MAX_DIM`] coordinates are given.
    pub fn new(coords: &[f64]) -> Self {
        assert!(coords.len() <= MAX_DIM, "at most {MAX_DIM} coordinates");
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Point(c)
    }

    pub fn x(t: f64) -> Self {
        Point([t, 0.0, 0.0])
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Point([x, y, 0.0])
    }

    /// `t` along the first axis.
    pub fn on_axis(t: f64) -> Self {
        Point::x(t)
    }

    pub fn splat(dim: usize, v: f64) -> Self {
        let mut c = [0.0; MAX_DIM];
        for x in c.iter_mut().take(dim) {
            *x = v;
        }
        Point(c)
    }

    #[inline]
    pub fn dot(&self, o: &Point) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    #[inline]
    pub fn norm2(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        math::sqrt(self.norm2())
    }

    #[inline]
    pub fn dist2(&self, o: &Point) -> f64 {
        (*self - *o).norm2()
    }

    #[inline]
    pub fn dist(&self, o: &Point) -> f64 {
        math::sqrt(self.dist2(o))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// True when every coordinate at index `>= dim` is zero.
    pub fn fits_dim(&self, dim: usize) -> bool {
        self.0[dim.min(MAX_DIM)..].iter().all(|&c| c == 0.0)
    }

    pub fn coords(&self, dim: usize) -> &[f64] {
        &self.0[..dim]
    }

    /// Lexicographic order on the first `dim` coordinates.
    pub fn lex_cmp(&self, o: &Point, dim: usize) -> Ordering {
        for k in 0..dim {
            match self.0[k].partial_cmp(&o.0[k]) {
                Some(Ordering::Equal) | None => continue,
                Some(ord) => return ord,
            }
        }
        Ordering::Equal
    }

    pub fn midpoint(&self, o: &Point) -> Point {
        (*self + *o) * 0.5
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, s: f64) -> Point {
        Point([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

#[cfg(feature = "serde")]
mod serde_impl {
    use super::{Point, MAX_DIM};
    use alloc::vec::Vec;
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    /// Serialized as a list of 1 to 3 coordinates with trailing zeros
    /// dropped.
    impl Serialize for Point {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            let mut n = MAX_DIM;
            while n > 1 && self.0[n - 1] == 0.0 {
                n -= 1;
            }
            self.0[..n].serialize(s)
        }
    }

    impl<'de> Deserialize<'de> for Point {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            let v: Vec<f64> = Vec::deserialize(d)?;
            if v.is_empty() || v.len() > MAX_DIM {
                return Err(D::Error::custom("a point has 1 to 3 coordinates"));
            }
            Ok(Point::new(&v))
        }
    }
}
