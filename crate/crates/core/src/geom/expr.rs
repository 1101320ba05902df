use alloc::boxed::Box;
use alloc::vec::Vec;

use super::{check_dim, GeomError};
use crate::math;
use crate::point::{Point, MAX_DIM};

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn union(&self, o: &Aabb) -> Aabb {
        let mut a = *self;
        for k in 0..MAX_DIM {
            a.min.0[k] = a.min.0[k].min(o.min.0[k]);
            a.max.0[k] = a.max.0[k].max(o.max.0[k]);
        }
        a
    }

    pub fn intersection(&self, o: &Aabb, dim: usize) -> Option<Aabb> {
        let mut a = *self;
        for k in 0..MAX_DIM {
            a.min.0[k] = a.min.0[k].max(o.min.0[k]);
            a.max.0[k] = a.max.0[k].min(o.max.0[k]);
        }
        (0..dim).all(|k| a.min.0[k] < a.max.0[k]).then_some(a)
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.max.0[axis] - self.min.0[axis]
    }

    pub fn center(&self) -> Point {
        self.min.midpoint(&self.max)
    }

    pub fn is_finite(&self) -> bool {
        self.min.is_finite() && self.max.is_finite()
    }

    pub fn inflate(&self, r: f64, dim: usize) -> Aabb {
        let mut a = *self;
        for k in 0..dim {
            a.min.0[k] -= r;
            a.max.0[k] += r;
        }
        a
    }
}

/// One node of a constructive set description. Primitives are open sets.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Ball { center: Point, radius: f64 },
    Box { min: Point, max: Point },
    Union(Vec<Node>),
    Intersect(Vec<Node>),
    Diff(Box<Node>, Box<Node>),
}

impl Node {
    pub fn is_primitive(&self) -> bool {
        matches!(self, Node::Ball { .. } | Node::Box { .. })
    }

    /// Open-set membership.
    pub fn contains(&self, p: &Point) -> bool {
        match self {
            Node::Ball { center, radius } => p.dist2(center) < radius * radius,
            Node::Box { min, max } => (0..MAX_DIM)
                .all(|k| (min.0[k] == max.0[k]) || (p.0[k] > min.0[k] && p.0[k] < max.0[k])),
            Node::Union(ch) => ch.iter().any(|c| c.contains(p)),
            Node::Intersect(ch) => ch.iter().all(|c| c.contains(p)),
            Node::Diff(a, b) => a.contains(p) && !b.contains(p),
        }
    }

    /// Bounding box, `None` when provably empty.
    pub fn bbox(&self, dim: usize) -> Option<Aabb> {
        match self {
            Node::Ball { center, radius } => {
                let mut min = *center;
                let mut max = *center;
                for k in 0..dim {
                    min.0[k] -= radius;
                    max.0[k] += radius;
                }
                Some(Aabb { min, max })
            }
            Node::Box { min, max } => Some(Aabb { min: *min, max: *max }),
            Node::Union(ch) => ch
                .iter()
                .filter_map(|c| c.bbox(dim))
                .reduce(|a, b| a.union(&b)),
            Node::Intersect(ch) => {
                let mut it = ch.iter();
                let mut acc = it.next()?.bbox(dim)?;
                for c in it {
                    acc = acc.intersection(&c.bbox(dim)?, dim)?;
                }
                Some(acc)
            }
            Node::Diff(a, _) => a.bbox(dim),
        }
    }

    fn validate(&self, dim: usize) -> Result<(), GeomError> {
        let point_ok = |p: &Point| p.is_finite() && p.fits_dim(dim);
        match self {
            Node::Ball { center, radius } => {
                if !point_ok(center) {
                    return Err(GeomError::DimensionMismatch { expected: dim, found: MAX_DIM });
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(GeomError::DegeneratePrimitive);
                }
                Ok(())
            }
            Node::Box { min, max } => {
                if !point_ok(min) || !point_ok(max) {
                    return Err(GeomError::DimensionMismatch { expected: dim, found: MAX_DIM });
                }
                if (0..dim).any(|k| !(max.0[k] > min.0[k])) {
                    return Err(GeomError::DegeneratePrimitive);
                }
                Ok(())
            }
            Node::Union(ch) | Node::Intersect(ch) => {
                if ch.is_empty() {
                    return Err(GeomError::EmptyOperandList);
                }
                ch.iter().try_for_each(|c| c.validate(dim))
            }
            Node::Diff(a, b) => {
                a.validate(dim)?;
                b.validate(dim)
            }
        }
    }

    fn map_points(&self, f: &impl Fn(Point) -> Point, scale: f64) -> Node {
        match self {
            Node::Ball { center, radius } => Node::Ball { center: f(*center), radius: radius * scale },
            Node::Box { min, max } => {
                let (a, b) = (f(*min), f(*max));
                let mut lo = a;
                let mut hi = b;
                for k in 0..MAX_DIM {
                    lo.0[k] = a.0[k].min(b.0[k]);
                    hi.0[k] = a.0[k].max(b.0[k]);
                }
                Node::Box { min: lo, max: hi }
            }
            Node::Union(ch) => Node::Union(ch.iter().map(|c| c.map_points(f, scale)).collect()),
            Node::Intersect(ch) => {
                Node::Intersect(ch.iter().map(|c| c.map_points(f, scale)).collect())
            }
            Node::Diff(a, b) => Node::Diff(
                Box::new(a.map_points(f, scale)),
                Box::new(b.map_points(f, scale)),
            ),
        }
    }

    fn collect_union_primitives<'a>(&'a self, out: &mut Vec<&'a Node>) -> bool {
        match self {
            Node::Ball { .. } | Node::Box { .. } => {
                out.push(self);
                true
            }
            Node::Union(ch) => ch.iter().all(|c| c.collect_union_primitives(out)),
            _ => false,
        }
    }

    fn primitive_measure(&self, dim: usize) -> f64 {
        match self {
            Node::Ball { radius, .. } => math::unit_ball_volume(dim) * math::powi(*radius, dim as i32),
            Node::Box { min, max } => (0..dim).map(|k| max.0[k] - min.0[k]).product(),
            _ => unreachable!("primitive_measure on a composite node"),
        }
    }

    fn count(&self) -> usize {
        match self {
            Node::Union(ch) | Node::Intersect(ch) => 1 + ch.iter().map(Node::count).sum::<usize>(),
            Node::Diff(a, b) => 1 + a.count() + b.count(),
            _ => 1,
        }
    }
}

/// Disjointness of two primitives up to a negligible set.
fn primitives_disjoint(a: &Node, b: &Node) -> bool {
    match (a, b) {
        (Node::Ball { center: c1, radius: r1 }, Node::Ball { center: c2, radius: r2 }) => {
            c1.dist2(c2) >= (r1 + r2) * (r1 + r2)
        }
        (Node::Box { min: a0, max: a1 }, Node::Box { min: b0, max: b1 }) => {
            (0..MAX_DIM).any(|k| a1.0[k] <= b0.0[k] || b1.0[k] <= a0.0[k])
                && !(0..MAX_DIM).all(|k| a0.0[k] == a1.0[k])
        }
        (Node::Ball { center, radius }, Node::Box { min, max })
        | (Node::Box { min, max }, Node::Ball { center, radius }) => {
            let mut d2 = 0.0;
            for k in 0..MAX_DIM {
                let c = center.0[k];
                let q = c.clamp(min.0[k], max.0[k]);
                d2 += (c - q) * (c - q);
            }
            d2 >= radius * radius
        }
        _ => false,
    }
}

fn merge_intervals(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        if b <= a {
            continue;
        }
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

fn intersect_intervals(x: &[(f64, f64)], y: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < x.len() && j < y.len() {
        let a = x[i].0.max(y[j].0);
        let b = x[i].1.min(y[j].1);
        if a < b {
            out.push((a, b));
        }
        if x[i].1 < y[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

fn subtract_intervals(x: &[(f64, f64)], y: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut j = 0;
    for &(a, b) in x {
        let mut cur = a;
        while j < y.len() && y[j].1 <= cur {
            j += 1;
        }
        let mut jj = j;
        while jj < y.len() && y[jj].0 < b {
            if y[jj].0 > cur {
                out.push((cur, y[jj].0));
            }
            cur = cur.max(y[jj].1);
            jj += 1;
        }
        if cur < b {
            out.push((cur, b));
        }
    }
    merge_intervals(out)
}

fn interval_list(n: &Node) -> Vec<(f64, f64)> {
    match n {
        Node::Ball { center, radius } => alloc::vec![(center.0[0] - radius, center.0[0] + radius)],
        Node::Box { min, max } => alloc::vec![(min.0[0], max.0[0])],
        Node::Union(ch) => merge_intervals(ch.iter().flat_map(interval_list).collect()),
        Node::Intersect(ch) => {
            let mut it = ch.iter();
            let mut acc = it.next().map(interval_list).unwrap_or_default();
            for c in it {
                acc = intersect_intervals(&acc, &interval_list(c));
            }
            acc
        }
        Node::Diff(a, b) => subtract_intervals(&interval_list(a), &interval_list(b)),
    }
}

/// Exact description of a bounded set in `R^N`, `N ∈ {1, 2, 3}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SetExpr {
    dim: usize,
    node: Node,
}

impl SetExpr {
    /// Validates every primitive against `dim`.
    pub fn new(dim: usize, node: Node) -> Result<Self, GeomError> {
        check_dim(dim)?;
        node.validate(dim)?;
        let bbox = node.bbox(dim).ok_or(GeomError::EmptyBoundingBox)?;
        if !bbox.is_finite() {
            return Err(GeomError::Unbounded);
        }
        Ok(SetExpr { dim, node })
    }

    pub fn ball(dim: usize, center: Point, radius: f64) -> Result<Self, GeomError> {
        SetExpr::new(dim, Node::Ball { center, radius })
    }

    pub fn cuboid(dim: usize, min: Point, max: Point) -> Result<Self, GeomError> {
        SetExpr::new(dim, Node::Box { min, max })
    }

    /// Open cube of side `side` centred at `center`.
    pub fn cube(dim: usize, center: Point, side: f64) -> Result<Self, GeomError> {
        let half = Point::splat(dim, side / 2.0);
        SetExpr::cuboid(dim, center - half, center + half)
    }

    /// Open interval `(a, b)` of the real line.
    pub fn interval(a: f64, b: f64) -> Result<Self, GeomError> {
        SetExpr::cuboid(1, Point::x(a), Point::x(b))
    }

    /// Union of the open intervals `(a_i, b_i)`.
    pub fn intervals(pairs: &[(f64, f64)]) -> Result<Self, GeomError> {
        let nodes = pairs
            .iter()
            .map(|&(a, b)| Node::Box { min: Point::x(a), max: Point::x(b) })
            .collect();
        SetExpr::new(1, Node::Union(nodes))
    }

    fn same_dim(parts: &[SetExpr]) -> Result<usize, GeomError> {
        let first = parts.first().ok_or(GeomError::EmptyOperandList)?;
        for p in parts {
            if p.dim != first.dim {
                return Err(GeomError::DimensionMismatch { expected: first.dim, found: p.dim });
            }
        }
        Ok(first.dim)
    }

    pub fn union(parts: Vec<SetExpr>) -> Result<Self, GeomError> {
        let dim = Self::same_dim(&parts)?;
        SetExpr::new(dim, Node::Union(parts.into_iter().map(|p| p.node).collect()))
    }

    pub fn intersect(parts: Vec<SetExpr>) -> Result<Self, GeomError> {
        let dim = Self::same_dim(&parts)?;
        SetExpr::new(dim, Node::Intersect(parts.into_iter().map(|p| p.node).collect()))
    }

    pub fn diff(a: SetExpr, b: SetExpr) -> Result<Self, GeomError> {
        if a.dim != b.dim {
            return Err(GeomError::DimensionMismatch { expected: a.dim, found: b.dim });
        }
        SetExpr::new(a.dim, Node::Diff(Box::new(a.node), Box::new(b.node)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn into_node(self) -> Node {
        self.node
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.node.contains(p)
    }

    pub fn bbox(&self) -> Aabb {
        // Non-emptiness was checked at construction.
        self.node.bbox(self.dim).expect("validated set has a bounding box")
    }

    /// Number of nodes in the tree.
    pub fn node_count(&self) -> usize {
        self.node.count()
    }

    pub fn translate(&self, v: Point) -> SetExpr {
        SetExpr { dim: self.dim, node: self.node.map_points(&|p| p + v, 1.0) }
    }

    /// Dilation `μE` about the origin.
    pub fn scale(&self, mu: f64) -> Result<SetExpr, GeomError> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(GeomError::DegeneratePrimitive);
        }
        Ok(SetExpr { dim: self.dim, node: self.node.map_points(&|p| p * mu, mu) })
    }

    /// Canonical form of a 1-D set: sorted, pairwise disjoint open
    /// intervals, with intervals that touch merged (they differ from their
    /// union by a negligible set). `None` in higher dimensions.
    pub fn intervals_1d(&self) -> Option<Vec<(f64, f64)>> {
        (self.dim == 1).then(|| interval_list(&self.node))
    }

    /// Closed-form measure. Every 1-D set qualifies; in higher dimensions
    /// the set must be a union of pairwise disjoint primitives (up to
    /// negligible overlaps).
    pub fn exact_measure(&self) -> Option<f64> {
        if let Some(iv) = self.intervals_1d() {
            return Some(iv.iter().map(|(a, b)| b - a).collect::<math::CompensatedSum>().value());
        }
        let mut prims = Vec::new();
        if !self.node.collect_union_primitives(&mut prims) {
            return None;
        }
        // Sweep along the first axis so only overlapping bboxes are compared.
        let mut items: Vec<(Aabb, &Node)> = prims
            .iter()
            .map(|n| (n.bbox(self.dim).expect("primitive bbox"), *n))
            .collect();
        items.sort_by(|a, b| a.0.min.0[0].total_cmp(&b.0.min.0[0]));
        for i in 0..items.len() {
            for j in (i + 1)..items.len() {
                if items[j].0.min.0[0] >= items[i].0.max.0[0] {
                    break;
                }
                if !primitives_disjoint(items[i].1, items[j].1) {
                    return None;
                }
            }
        }
        let mut sum = math::CompensatedSum::new();
        for (_, n) in &items {
            sum.add(n.primitive_measure(self.dim));
        }
        Some(sum.value())
    }

    /// Smallest primitive length scale (ball radius or half box side).
    pub fn min_feature(&self) -> f64 {
        fn walk(n: &Node, dim: usize, acc: &mut f64) {
            match n {
                Node::Ball { radius, .. } => *acc = acc.min(*radius),
                Node::Box { min, max } => {
                    for k in 0..dim {
                        *acc = acc.min((max.0[k] - min.0[k]) / 2.0);
                    }
                }
                Node::Union(ch) | Node::Intersect(ch) => ch.iter().for_each(|c| walk(c, dim, acc)),
                Node::Diff(a, b) => {
                    walk(a, dim, acc);
                    walk(b, dim, acc);
                }
            }
        }
        let mut acc = f64::INFINITY;
        walk(&self.node, self.dim, &mut acc);
        acc
    }
}
