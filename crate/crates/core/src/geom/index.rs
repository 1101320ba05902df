use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::ball::{half_diagonal, outline_points};
use super::{
    default_supersampling, enclosing_ball, essential_diameter, rasterize, squared_distance_transform,
    GeomError, Grid, RasterSet, SetExpr,
};
use crate::math;
use crate::point::{Point, MAX_DIM};

/// Knobs of the index computation. `None` picks the defaults of
/// [`default_h`] and [`default_supersampling`].
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct IndexOptions {
    pub h: Option<f64>,
    pub supersampling: Option<usize>,
    /// Coarse candidates refined by pattern search.
    pub top_k: usize,
    /// Pattern search stops below `h / refine_divisor`.
    pub refine_divisor: f64,
    /// Cell budget used when choosing a default `h`.
    pub max_cells: usize,
}

impl Default for IndexOptions {
    fn default() -> Self {
        IndexOptions { h: None, supersampling: None, top_k: 3, refine_divisor: 16.0, max_cells: 4_000_000 }
    }
}

/// Optimal value of an index and the ball centre achieving it.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IndexValue {
    pub value: f64,
    pub center: Point,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IndexReport {
    pub dim: usize,
    pub h: f64,
    pub measure: f64,
    pub r_e: f64,
    pub rho: f64,
    pub x_e: Point,
    pub diameter: f64,
    pub delta1: f64,
    pub delta1_center: Point,
    pub delta_h: f64,
    pub delta_h_center: Point,
    /// `(ρ_E − R_E)/(ρ_E + R_E)`.
    pub delta_h_lower_bound: f64,
    /// Raster tolerance `3h/R_E` for both indices.
    pub tolerance: f64,
}

/// `3h/R_E`: the resolution-induced uncertainty on either index.
pub fn index_tolerance(h: f64, r_e: f64) -> f64 {
    3.0 * h / r_e
}

fn cells_per_radius(dim: usize) -> f64 {
    match dim {
        1 => 1500.0,
        2 => 150.0,
        _ => 30.0,
    }
}

/// Cell size giving `R_E / 1500` (1-D), `R_E / 150` (2-D) or `R_E / 30`
/// (3-D), coarsened until the raster fits in `max_cells`.
pub fn default_h(expr: &SetExpr, max_cells: usize) -> Result<f64, GeomError> {
    let dim = expr.dim();
    let bb = expr.bbox();
    let extent = (0..dim).map(|k| bb.extent(k)).fold(0.0, f64::max);
    let measure = match expr.exact_measure() {
        Some(m) => m,
        None => rasterize(expr, extent / 512.0, default_supersampling(dim))?.measure(),
    };
    if measure <= 0.0 {
        return Err(GeomError::EmptySet);
    }
    let r = math::equimeasurable_radius(measure, dim);
    let mut h = (r / cells_per_radius(dim)).min(extent / 4.0);
    let cells = |h: f64| (0..dim).map(|k| bb.extent(k) / h + 3.0).product::<f64>();
    while cells(h) > max_cells as f64 {
        h *= 1.1;
    }
    Ok(h)
}

fn lex(a: &Point, b: &Point, dim: usize) -> Ordering {
    a.lex_cmp(b, dim)
}

/// Keeps the `k` best (smallest value, then lexicographically smallest
/// centre) distinct candidates.
struct TopK {
    k: usize,
    dim: usize,
    items: Vec<(f64, Point)>,
}

impl TopK {
    fn new(k: usize, dim: usize) -> Self {
        TopK { k: k.max(1), dim, items: Vec::new() }
    }

    fn better(&self, a: &(f64, Point), b: &(f64, Point)) -> bool {
        a.0 < b.0 || (a.0 == b.0 && lex(&a.1, &b.1, self.dim) == Ordering::Less)
    }

    fn threshold(&self) -> f64 {
        if self.items.len() < self.k {
            f64::INFINITY
        } else {
            self.items[self.k - 1].0
        }
    }

    fn offer(&mut self, v: f64, c: Point) {
        let item = (v, c);
        if self.items.len() == self.k && !self.better(&item, &self.items[self.k - 1]) {
            return;
        }
        if self.items.iter().any(|x| x.1 == c) {
            return;
        }
        let pos = self.items.iter().position(|x| self.better(&item, x)).unwrap_or(self.items.len());
        self.items.insert(pos, item);
        self.items.truncate(self.k);
    }
}

/// Precomputed data shared by both index searches.
struct Prepared<'a> {
    r: &'a RasterSet,
    g: Grid,
    dim: usize,
    h: f64,
    lambda: f64,
    radius: f64,
    /// Per-row prefix sums of coverage, `n[0] + 1` entries per row.
    prefix: Vec<f64>,
    outline: Vec<Point>,
    /// Cell range (inclusive) of cells with positive coverage.
    lo: [usize; MAX_DIM],
    hi: [usize; MAX_DIM],
}

impl<'a> Prepared<'a> {
    fn new(r: &'a RasterSet) -> Result<Self, GeomError> {
        let g = *r.grid();
        let lambda = r.measure();
        if lambda <= 0.0 || r.occupied_count() == 0 {
            return Err(GeomError::EmptySet);
        }
        let n0 = g.n[0];
        let rows = g.n[1] * g.n[2];
        let mut prefix = vec![0.0; rows * (n0 + 1)];
        let mut lo = [usize::MAX; MAX_DIM];
        let mut hi = [0usize; MAX_DIM];
        for row in 0..rows {
            let base = row * n0;
            let pb = row * (n0 + 1);
            for i in 0..n0 {
                let c = r.coverage()[base + i];
                prefix[pb + i + 1] = prefix[pb + i] + c;
                if c > 0.0 {
                    let cc = g.unindex(base + i);
                    for k in 0..MAX_DIM {
                        lo[k] = lo[k].min(cc[k]);
                        hi[k] = hi[k].max(cc[k]);
                    }
                }
            }
        }
        Ok(Prepared {
            r,
            g,
            dim: g.dim,
            h: g.h,
            lambda,
            radius: math::equimeasurable_radius(lambda, g.dim),
            prefix,
            outline: outline_points(r),
            lo,
            hi,
        })
    }

    /// Cell index range along `axis` whose centres lie within `w` of `x`.
    fn span(&self, axis: usize, x: f64, w: f64, n: usize, offset: i64) -> Option<(usize, usize)> {
        let a = math::ceil((x - w) / self.h - offset as f64 - 0.5);
        let b = math::floor((x + w) / self.h - offset as f64 - 0.5);
        let a = a.max(0.0);
        let b = b.min(n as f64 - 1.0);
        let _ = axis;
        (a <= b).then(|| (a as usize, b as usize))
    }

    /// `λ(E ∩ B_R(x))`: exact along axis 0, midpoint rule across rows.
    fn overlap(&self, x: &Point) -> f64 {
        let g = &self.g;
        let r2 = self.radius * self.radius;
        let n0 = g.n[0];
        let (j0, j1) = if self.dim >= 2 {
            match self.span(1, x.0[1], self.radius, g.n[1], g.offset[1]) {
                Some(s) => s,
                None => return 0.0,
            }
        } else {
            (0, 0)
        };
        let (k0, k1) = if self.dim >= 3 {
            match self.span(2, x.0[2], self.radius, g.n[2], g.offset[2]) {
                Some(s) => s,
                None => return 0.0,
            }
        } else {
            (0, 0)
        };
        let cum = |pb: usize, u: f64| -> f64 {
            let u = u.clamp(0.0, n0 as f64);
            let i = (math::floor(u) as usize).min(n0 - 1);
            let base = self.prefix[pb + i];
            base + (u - i as f64) * (self.prefix[pb + i + 1] - base)
        };
        let mut sum = 0.0;
        for k in k0..=k1 {
            let dz = if self.dim >= 3 { g.coord(2, k) - x.0[2] } else { 0.0 };
            for j in j0..=j1 {
                let dy = if self.dim >= 2 { g.coord(1, j) - x.0[1] } else { 0.0 };
                let w2 = r2 - dy * dy - dz * dz;
                if w2 <= 0.0 {
                    continue;
                }
                let w = math::sqrt(w2);
                let pb = (j + g.n[1] * k) * (n0 + 1);
                let off = g.offset[0] as f64;
                sum += cum(pb, (x.0[0] + w) / self.h - off) - cum(pb, (x.0[0] - w) / self.h - off);
            }
        }
        sum * g.cell_measure()
    }

    fn delta1_at(&self, x: &Point) -> f64 {
        1.0 - self.overlap(x) / self.lambda
    }

    /// Largest distance from `x` to an occupied cell centre plus the cell
    /// half-diagonal, minus `R_E`.
    fn t1(&self, x: &Point) -> f64 {
        let m = self.outline.iter().map(|p| p.dist2(x)).fold(0.0, f64::max);
        (math::sqrt(m) + half_diagonal(self.r) - self.radius).max(0.0)
    }

    fn clamp_to_support(&self, x: &Point) -> Point {
        let mut p = *x;
        for k in 0..self.dim {
            let a = (self.g.offset[k] + self.lo[k] as i64) as f64 * self.h;
            let b = (self.g.offset[k] + self.hi[k] as i64 + 1) as f64 * self.h;
            p.0[k] = p.0[k].clamp(a, b);
        }
        p
    }

    /// Cell centres of the support bounding box at a stride that keeps the
    /// candidate count per axis bounded.
    fn coarse_candidates(&self, mut keep: impl FnMut(usize) -> bool) -> Vec<Point> {
        let cap = match self.dim {
            1 => usize::MAX,
            2 => 2048,
            _ => 64,
        };
        let mut stride = [1usize; MAX_DIM];
        for k in 0..self.dim {
            stride[k] = (self.hi[k] - self.lo[k] + 1).div_ceil(cap).max(1);
        }
        let mut out = Vec::new();
        let mut k = self.lo[2];
        while k <= self.hi[2] {
            let mut j = self.lo[1];
            while j <= self.hi[1] {
                let mut i = self.lo[0];
                while i <= self.hi[0] {
                    if keep(self.g.index(i, j, k)) {
                        out.push(self.g.center([i, j, k]));
                    }
                    i += stride[0];
                }
                j += stride[1];
            }
            k += stride[2];
        }
        out
    }

    /// Same top-k as scoring every coarse candidate, found best-first over
    /// blocks of the candidate lattice. A block is skipped when its lower
    /// bound, `δ₁(rep) − L·dist`, exceeds the current k-th best. `δ₁` is
    /// `N/R_E`-Lipschitz for the exact set; the bound doubles that and adds
    /// one cell of slack for the row quadrature.
    fn branch_and_bound(&self, top: &mut TopK, f: &impl Fn(&Point) -> f64, keep: impl Fn(usize) -> bool) {
        let dim = self.dim;
        let stride = (self.stride_h() / self.h).round() as usize;
        let mut count = [1usize; MAX_DIM];
        for k in 0..dim {
            count[k] = (self.hi[k] - self.lo[k]) / stride + 1;
        }
        let lip = 2.0 * dim as f64 / self.radius;
        let slack = lip * self.h;
        let spacing = stride as f64 * self.h;
        let cell = |m: &[usize; MAX_DIM]| -> [usize; MAX_DIM] {
            let mut c = [0usize; MAX_DIM];
            for k in 0..MAX_DIM {
                c[k] = self.lo[k] + m[k] * stride;
            }
            c
        };

        struct Block {
            lb: f64,
            start: [usize; MAX_DIM],
            size: usize,
        }
        impl PartialEq for Block {
            fn eq(&self, o: &Self) -> bool {
                self.lb == o.lb
            }
        }
        impl Eq for Block {}
        impl PartialOrd for Block {
            fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for Block {
            fn cmp(&self, o: &Self) -> Ordering {
                o.lb.total_cmp(&self.lb)
            }
        }

        let mut heap = alloc::collections::BinaryHeap::new();
        let push = |heap: &mut alloc::collections::BinaryHeap<Block>, top: &mut TopK, start: [usize; MAX_DIM], size: usize| {
            let mut end = [0usize; MAX_DIM];
            let mut rep = [0usize; MAX_DIM];
            for k in 0..MAX_DIM {
                end[k] = if k < dim { (start[k] + size).min(count[k]) } else { 1 };
                if start[k] >= end[k] {
                    return;
                }
                rep[k] = if k < dim { (start[k] + size / 2).min(end[k] - 1) } else { 0 };
            }
            let c = cell(&rep);
            let p = self.g.center(c);
            if size == 1 {
                if keep(self.g.index(c[0], c[1], c[2])) {
                    top.offer(f(&p), p);
                }
                return;
            }
            let reach = (size as f64 / 2.0) * spacing * math::sqrt(dim as f64);
            heap.push(Block { lb: f(&p) - lip * reach - slack, start, size });
        };
        let mut size = 1usize;
        while (0..dim).any(|k| size < count[k]) {
            size *= 2;
        }
        push(&mut heap, top, [0; MAX_DIM], size);
        while let Some(b) = heap.pop() {
            if b.lb > top.threshold() {
                break;
            }
            let half = b.size / 2;
            for o in 0..(1usize << dim) {
                let mut s = b.start;
                for k in 0..dim {
                    if o >> k & 1 == 1 {
                        s[k] += half;
                    }
                }
                push(&mut heap, top, s, half);
            }
        }
    }

    fn stride_h(&self) -> f64 {
        let cap = match self.dim {
            1 => usize::MAX,
            2 => 2048,
            _ => 64,
        };
        let s = (0..self.dim)
            .map(|k| (self.hi[k] - self.lo[k] + 1).div_ceil(cap).max(1))
            .max()
            .unwrap_or(1);
        s as f64 * self.h
    }

    /// Compass search minimising `f` from `start`, halving the step until it
    /// drops below `min_step`. Moves only on strict improvement; among equal
    /// neighbours the lexicographically smallest wins.
    fn refine(&self, f: &impl Fn(&Point) -> f64, start: Point, step: f64, min_step: f64) -> (f64, Point) {
        let dim = self.dim;
        let mut cur = self.clamp_to_support(&start);
        let mut val = f(&cur);
        let mut step = step;
        let n_off = 3usize.pow(dim as u32);
        while step >= min_step * (1.0 - 1e-9) {
            for _ in 0..10_000 {
                let mut best: Option<(f64, Point)> = None;
                for o in 0..n_off {
                    let mut p = cur;
                    let mut rest = o;
                    let mut zero = true;
                    for k in 0..dim {
                        let d = (rest % 3) as f64 - 1.0;
                        rest /= 3;
                        zero &= d == 0.0;
                        p.0[k] += d * step;
                    }
                    if zero {
                        continue;
                    }
                    let p = self.clamp_to_support(&p);
                    let v = f(&p);
                    let better = match &best {
                        None => true,
                        Some((bv, bp)) => v < *bv || (v == *bv && lex(&p, bp, dim) == Ordering::Less),
                    };
                    if better {
                        best = Some((v, p));
                    }
                }
                match best {
                    Some((v, p)) if v < val => {
                        val = v;
                        cur = p;
                    }
                    _ => break,
                }
            }
            step /= 2.0;
        }
        (val, cur)
    }

    fn seeds(&self) -> Vec<Point> {
        let mut s = Vec::new();
        if let Some(c) = self.r.center_of_mass() {
            s.push(c);
        }
        if let Ok(b) = enclosing_ball(self.r) {
            s.push(b.center);
        }
        s
    }

    fn finish(&self, top: TopK, f: &impl Fn(&Point) -> f64, step: f64, min_step: f64) -> IndexValue {
        let mut best: Option<(f64, Point)> = None;
        for (_, c) in top.items.iter() {
            let (v, p) = self.refine(f, *c, step, min_step);
            let better = match &best {
                None => true,
                Some((bv, bp)) => v < *bv || (v == *bv && lex(&p, bp, self.dim) == Ordering::Less),
            };
            if better {
                best = Some((v, p));
            }
        }
        let (v, p) = best.expect("at least one candidate");
        IndexValue { value: v.max(0.0), center: p }
    }

    fn delta1(&self, opts: &IndexOptions) -> IndexValue {
        // Balls farther than R_E from every cell of positive coverage miss E.
        let support: Vec<bool> = self.r.coverage().iter().map(|&c| c > 0.0).collect();
        let d2 = squared_distance_transform(self.g.n, &support);
        let reach = self.radius / self.h + 1.0;
        let reach2 = reach * reach;
        let f = |x: &Point| self.delta1_at(x);
        let mut top = TopK::new(opts.top_k, self.dim);
        self.branch_and_bound(&mut top, &f, |idx| d2[idx] <= reach2);
        for s in self.seeds() {
            let s = self.clamp_to_support(&s);
            top.items.push((f(&s), s));
        }
        let stride = self.stride_h();
        self.finish(top, &f, stride / 2.0, self.h / opts.refine_divisor)
    }

    fn delta_h(&self, opts: &IndexOptions, rho: f64) -> IndexValue {
        let denom = rho + self.radius;
        let t2 = T2::new(self);
        let f = |x: &Point| self.t1(x).max(t2.eval(self, x)) / denom;
        let mut cands: Vec<(f64, Point)> =
            self.coarse_candidates(|_| true).into_iter().map(|c| (self.t1(&c), c)).collect();
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| lex(&a.1, &b.1, self.dim)));
        let mut top = TopK::new(opts.top_k, self.dim);
        for (t1, c) in cands {
            if t1 / denom > top.threshold() {
                break;
            }
            top.offer(t1.max(t2.eval(self, &c)) / denom, c);
        }
        for s in self.seeds() {
            let s = self.clamp_to_support(&s);
            top.items.push((f(&s), s));
        }
        let stride = self.stride_h();
        self.finish(top, &f, stride / 2.0, self.h / opts.refine_divisor)
    }
}

/// `sup_{q ∈ B_R(x)} dist(q, E)` on the raster.
enum T2 {
    /// Occupied runs `[a, b]` (cell edges), sorted.
    Runs(Vec<(f64, f64)>),
    Grid { window: Grid, d2: Vec<f64>, block_max: Vec<f64> },
}

const BLOCK: usize = 16;

impl T2 {
    fn new(p: &Prepared) -> T2 {
        let g = &p.g;
        if p.dim == 1 {
            let mut runs: Vec<(f64, f64)> = Vec::new();
            let mut i = 0;
            while i < g.n[0] {
                if p.r.occupied(i) {
                    let a = i;
                    while i < g.n[0] && p.r.occupied(i) {
                        i += 1;
                    }
                    let lo = (g.offset[0] + a as i64) as f64 * g.h;
                    let hi = (g.offset[0] + i as i64) as f64 * g.h;
                    runs.push((lo, hi));
                } else {
                    i += 1;
                }
            }
            return T2::Runs(runs);
        }
        let pad = math::ceil(p.radius / g.h) as usize + 4;
        let window = g.padded(pad).unwrap_or(*g);
        let occ = p.r.embed(&window).map(|e| e.occupancy()).unwrap_or_else(|_| p.r.occupancy());
        let d2 = squared_distance_transform(window.n, &occ);
        let n0 = window.n[0];
        let nb = n0.div_ceil(BLOCK);
        let rows = window.n[1] * window.n[2];
        let mut block_max = vec![0.0; rows * nb];
        for row in 0..rows {
            for b in 0..nb {
                let s = row * n0 + b * BLOCK;
                let e = (row * n0 + ((b + 1) * BLOCK).min(n0)).max(s);
                block_max[row * nb + b] = d2[s..e].iter().copied().fold(0.0, f64::max);
            }
        }
        T2::Grid { window, d2, block_max }
    }

    fn eval(&self, p: &Prepared, x: &Point) -> f64 {
        match self {
            T2::Runs(runs) => {
                let dist = |q: f64| -> f64 {
                    let idx = runs.partition_point(|r| r.1 < q);
                    let mut d = f64::INFINITY;
                    if idx < runs.len() {
                        d = d.min((runs[idx].0 - q).max(0.0));
                    }
                    if idx > 0 {
                        d = d.min(q - runs[idx - 1].1);
                    }
                    d
                };
                let (a, b) = (x.0[0] - p.radius, x.0[0] + p.radius);
                let mut m = dist(a).max(dist(b));
                for w in runs.windows(2) {
                    let mid = 0.5 * (w[0].1 + w[1].0);
                    if mid > a && mid < b {
                        m = m.max(0.5 * (w[1].0 - w[0].1));
                    }
                }
                m
            }
            T2::Grid { window, d2, block_max } => {
                let g = window;
                let r2 = p.radius * p.radius;
                let n0 = g.n[0];
                let nb = n0.div_ceil(BLOCK);
                let Some((j0, j1)) = p.span(1, x.0[1], p.radius, g.n[1], g.offset[1]) else { return 0.0 };
                let (k0, k1) = if p.dim >= 3 {
                    match p.span(2, x.0[2], p.radius, g.n[2], g.offset[2]) {
                        Some(s) => s,
                        None => return 0.0,
                    }
                } else {
                    (0, 0)
                };
                let mut m = -1.0f64;
                for k in k0..=k1 {
                    let dz = if p.dim >= 3 { g.coord(2, k) - x.0[2] } else { 0.0 };
                    for j in j0..=j1 {
                        let dy = g.coord(1, j) - x.0[1];
                        let w2 = r2 - dy * dy - dz * dz;
                        if w2 < 0.0 {
                            continue;
                        }
                        let Some((i0, i1)) = p.span(0, x.0[0], math::sqrt(w2), n0, g.offset[0]) else { continue };
                        let row = j + g.n[1] * k;
                        let base = row * n0;
                        let (b0, b1) = (i0 / BLOCK, i1 / BLOCK);
                        if b0 == b1 {
                            for i in i0..=i1 {
                                m = m.max(d2[base + i]);
                            }
                        } else {
                            for i in i0..(b0 + 1) * BLOCK {
                                m = m.max(d2[base + i]);
                            }
                            for b in (b0 + 1)..b1 {
                                m = m.max(block_max[row * nb + b]);
                            }
                            for i in b1 * BLOCK..=i1 {
                                m = m.max(d2[base + i]);
                            }
                        }
                    }
                }
                if m < 0.0 {
                    return 0.0;
                }
                (math::sqrt(m) * g.h - 0.5 * g.h).max(0.0)
            }
        }
    }
}

/// `δ₁ = 1 − max_x λ(E ∩ B_{R_E}(x)) / λ(E)`, by coarse search over cell
/// centres followed by pattern search down to `h / 16`.
pub fn delta1(r: &RasterSet, opts: &IndexOptions) -> Result<IndexValue, GeomError> {
    Ok(Prepared::new(r)?.delta1(opts))
}

/// `δ_H = min_x d_H(E, B_{R_E}(x)) / (ρ_E + R_E)`, same search strategy.
pub fn delta_h(r: &RasterSet, opts: &IndexOptions) -> Result<IndexValue, GeomError> {
    let p = Prepared::new(r)?;
    let rho = enclosing_ball(r)?.radius;
    Ok(p.delta_h(opts, rho))
}

/// Full report for a raster.
pub fn indices_raster(r: &RasterSet, opts: &IndexOptions) -> Result<IndexReport, GeomError> {
    let p = Prepared::new(r)?;
    let ball = enclosing_ball(r)?;
    let d1 = p.delta1(opts);
    let dh = p.delta_h(opts, ball.radius);
    let rho = ball.radius;
    let re = p.radius;
    Ok(IndexReport {
        dim: r.dim(),
        h: r.h(),
        measure: p.lambda,
        r_e: re,
        rho,
        x_e: ball.center,
        diameter: essential_diameter(r)?,
        delta1: d1.value,
        delta1_center: d1.center,
        delta_h: dh.value,
        delta_h_center: dh.center,
        delta_h_lower_bound: ((rho - re) / (rho + re)).max(0.0),
        tolerance: index_tolerance(r.h(), re),
    })
}

/// Rasterizes at the requested (or default) resolution and reports both
/// indices.
pub fn indices(expr: &SetExpr, opts: &IndexOptions) -> Result<IndexReport, GeomError> {
    let h = match opts.h {
        Some(h) => h,
        None => default_h(expr, opts.max_cells)?,
    };
    let s = opts.supersampling.unwrap_or_else(|| default_supersampling(expr.dim()));
    indices_raster(&rasterize(expr, h, s)?, opts)
}
