//! Finite-difference integration of `u_t = Δu + f(u)` on a box with
//! homogeneous Neumann walls, and classification of runs.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::vec;

use thiserror::Error;

use crate::geom::{rasterize_on, GeomError, Grid, RasterSet, SetExpr};
use crate::math;
use crate::point::{Point, MAX_DIM};
use crate::reaction::{BistableReaction, ReactionError};

/// Slack allowed on `[0, 1]` before a step is declared broken.
pub const RANGE_SLACK: f64 = 1e-12;

/// Slack allowed by the discrete comparison check.
pub const ORDER_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Reaction(#[from] ReactionError),
    #[error("value {value} left [0, 1] at t = {t} (cell {cell})")]
    RangeViolation { t: f64, cell: usize, value: f64 },
    #[error("domain too small: level set reached the wall margin at t = {t}")]
    DomainTooSmall { t: f64 },
    #[error("initial set reaches within {margin} of the domain wall")]
    SetNearBoundary { margin: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("comparison violated at t = {t}: excess {excess}")]
    OrderingViolation { t: f64, excess: f64 },
    #[error("need at least {needed} points, have {have}")]
    TooFewPoints { needed: usize, have: usize },
}

/// Time discretization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Scheme {
    /// Forward Euler on diffusion and reaction.
    Explicit,
    /// Explicit reaction, then backward-Euler diffusion one axis at a time.
    #[default]
    SemiImplicit,
    /// Explicit reaction, then Crank–Nicolson diffusion one axis at a time.
    /// Not monotone for `dt > h²`; the range check aborts if it overshoots.
    CrankNicolson,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct CertificateParams {
    /// Extinction once `sup u ≤ θ (1 − margin)`.
    pub extinction_margin: f64,
    /// Radius of the core around the initial center of mass.
    pub core_radius: f64,
    /// Level the core minimum must reach for invasion.
    pub invasion_level: f64,
    /// Number of consecutive front-radius increases required.
    pub growth_window: usize,
    /// Level tracked by the front radius.
    pub front_level: f64,
    /// Distance to the walls at which the run aborts; default two
    /// diffusion lengths.
    pub boundary_margin: Option<f64>,
}

impl Default for CertificateParams {
    fn default() -> Self {
        CertificateParams {
            extinction_margin: 0.05,
            core_radius: 1.0,
            invasion_level: 0.95,
            growth_window: 20,
            front_level: 0.5,
            boundary_margin: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SolverConfig {
    pub scheme: Scheme,
    pub h: f64,
    /// Time step; the scheme's default when absent.
    pub dt: Option<f64>,
    /// Padding between the initial set's bounding box and the walls;
    /// `c T_max + 10 ℓ + boundary margin` when absent.
    pub domain_margin: Option<f64>,
    pub t_max: f64,
    /// Spacing of the diagnostic samples used by the certificates.
    pub diagnostic_interval: f64,
    /// Times at which fields are handed to the observer.
    pub snapshot_times: Vec<f64>,
    /// Subsamples per cell edge for the initial indicator.
    pub supersampling: Option<usize>,
    pub certificate: CertificateParams,
    /// Skip the simulation when the set's measure is below ε.
    pub small_mass_shortcut: bool,
    /// Stop as soon as a certificate fires.
    pub stop_on_verdict: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            scheme: Scheme::SemiImplicit,
            h: 0.02,
            dt: None,
            domain_margin: None,
            t_max: 120.0,
            diagnostic_interval: 1.0,
            snapshot_times: Vec::new(),
            supersampling: None,
            certificate: CertificateParams::default(),
            small_mass_shortcut: true,
            stop_on_verdict: true,
        }
    }
}

fn config_err(msg: &str) -> SolverError {
    SolverError::Config(String::from(msg))
}

impl SolverConfig {
    /// Largest time step that keeps the scheme monotone for a source with
    /// derivative bound `m_prime`.
    pub fn max_dt(&self, dim: usize, m_prime: f64) -> f64 {
        let n = dim as f64;
        let h2 = self.h * self.h;
        let reaction = if m_prime > 0.0 { 1.0 / m_prime } else { f64::INFINITY };
        match self.scheme {
            Scheme::Explicit => (h2 / (2.0 * n)).min(1.0 / (2.0 * n / h2 + m_prime)),
            Scheme::SemiImplicit | Scheme::CrankNicolson => reaction,
        }
    }

    pub fn default_dt(&self, dim: usize, m_prime: f64) -> f64 {
        let n = dim as f64;
        match self.scheme {
            Scheme::Explicit => {
                let h2 = self.h * self.h;
                let spec = 0.9 * (h2 / (2.0 * n)).min(if m_prime > 0.0 { 1.0 / (2.0 * m_prime) } else { f64::INFINITY });
                spec.min(0.9 / (2.0 * n / h2 + m_prime))
            }
            Scheme::SemiImplicit | Scheme::CrankNicolson => self.h.min(self.max_dt(dim, m_prime)),
        }
    }

    pub fn dt(&self, dim: usize, m_prime: f64) -> f64 {
        self.dt.unwrap_or_else(|| self.default_dt(dim, m_prime))
    }

    pub fn validate(&self, dim: usize, m_prime: f64) -> Result<(), SolverError> {
        if !(1..=2).contains(&dim) {
            return Err(config_err("the solver supports dimensions 1 and 2"));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(config_err("h must be positive"));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(config_err("t_max must be positive"));
        }
        if !(self.diagnostic_interval.is_finite() && self.diagnostic_interval > 0.0) {
            return Err(config_err("diagnostic_interval must be positive"));
        }
        let dt = self.dt(dim, m_prime);
        if !(dt.is_finite() && dt > 0.0) {
            return Err(config_err("dt must be positive"));
        }
        if dt > self.max_dt(dim, m_prime) * (1.0 + 1e-12) {
            return Err(SolverError::Config(alloc::format!(
                "dt = {dt} exceeds the monotonicity bound {} for this scheme",
                self.max_dt(dim, m_prime)
            )));
        }
        if self.snapshot_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(config_err("snapshot times must be nonnegative"));
        }
        if self.snapshot_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("snapshot times must be strictly increasing"));
        }
        let c = &self.certificate;
        if !(c.extinction_margin >= 0.0 && c.extinction_margin < 1.0) {
            return Err(config_err("extinction_margin must lie in [0, 1)"));
        }
        if !(c.invasion_level > 0.0 && c.invasion_level < 1.0) || !(c.front_level > 0.0 && c.front_level < 1.0) {
            return Err(config_err("levels must lie in (0, 1)"));
        }
        if !(c.core_radius >= 0.0) || c.growth_window == 0 {
            return Err(config_err("core_radius must be nonnegative and growth_window positive"));
        }
        if let Some(m) = self.domain_margin {
            if !(m.is_finite() && m > 0.0) {
                return Err(config_err("domain_margin must be positive"));
            }
        }
        if let Some(s) = self.supersampling {
            if s == 0 {
                return Err(config_err("supersampling must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn boundary_margin(&self, reaction: &BistableReaction) -> f64 {
        self.certificate.boundary_margin.unwrap_or(2.0 * reaction.diffusion_length()).max(2.0 * self.h)
    }

    pub fn domain_margin(&self, reaction: &BistableReaction) -> f64 {
        self.domain_margin.unwrap_or_else(|| {
            let c = reaction.front_speed().unwrap_or(0.0).max(0.0);
            c * self.t_max + 10.0 * reaction.diffusion_length() + self.boundary_margin(reaction)
        })
    }
}

/// The reaction term seen by the stepper.
pub trait Source {
    fn rate(&self, u: f64) -> f64;
    /// Bound on `|rate'|` over `[0, 1]`.
    fn m_prime(&self) -> f64;
}

impl Source for BistableReaction {
    #[inline]
    fn rate(&self, u: f64) -> f64 {
        BistableReaction::rate(self, u)
    }
    fn m_prime(&self) -> f64 {
        BistableReaction::m_prime(self)
    }
}

/// `f ≡ 0`: the heat equation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoReaction;

impl Source for NoReaction {
    #[inline]
    fn rate(&self, _: f64) -> f64 {
        0.0
    }
    fn m_prime(&self) -> f64 {
        0.0
    }
}

/// `u` on a grid at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub t: f64,
}

impl Field {
    pub fn new(grid: Grid, u: Vec<f64>, t: f64) -> Result<Self, SolverError> {
        if u.len() != grid.len() {
            return Err(SolverError::GridMismatch);
        }
        if grid.dim > 2 {
            return Err(config_err("the solver supports dimensions 1 and 2"));
        }
        Ok(Field { grid, u, t })
    }

    pub fn from_raster(raster: &RasterSet, amplitude: f64) -> Result<Self, SolverError> {
        if !(amplitude > 0.0 && amplitude <= 1.0) {
            return Err(config_err("amplitude must lie in (0, 1]"));
        }
        Field::new(*raster.grid(), raster.scaled_coverage(amplitude), 0.0)
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn sup(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.u.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Σ u hᴺ`, compensated.
    pub fn mass(&self) -> f64 {
        math::compensated_sum(&self.u) * self.grid.cell_measure()
    }

    pub fn center_of_mass(&self) -> Option<Point> {
        let mut w = math::CompensatedSum::new();
        let mut m = [math::CompensatedSum::new(), math::CompensatedSum::new(), math::CompensatedSum::new()];
        for (idx, &v) in self.u.iter().enumerate() {
            if v != 0.0 {
                let c = self.grid.center(self.grid.unindex(idx));
                w.add(v);
                for k in 0..self.grid.dim {
                    m[k].add(v * c.0[k]);
                }
            }
        }
        let w = w.value();
        if w <= 0.0 {
            return None;
        }
        let mut p = Point::ORIGIN;
        for k in 0..self.grid.dim {
            p.0[k] = m[k].value() / w;
        }
        Some(p)
    }

    /// Value at the cell containing `p`, if any.
    pub fn at(&self, p: &Point) -> Option<f64> {
        let mut c = [0usize; MAX_DIM];
        for k in 0..self.grid.dim {
            let i = math::floor(p.0[k] / self.grid.h) as i64 - self.grid.offset[k];
            if i < 0 || i as usize >= self.grid.n[k] {
                return None;
            }
            c[k] = i as usize;
        }
        Some(self.u[self.grid.index(c[0], c[1], c[2])])
    }
}

/// Padded simulation grid around `bbox`.
pub fn domain_grid(set: &SetExpr, reaction: &BistableReaction, cfg: &SolverConfig) -> Result<Grid, SolverError> {
    cfg.validate(set.dim(), reaction.m_prime())?;
    let margin = cfg.domain_margin(reaction);
    let boundary = cfg.boundary_margin(reaction);
    if margin < boundary {
        return Err(SolverError::SetNearBoundary { margin: boundary });
    }
    let pad = math::ceil(margin / cfg.h) as usize + 1;
    Ok(Grid::covering(set.dim(), cfg.h, &set.bbox(), pad)?)
}

/// `u0 = amplitude · 𝟙_set` on the padded simulation grid.
pub fn init_field(set: &SetExpr, amplitude: f64, reaction: &BistableReaction, cfg: &SolverConfig) -> Result<Field, SolverError> {
    let grid = domain_grid(set, reaction, cfg)?;
    init_field_on(set, amplitude, &grid, cfg)
}

/// `u0 = amplitude · 𝟙_set` on a given grid.
pub fn init_field_on(set: &SetExpr, amplitude: f64, grid: &Grid, cfg: &SolverConfig) -> Result<Field, SolverError> {
    let s = cfg.supersampling.unwrap_or(if set.dim() == 1 { 64 } else { 8 });
    let raster = rasterize_on(set, grid, s)?;
    Field::from_raster(&raster, amplitude)
}

/// Cell-centered grid with `n` cells per axis covering `[lo, hi]ᴺ`.
pub fn box_grid(dim: usize, lo: f64, hi: f64, n: usize) -> Result<Grid, SolverError> {
    let h = (hi - lo) / n as f64;
    let off = math::round(lo / h);
    if (off * h - lo).abs() > 1e-9 * h.max(lo.abs()) {
        return Err(config_err("box corner must be a lattice multiple of h"));
    }
    let mut offset = [0i64; MAX_DIM];
    let mut cells = [1usize; MAX_DIM];
    for k in 0..dim {
        offset[k] = off as i64;
        cells[k] = n;
    }
    Ok(Grid::new(dim, h, offset, cells)?)
}

/// Precomputed Thomas factors for `I − r L` with `L` the Neumann second
/// difference on `n` cells.
#[derive(Clone, Debug)]
struct Tridiag {
    r: f64,
    cp: Vec<f64>,
    inv: Vec<f64>,
}

impl Tridiag {
    fn new(n: usize, r: f64) -> Tridiag {
        let mut cp = vec![0.0; n];
        let mut inv = vec![0.0; n];
        let diag = |i: usize| {
            if n == 1 {
                1.0
            } else if i == 0 || i == n - 1 {
                1.0 + r
            } else {
                1.0 + 2.0 * r
            }
        };
        let mut prev = 0.0;
        for i in 0..n {
            let denom = diag(i) + r * prev;
            inv[i] = 1.0 / denom;
            cp[i] = -r * inv[i];
            prev = cp[i];
        }
        Tridiag { r, cp, inv }
    }

    /// Solves in place along a contiguous line.
    fn solve(&self, x: &mut [f64]) {
        let n = x.len();
        x[0] *= self.inv[0];
        for i in 1..n {
            x[i] = (x[i] + self.r * x[i - 1]) * self.inv[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.cp[i] * x[i + 1];
        }
    }

    /// Solves along axis 1 of a row-major `nx × ny` block, all columns at once.
    fn solve_columns(&self, x: &mut [f64], nx: usize) {
        let ny = x.len() / nx;
        let (r, inv, cp) = (self.r, &self.inv, &self.cp);
        for v in &mut x[..nx] {
            *v *= inv[0];
        }
        for j in 1..ny {
            let (done, rest) = x.split_at_mut(j * nx);
            let prev = &done[(j - 1) * nx..];
            for (v, p) in rest[..nx].iter_mut().zip(prev) {
                *v = (*v + r * p) * inv[j];
            }
        }
        for j in (0..ny - 1).rev() {
            let (head, tail) = x.split_at_mut((j + 1) * nx);
            let cur = &mut head[j * nx..];
            for (v, nxt) in cur.iter_mut().zip(&tail[..nx]) {
                *v -= cp[j] * nxt;
            }
        }
    }
}

/// Adds `w · L u` along `axis` into `out`, with `L` the unscaled Neumann
/// second difference.
fn add_second_difference(grid: &Grid, u: &[f64], w: f64, axis: usize, out: &mut [f64]) {
    let nx = grid.n[0];
    let n = grid.n[axis];
    if n == 1 {
        return;
    }
    let stride = if axis == 0 { 1 } else { nx };
    let lines = u.len() / n;
    for line in 0..lines {
        let base = if axis == 0 { line * nx } else { line };
        for i in 0..n {
            let idx = base + i * stride;
            let left = if i == 0 { u[idx] } else { u[idx - stride] };
            let right = if i == n - 1 { u[idx] } else { u[idx + stride] };
            out[idx] += w * (left - 2.0 * u[idx] + right);
        }
    }
}

pub type Forcing<'a> = &'a dyn Fn(f64, &Point) -> f64;

/// Advances a field by one step of a fixed scheme.
pub struct Stepper<'a> {
    grid: Grid,
    scheme: Scheme,
    dt: f64,
    source: &'a dyn Source,
    forcing: Option<Forcing<'a>>,
    main: Vec<Tridiag>,
    partial: Option<(f64, Vec<Tridiag>)>,
    scratch: Vec<f64>,
    centers: Vec<Point>,
}

impl<'a> Stepper<'a> {
    pub fn new(grid: Grid, scheme: Scheme, dt: f64, source: &'a dyn Source) -> Result<Self, SolverError> {
        if !(1..=2).contains(&grid.dim) {
            return Err(config_err("the solver supports dimensions 1 and 2"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(config_err("dt must be positive"));
        }
        let main = Self::factors(&grid, scheme, dt);
        Ok(Stepper { grid, scheme, dt, source, forcing: None, main, partial: None, scratch: vec![0.0; grid.len()], centers: Vec::new() })
    }

    pub fn from_config(grid: Grid, cfg: &SolverConfig, source: &'a dyn Source) -> Result<Self, SolverError> {
        cfg.validate(grid.dim, source.m_prime())?;
        Self::new(grid, cfg.scheme, cfg.dt(grid.dim, source.m_prime()), source)
    }

    /// Adds a space-time forcing `g(t, x)` to the right-hand side.
    pub fn with_forcing(mut self, g: Forcing<'a>) -> Self {
        self.centers = (0..self.grid.len()).map(|i| self.grid.center(self.grid.unindex(i))).collect();
        self.forcing = Some(g);
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn factors(grid: &Grid, scheme: Scheme, dt: f64) -> Vec<Tridiag> {
        let h2 = grid.h * grid.h;
        let r = match scheme {
            Scheme::Explicit => return Vec::new(),
            Scheme::SemiImplicit => dt / h2,
            Scheme::CrankNicolson => dt / (2.0 * h2),
        };
        (0..grid.dim).map(|k| Tridiag::new(grid.n[k], r)).collect()
    }

    /// One step of the configured size.
    pub fn step(&mut self, field: &mut Field) -> Result<(), SolverError> {
        self.step_by(field, self.dt)
    }

    /// One step of size `dt ≤` the configured step.
    pub fn step_by(&mut self, field: &mut Field, dt: f64) -> Result<(), SolverError> {
        if field.grid != self.grid {
            return Err(SolverError::GridMismatch);
        }
        if !(dt > 0.0 && dt <= self.dt * (1.0 + 1e-9)) {
            return Err(config_err("step size must lie in (0, dt]"));
        }
        let t = field.t;
        let u = &mut field.u;
        match self.scheme {
            Scheme::Explicit => {
                let w = dt / (self.grid.h * self.grid.h);
                let out = &mut self.scratch;
                for (o, &v) in out.iter_mut().zip(u.iter()) {
                    *o = v + dt * self.source.rate(v);
                }
                if let Some(g) = self.forcing {
                    for (o, c) in out.iter_mut().zip(&self.centers) {
                        *o += dt * g(t, c);
                    }
                }
                for axis in 0..self.grid.dim {
                    add_second_difference(&self.grid, u, w, axis, out);
                }
                core::mem::swap(u, out);
            }
            Scheme::SemiImplicit | Scheme::CrankNicolson => {
                for v in u.iter_mut() {
                    *v += dt * self.source.rate(*v);
                }
                if let Some(g) = self.forcing {
                    for (v, c) in u.iter_mut().zip(&self.centers) {
                        *v += dt * g(t, c);
                    }
                }
                let exact = (dt - self.dt).abs() <= 1e-9 * self.dt;
                if !exact && self.partial.as_ref().map_or(true, |(d, _)| *d != dt) {
                    self.partial = Some((dt, Self::factors(&self.grid, self.scheme, dt)));
                }
                let facs = if exact { &self.main } else { &self.partial.as_ref().expect("partial factors").1 };
                let nx = self.grid.n[0];
                for axis in 0..self.grid.dim {
                    let fac = &facs[axis];
                    if self.scheme == Scheme::CrankNicolson {
                        self.scratch.copy_from_slice(u);
                        add_second_difference(&self.grid, &self.scratch, fac.r, axis, u);
                    }
                    if self.grid.n[axis] == 1 {
                        continue;
                    }
                    if axis == 0 {
                        for line in u.chunks_mut(nx) {
                            fac.solve(line);
                        }
                    } else {
                        fac.solve_columns(u, nx);
                    }
                }
            }
        }
        field.t = t + dt;
        check_range(field)
    }
}

fn check_range(field: &Field) -> Result<(), SolverError> {
    for (cell, &value) in field.u.iter().enumerate() {
        if !(value >= -RANGE_SLACK && value <= 1.0 + RANGE_SLACK) {
            return Err(SolverError::RangeViolation { t: field.t, cell, value });
        }
    }
    Ok(())
}

/// Largest distance from `center` at which `u` crosses `level` along the
/// grid lines through `center`, linearly interpolated between cells.
/// Zero when `sup u < level`.
pub fn front_radius(field: &Field, level: f64, center: &Point) -> f64 {
    let g = &field.grid;
    let mut c = [0usize; MAX_DIM];
    for k in 0..g.dim {
        let i = math::floor(center.0[k] / g.h) as i64 - g.offset[k];
        c[k] = i.clamp(0, g.n[k] as i64 - 1) as usize;
    }
    let mut best: f64 = 0.0;
    for axis in 0..g.dim {
        let n = g.n[axis];
        let at = |i: usize| {
            let mut p = c;
            p[axis] = i;
            field.u[g.index(p[0], p[1], p[2])]
        };
        let x = |i: usize| g.coord(axis, i);
        let cx = center.0[axis];
        for i in 0..n {
            let ui = at(i);
            if ui < level {
                continue;
            }
            if i == 0 || i == n - 1 {
                best = best.max((x(i) - cx).abs());
            }
            for j in [i.wrapping_sub(1), i + 1] {
                if j < n {
                    let uj = at(j);
                    if uj < level {
                        let s = (ui - level) / (ui - uj);
                        let xc = x(i) + s * (x(j) - x(i));
                        best = best.max((xc - cx).abs());
                    }
                }
            }
        }
    }
    best
}

/// Least-squares slope of `r` against `t` after dropping the first
/// `discard` fraction of the samples.
pub fn front_speed(history: &[(f64, f64)], discard: f64) -> Result<f64, SolverError> {
    let skip = math::floor(history.len() as f64 * discard.clamp(0.0, 1.0)) as usize;
    let pts = &history[skip.min(history.len())..];
    if pts.len() < 3 {
        return Err(SolverError::TooFewPoints { needed: 3, have: pts.len() });
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let rm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - rm)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm) * (p.0 - tm)).sum();
    if sxx <= 0.0 {
        return Err(SolverError::TooFewPoints { needed: 3, have: 1 });
    }
    Ok(sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    Extinction,
    Invasion,
    Undecided,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Certificate {
    /// `λ(E) ≤ ε`, decided without simulating.
    SmallMass { measure: f64, epsilon: f64 },
    /// `sup u ≤ bound < θ`.
    SupBelowThreshold { sup: f64, bound: f64 },
    /// Core saturated and front growing.
    CoreAndGrowth { core_min: f64, growth: usize },
    None,
}

/// Diagnostics of the certificate that came closest, for undecided runs.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Closest {
    pub min_sup: f64,
    pub max_core_min: f64,
    pub longest_growth: usize,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Outcome {
    pub verdict: Verdict,
    pub certificate: Certificate,
    pub certificate_time: Option<f64>,
    pub final_time: f64,
    pub steps: u64,
    pub center: Point,
    pub sup_history: Vec<(f64, f64)>,
    pub front_history: Vec<(f64, f64)>,
    pub closest: Closest,
}

struct Tracker {
    theta_bound: f64,
    level: f64,
    invasion_level: f64,
    window: usize,
    core: Vec<usize>,
    wall: Vec<usize>,
    center: Point,
    outcome: Outcome,
    growth: usize,
}

impl Tracker {
    fn new(field: &Field, reaction: &BistableReaction, cfg: &SolverConfig) -> Result<Tracker, SolverError> {
        let g = field.grid;
        let center = field.center_of_mass().ok_or_else(|| config_err("initial field is identically zero"))?;
        let cp = &cfg.certificate;
        let boundary = cfg.boundary_margin(reaction);
        let mut core = Vec::new();
        let mut wall = Vec::new();
        let mut nearest = (f64::INFINITY, 0usize);
        let lo = g.bbox();
        for idx in 0..g.len() {
            let c = g.center(g.unindex(idx));
            let d = c.dist(&center);
            if d <= cp.core_radius {
                core.push(idx);
            }
            if d < nearest.0 {
                nearest = (d, idx);
            }
            if (0..g.dim).any(|k| c.0[k] - lo.min.0[k] < boundary || lo.max.0[k] - c.0[k] < boundary) {
                wall.push(idx);
            }
        }
        if core.is_empty() {
            core.push(nearest.1);
        }
        if wall.iter().any(|&i| field.u[i] > 0.0) {
            return Err(SolverError::SetNearBoundary { margin: boundary });
        }
        let sup = field.sup();
        Ok(Tracker {
            theta_bound: reaction.theta() * (1.0 - cp.extinction_margin),
            level: cp.front_level,
            invasion_level: cp.invasion_level,
            window: cp.growth_window,
            core,
            wall,
            center,
            growth: 0,
            outcome: Outcome {
                verdict: Verdict::Undecided,
                certificate: Certificate::None,
                certificate_time: None,
                final_time: field.t,
                steps: 0,
                center,
                sup_history: vec![(field.t, sup)],
                front_history: vec![(field.t, front_radius(field, cp.front_level, &center))],
                closest: Closest { min_sup: sup, max_core_min: 0.0, longest_growth: 0 },
            },
        })
    }

    fn decided(&self) -> bool {
        self.outcome.verdict != Verdict::Undecided
    }

    fn after_step(&mut self, field: &Field) {
        let sup = field.sup();
        self.outcome.closest.min_sup = self.outcome.closest.min_sup.min(sup);
        if !self.decided() && sup <= self.theta_bound {
            self.outcome.verdict = Verdict::Extinction;
            self.outcome.certificate = Certificate::SupBelowThreshold { sup, bound: self.theta_bound };
            self.outcome.certificate_time = Some(field.t);
            self.outcome.sup_history.push((field.t, sup));
        }
    }

    fn diagnostic(&mut self, field: &Field) -> Result<(), SolverError> {
        let sup = field.sup();
        self.outcome.sup_history.push((field.t, sup));
        let r = front_radius(field, self.level, &self.center);
        let last = self.outcome.front_history.last().map_or(f64::NEG_INFINITY, |p| p.1);
        self.outcome.front_history.push((field.t, r));
        self.growth = if r > last && r > 0.0 { self.growth + 1 } else { 0 };
        let core_min = self.core.iter().map(|&i| field.u[i]).fold(f64::INFINITY, f64::min);
        let cl = &mut self.outcome.closest;
        cl.max_core_min = cl.max_core_min.max(core_min);
        cl.longest_growth = cl.longest_growth.max(self.growth);
        if self.wall.iter().any(|&i| field.u[i] >= self.level) {
            return Err(SolverError::DomainTooSmall { t: field.t });
        }
        if !self.decided() && core_min >= self.invasion_level && self.growth >= self.window {
            self.outcome.verdict = Verdict::Invasion;
            self.outcome.certificate = Certificate::CoreAndGrowth { core_min, growth: self.growth };
            self.outcome.certificate_time = Some(field.t);
        }
        Ok(())
    }
}

/// Integrates from `field` to `t_max`, calling `observer` at every
/// configured snapshot time, and classifies the run.
pub fn run(
    mut field: Field,
    reaction: &BistableReaction,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(&Field),
) -> Result<(Outcome, Field), SolverError> {
    let dim = field.dim();
    cfg.validate(dim, reaction.m_prime())?;
    if (field.grid.h - cfg.h).abs() > 1e-12 * cfg.h {
        return Err(SolverError::GridMismatch);
    }
    check_range(&field)?;
    let mut tracker = Tracker::new(&field, reaction, cfg)?;
    let mut stepper = Stepper::from_config(field.grid, cfg, reaction)?;
    let dt = stepper.dt();
    let t0 = field.t;
    let mut snaps = cfg.snapshot_times.iter().copied().filter(|&s| s >= t0).peekable();
    while snaps.peek().map_or(false, |&s| s <= field.t) {
        snaps.next();
        observer(&field);
    }
    let mut next_diag_k: u64 = 1;
    let end = cfg.t_max.max(cfg.snapshot_times.last().copied().unwrap_or(0.0));
    let tol = 1e-9 * dt;
    loop {
        let stop = tracker.decided() && cfg.stop_on_verdict;
        if stop || field.t >= end - tol {
            break;
        }
        let next_diag = t0 + next_diag_k as f64 * cfg.diagnostic_interval;
        let mut target = next_diag.min(end);
        if let Some(&s) = snaps.peek() {
            target = target.min(s);
        }
        let remaining = target - field.t;
        let land = remaining <= dt * (1.0 + 1e-6);
        stepper.step_by(&mut field, if land { remaining.min(dt) } else { dt })?;
        if land {
            field.t = target;
        }
        tracker.outcome.steps += 1;
        tracker.after_step(&field);
        if (field.t - next_diag).abs() <= tol {
            next_diag_k += 1;
            tracker.diagnostic(&field)?;
        }
        while snaps.peek().map_or(false, |&s| (s - field.t) <= tol) {
            snaps.next();
            observer(&field);
        }
        if field.t > cfg.t_max + tol && tracker.decided() && cfg.stop_on_verdict {
            break;
        }
    }
    tracker.outcome.final_time = field.t;
    Ok((tracker.outcome, field))
}

/// Classifies the run from `amplitude · 𝟙_set`.
pub fn classify(set: &SetExpr, amplitude: f64, reaction: &BistableReaction, cfg: &SolverConfig) -> Result<Outcome, SolverError> {
    if cfg.small_mass_shortcut && amplitude <= 1.0 {
        let measure = match set.exact_measure() {
            Some(m) => m,
            None => crate::geom::measure_expr(set, cfg.h)?.value,
        };
        let epsilon = reaction.small_mass_epsilon(set.dim());
        if measure <= epsilon {
            return Ok(Outcome {
                verdict: Verdict::Extinction,
                certificate: Certificate::SmallMass { measure, epsilon },
                certificate_time: Some(0.0),
                final_time: 0.0,
                steps: 0,
                center: set.bbox().center(),
                sup_history: Vec::new(),
                front_history: Vec::new(),
                closest: Closest { min_sup: amplitude, max_core_min: 0.0, longest_growth: 0 },
            });
        }
    }
    let field = init_field(set, amplitude, reaction, cfg)?;
    Ok(run(field, reaction, cfg, &mut |_| {})?.0)
}

/// Ordered snapshots of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub grid: Grid,
    pub snapshots: Vec<(f64, Vec<f64>)>,
}

/// Runs and keeps the configured snapshots in memory.
pub fn simulate(field: Field, reaction: &BistableReaction, cfg: &SolverConfig) -> Result<(Outcome, Trajectory), SolverError> {
    let mut traj = Trajectory { grid: field.grid, snapshots: Vec::new() };
    let (outcome, _) = run(field, reaction, cfg, &mut |f| traj.snapshots.push((f.t, f.u.clone())))?;
    Ok((outcome, traj))
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Comparison {
    /// Largest `u_small − u_large` seen at any step.
    pub max_excess: f64,
    pub steps: u64,
}

/// Evolves both fields in lockstep up to `t_max` and checks
/// `u_small ≤ u_large + 1e−10` after every step.
pub fn compare_runs(small: Field, large: Field, source: &dyn Source, cfg: &SolverConfig) -> Result<Comparison, SolverError> {
    if small.grid != large.grid {
        return Err(SolverError::GridMismatch);
    }
    let excess = |a: &Field, b: &Field| a.u.iter().zip(&b.u).map(|(x, y)| x - y).fold(f64::NEG_INFINITY, f64::max);
    let (mut a, mut b) = (small, large);
    let e0 = excess(&a, &b);
    if e0 > ORDER_SLACK {
        return Err(SolverError::OrderingViolation { t: a.t, excess: e0 });
    }
    let mut sa = Stepper::from_config(a.grid, cfg, source)?;
    let mut sb = Stepper::from_config(b.grid, cfg, source)?;
    let mut rep = Comparison { max_excess: e0, steps: 0 };
    let tol = 1e-9 * sa.dt();
    while a.t < cfg.t_max - tol {
        let dt = sa.dt().min(cfg.t_max - a.t);
        sa.step_by(&mut a, dt)?;
        sb.step_by(&mut b, dt)?;
        rep.steps += 1;
        let e = excess(&a, &b);
        rep.max_excess = rep.max_excess.max(e);
        if e > ORDER_SLACK {
            return Err(SolverError::OrderingViolation { t: a.t, excess: e });
        }
    }
    Ok(rep)
}
