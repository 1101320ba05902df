//! Named set families and the equimeasurable pair constructions.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use thiserror::Error;

use crate::geom::{GeomError, Node, SetExpr};
use crate::math;
use crate::point::{Point, MAX_DIM};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FamilyError {
    #[error("parameter out of domain: {0}")]
    OutOfDomain(String),
    #[error("components overlap: {0}")]
    Overlap(String),
    #[error("no admissible parameter: {0}")]
    NoAdmissible(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

fn domain(msg: impl Into<String>) -> FamilyError {
    FamilyError::OutOfDomain(msg.into())
}

/// A member of one of the named families.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case", deny_unknown_fields))]
pub enum FamilySpec {
    /// Balls of radius `1/n²` at `x/n`, `x ∈ Z^N ∩ (0, n)^N`.
    En { dim: usize, n: u32 },
    /// Cubes of side `ν/n` centred at `x/n`, `x ∈ Z^N ∩ B_n`.
    Fn { dim: usize, n: u32, nu: f64 },
    /// `B_{1/n}(x) ∪ B_{1/n}(y)`.
    Gn { dim: usize, n: u32, x: Point, y: Point },
    /// `(−a−r, −a) ∪ (a, a+r)`.
    Da { a: f64, r: f64 },
    /// `n` balls of radius `R/n^{1/N}` at `k e`, `k = 1..n`.
    On { dim: usize, n: u32, radius: f64, e: Point },
    /// `B_{R'} ∪ B_{r'}(x_p)`.
    Qp { dim: usize, big: f64, small: f64, x_p: Point },
    /// `(−a/2, a/2)^N + center`.
    Cube { dim: usize, a: f64, #[cfg_attr(feature = "serde", serde(default))] center: Point },
    /// `Q_a ∩ B_r`.
    CubeBall { dim: usize, a: f64, r: f64 },
    /// `B_{(a^N+1)^{1/N}} ∖ B_a`.
    Shell { dim: usize, a: f64 },
    /// `(a, b)`.
    Interval { a: f64, b: f64 },
    /// `B_r(center)`.
    BallSet { dim: usize, radius: f64, #[cfg_attr(feature = "serde", serde(default))] center: Point },
    /// Comb of `2k+1` intervals of length `α/z` at `x/z`, `|x| ≤ k`.
    Comb { alpha: f64, z: f64, k: u32 },
    /// `En` dilated to the given measure.
    ScaledEn { dim: usize, n: u32, measure: f64 },
}

fn check_dim(dim: usize) -> Result<(), FamilyError> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(FamilyError::Geom(GeomError::InvalidDimension(dim)))
    }
}

fn positive(name: &str, v: f64) -> Result<(), FamilyError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// All `x ∈ Z^N` with `|x| < n` (open ball), scanned directly.
pub fn lattice_points_in_ball(dim: usize, n: f64) -> Vec<[i64; MAX_DIM]> {
    let m = math::ceil(n) as i64;
    let mut out = Vec::new();
    let range = |used: bool| if used { -m..=m } else { 0..=0 };
    for k in range(dim >= 3) {
        for j in range(dim >= 2) {
            for i in -m..=m {
                let r2 = (i * i + j * j + k * k) as f64;
                if r2 < n * n {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

fn cube_node(center: Point, side: f64, dim: usize) -> Node {
    let half = Point::splat(dim, side / 2.0);
    Node::Box { min: center - half, max: center + half }
}

fn lattice_cubes(dim: usize, n: u32, radius: f64, side: f64) -> Vec<Node> {
    let nf = n as f64;
    lattice_points_in_ball(dim, radius * nf)
        .into_iter()
        .map(|x| {
            let c = Point([x[0] as f64 / nf, x[1] as f64 / nf, x[2] as f64 / nf]);
            cube_node(c, side, dim)
        })
        .collect()
}

pub fn e_n(dim: usize, n: u32) -> Result<SetExpr, FamilyError> {
    check_dim(dim)?;
    if n < 2 {
        return Err(domain("En needs n ≥ 2 (E_1 is empty)"));
    }
    let nf = n as f64;
    let r = 1.0 / (nf * nf);
    let m = (n - 1) as usize;
    let mut balls = Vec::with_capacity(m.pow(dim as u32));
    let count = [m, if dim >= 2 { m } else { 1 }, if dim >= 3 { m } else { 1 }];
    for k in 0..count[2] {
        for j in 0..count[1] {
            for i in 0..count[0] {
                let mut c = Point::ORIGIN;
                let idx = [i, j, k];
                for a in 0..dim {
                    c.0[a] = (idx[a] + 1) as f64 / nf;
                }
                balls.push(Node::Ball { center: c, radius: r });
            }
        }
    }
    Ok(SetExpr::new(dim, Node::Union(balls))?)
}

/// `λ(E_n) = (n−1)^N ω_N n^{−2N}`.
pub fn e_n_measure(dim: usize, n: u32) -> f64 {
    let nf = n as f64;
    math::powi((nf - 1.0) / (nf * nf), dim as i32) * math::unit_ball_volume(dim)
}

pub fn f_n(dim: usize, n: u32, nu: f64) -> Result<SetExpr, FamilyError> {
    check_dim(dim)?;
    if n < 1 {
        return Err(domain("Fn needs n ≥ 1"));
    }
    if !(nu > 0.0 && nu < 1.0) {
        return Err(domain(format!("Fn needs ν in (0, 1), got {nu}")));
    }
    Ok(SetExpr::new(dim, Node::Union(lattice_cubes(dim, n, 1.0, nu / n as f64)))?)
}

/// `λ(F_n) = A_n (ν/n)^N` with `A_n = #(Z^N ∩ B_n)`.
pub fn f_n_measure(dim: usize, n: u32, nu: f64) -> f64 {
    lattice_points_in_ball(dim, n as f64).len() as f64 * math::powi(nu / n as f64, dim as i32)
}

pub fn g_n(dim: usize, n: u32, x: Point, y: Point) -> Result<SetExpr, FamilyError> {
    check_dim(dim)?;
    if n < 1 {
        return Err(domain("Gn needs n ≥ 1"));
    }
    if x == y {
        return Err(domain("Gn needs two distinct points"));
    }
    let r = 1.0 / n as f64;
    Ok(SetExpr::new(dim, Node::Union(vec![Node::Ball { center: x, radius: r }, Node::Ball { center: y, radius: r }]))?)
}

pub fn d_a(a: f64, r: f64) -> Result<SetExpr, FamilyError> {
    positive("a", a)?;
    positive("r", r)?;
    Ok(SetExpr::intervals(&[(-a - r, -a), (a, a + r)])?)
}

pub fn o_n(dim: usize, n: u32, radius: f64, e: Point) -> Result<SetExpr, FamilyError> {
    check_dim(dim)?;
    positive("R", radius)?;
    if n < 1 || e.norm() == 0.0 {
        return Err(domain("On needs n ≥ 1 and e ≠ 0"));
    }
    let r = radius / math::root(n as f64, dim);
    let balls = (1..=n).map(|k| Node::Ball { center: e * k as f64, radius: r }).collect();
    Ok(SetExpr::new(dim, Node::Union(balls))?)
}

pub fn q_p(dim: usize, big: f64, small: f64, x_p: Point) -> Result<SetExpr, FamilyError> {
    check_dim(dim)?;
    positive("R'", big)?;
    positive("r'", small)?;
    if x_p.norm() < big + small {
        return Err(FamilyError::Overlap(format!("satellite at distance {} meets B_R'", x_p.norm())));
    }
    Ok(SetExpr::new(
        dim,
        Node::Union(vec![Node::Ball { center: Point::ORIGIN, radius: big }, Node::Ball { center: x_p, radius: small }]),
    )?)
}

pub fn cube(dim: usize, a: f64, center: Point) -> Result<SetExpr, FamilyError> {
    positive("a", a)?;
    Ok(SetExpr::cube(dim, center, a)?)
}

/// `C_{a,r} = Q_a ∩ B_r`, simplified to the ball or the cube when one
/// contains the other.
pub fn cube_ball(dim: usize, a: f64, r: f64) -> Result<SetExpr, FamilyError> {
    check_dim(dim)?;
    positive("a", a)?;
    positive("r", r)?;
    if r <= a / 2.0 {
        return Ok(SetExpr::ball(dim, Point::ORIGIN, r)?);
    }
    if r >= a * math::sqrt(dim as f64) / 2.0 {
        return Ok(SetExpr::cube(dim, Point::ORIGIN, a)?);
    }
    Ok(SetExpr::new(dim, Node::Intersect(vec![cube_node(Point::ORIGIN, a, dim), Node::Ball { center: Point::ORIGIN, radius: r }]))?)
}

/// `λ(Q_a ∩ B_r)` in the plane: the disk minus four circular segments.
pub fn cube_ball_area_2d(a: f64, r: f64) -> f64 {
    let d = a / 2.0;
    if r <= d {
        return math::PI * r * r;
    }
    if r * r >= 2.0 * d * d {
        return a * a;
    }
    let segment = r * r * math::acos(d / r) - d * math::sqrt(r * r - d * d);
    math::PI * r * r - 4.0 * segment
}

pub fn shell(dim: usize, a: f64) -> Result<SetExpr, FamilyError> {
    check_dim(dim)?;
    positive("a", a)?;
    let outer = math::root(math::powi(a, dim as i32) + 1.0, dim);
    Ok(SetExpr::diff(SetExpr::ball(dim, Point::ORIGIN, outer)?, SetExpr::ball(dim, Point::ORIGIN, a)?)?)
}

/// `∪_{x ∈ Z ∩ [−k, k]} (x/z − α/(2z), x/z + α/(2z))`.
pub fn comb(alpha: f64, z: f64, k: u32) -> Result<SetExpr, FamilyError> {
    positive("z", z)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("comb needs α in (0, 1) so intervals stay disjoint, got {alpha}")));
    }
    let k = k as i64;
    let iv: Vec<(f64, f64)> = (-k..=k)
        .map(|x| {
            let c = x as f64 / z;
            (c - alpha / (2.0 * z), c + alpha / (2.0 * z))
        })
        .collect();
    Ok(SetExpr::intervals(&iv)?)
}

/// Dilation about the origin bringing `e` to measure `m`.
pub fn rescale_to_measure(e: &SetExpr, current: f64, m: f64) -> Result<SetExpr, FamilyError> {
    positive("measure", m)?;
    positive("current measure", current)?;
    Ok(e.scale(math::root(m / current, e.dim()))?)
}

pub fn build(spec: &FamilySpec) -> Result<SetExpr, FamilyError> {
    match *spec {
        FamilySpec::En { dim, n } => e_n(dim, n),
        FamilySpec::Fn { dim, n, nu } => f_n(dim, n, nu),
        FamilySpec::Gn { dim, n, x, y } => g_n(dim, n, x, y),
        FamilySpec::Da { a, r } => d_a(a, r),
        FamilySpec::On { dim, n, radius, e } => o_n(dim, n, radius, e),
        FamilySpec::Qp { dim, big, small, x_p } => q_p(dim, big, small, x_p),
        FamilySpec::Cube { dim, a, center } => cube(dim, a, center),
        FamilySpec::CubeBall { dim, a, r } => cube_ball(dim, a, r),
        FamilySpec::Shell { dim, a } => shell(dim, a),
        FamilySpec::Interval { a, b } => {
            if !(a < b) {
                return Err(domain("interval needs a < b"));
            }
            Ok(SetExpr::interval(a, b)?)
        }
        FamilySpec::BallSet { dim, radius, center } => {
            positive("radius", radius)?;
            Ok(SetExpr::ball(dim, center, radius)?)
        }
        FamilySpec::Comb { alpha, z, k } => comb(alpha, z, k),
        FamilySpec::ScaledEn { dim, n, measure } => rescale_to_measure(&e_n(dim, n)?, e_n_measure(dim, n), measure),
    }
}

/// Closed-form measure of a family member, where one is known.
pub fn closed_form_measure(spec: &FamilySpec) -> Option<f64> {
    let w = |d: usize| math::unit_ball_volume(d);
    match *spec {
        FamilySpec::En { dim, n } => Some(e_n_measure(dim, n)),
        FamilySpec::Fn { dim, n, nu } => Some(f_n_measure(dim, n, nu)),
        FamilySpec::Da { r, .. } => Some(2.0 * r),
        FamilySpec::On { dim, radius, .. } => Some(w(dim) * math::powi(radius, dim as i32)),
        FamilySpec::Qp { dim, big, small, .. } => {
            Some(w(dim) * (math::powi(big, dim as i32) + math::powi(small, dim as i32)))
        }
        FamilySpec::Cube { dim, a, .. } => Some(math::powi(a, dim as i32)),
        FamilySpec::CubeBall { dim: 2, a, r } => Some(cube_ball_area_2d(a, r)),
        FamilySpec::Shell { dim, .. } => Some(w(dim)),
        FamilySpec::Interval { a, b } => Some(b - a),
        FamilySpec::BallSet { dim, radius, .. } => Some(w(dim) * math::powi(radius, dim as i32)),
        FamilySpec::Comb { alpha, z, k } => Some((2 * k + 1) as f64 * alpha / z),
        FamilySpec::ScaledEn { measure, .. } => Some(measure),
        _ => None,
    }
}

/// Inputs of the lattice-cube (homogenization) pair.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HomogenizationParams {
    pub dim: usize,
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub r: f64,
    pub r_prime: f64,
    pub n: u32,
    /// Centre of the compensating ball; defaults to `10 (R' + ρ_n + 1)`
    /// along the first axis.
    pub far_anchor: Option<Point>,
}

/// `F_n` and `H_n = G_n ∪ B_{ρ_n}(x_n)`, equimeasurable.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogenizationPair {
    pub f: SetExpr,
    pub g: SetExpr,
    pub h: SetExpr,
    pub lambda_f: f64,
    pub lambda_g: f64,
    pub rho_n: f64,
    pub x_n: Point,
    /// `α ω_N R^N` and `β ω_N R'^N`.
    pub limit_lambda_f: f64,
    pub limit_lambda_g: f64,
    /// `1 − α` and `1 − β`.
    pub limit_delta1_f: f64,
    pub limit_delta1_h: f64,
}

pub fn thm1_homogenization(p: &HomogenizationParams) -> Result<HomogenizationPair, FamilyError> {
    let dim = p.dim;
    check_dim(dim)?;
    if !(p.theta < p.alpha && p.alpha < p.beta && p.beta < 1.0) {
        return Err(domain(format!("need θ < α < β < 1, got θ={}, α={}, β={}", p.theta, p.alpha, p.beta)));
    }
    positive("R'", p.r_prime)?;
    if !(p.r_prime < p.r) {
        return Err(domain("need R' < R"));
    }
    if !(math::root(p.alpha, dim) * p.r < p.r_prime) {
        return Err(domain("need α^{1/N} R < R'"));
    }
    if p.n < 1 {
        return Err(domain("need n ≥ 1"));
    }
    let nf = p.n as f64;
    let side_f = math::root(p.alpha, dim) / nf;
    let side_g = math::root(p.beta, dim) / nf;
    let cf = lattice_cubes(dim, p.n, p.r, side_f);
    let cg = lattice_cubes(dim, p.n, p.r_prime, side_g);
    let cell = math::powi(1.0 / nf, dim as i32);
    let lambda_f = cf.len() as f64 * p.alpha * cell;
    let lambda_g = cg.len() as f64 * p.beta * cell;
    if !(lambda_f > lambda_g) {
        return Err(FamilyError::NoAdmissible(format!(
            "λ(F_n) = {lambda_f} does not exceed λ(G_n) = {lambda_g} at n = {}",
            p.n
        )));
    }
    let w = math::unit_ball_volume(dim);
    let rho_n = math::root((lambda_f - lambda_g) / w, dim);
    let x_n = p.far_anchor.unwrap_or_else(|| Point::x(10.0 * (p.r_prime + rho_n + 1.0)));
    let reach = p.r_prime + side_g * math::sqrt(dim as f64) / 2.0;
    if x_n.norm() <= reach + rho_n {
        return Err(FamilyError::Overlap(format!("B_ρn(x_n) at distance {} meets G_n", x_n.norm())));
    }
    let f = SetExpr::new(dim, Node::Union(cf))?;
    let g = SetExpr::new(dim, Node::Union(cg.clone()))?;
    let mut hn = cg;
    hn.push(Node::Ball { center: x_n, radius: rho_n });
    let h = SetExpr::new(dim, Node::Union(hn))?;
    Ok(HomogenizationPair {
        f,
        g,
        h,
        lambda_f,
        lambda_g,
        rho_n,
        x_n,
        limit_lambda_f: p.alpha * w * math::powi(p.r, dim as i32),
        limit_lambda_g: p.beta * w * math::powi(p.r_prime, dim as i32),
        limit_delta1_f: 1.0 - p.alpha,
        limit_delta1_h: 1.0 - p.beta,
    })
}

/// Inputs of the cube / cube-ball pair (plane only).
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CubeBallParams {
    pub dim: usize,
    pub a_star: f64,
    pub eps_star: f64,
    pub sigma: f64,
    pub beta: f64,
    /// Chosen automatically (largest admissible value below `β`) when absent.
    pub eta: Option<f64>,
    /// Centre of the far cube; defaults to `10 (a* + ε*) + 10` along the
    /// first axis.
    pub far_anchor: Option<Point>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CubeBallPair {
    /// `Q_{a*+ηε*}`.
    pub e1: SetExpr,
    /// `C_{a*+βε*, r} ∪ Q^x`.
    pub e2: SetExpr,
    pub eta: f64,
    pub r: f64,
    pub lambda_e1: f64,
    pub lambda_c: f64,
    pub lambda_qx: f64,
    pub far_center: Point,
}

fn cube_ball_constraints(p: &CubeBallParams, eta: f64) -> Result<(), String> {
    let w = math::PI;
    let ab = p.a_star + p.beta * p.eps_star;
    let ae = p.a_star + eta * p.eps_star;
    let cap = w * p.a_star * p.a_star / 4.0;
    let c_sig = cube_ball_area_2d(ab, p.sigma * ab);
    let gap_beta = ab * ab - c_sig;
    if !(gap_beta > 0.0 && gap_beta < cap) {
        return Err(format!("β fails 0 < λ(Q) − λ(C) < ω a*²/4: gap {gap_beta}, cap {cap}"));
    }
    let gap_eta = ae * ae - c_sig;
    if !(gap_eta > 0.0 && gap_eta < cap) {
        return Err(format!("η fails 0 < λ(Q_{{a*+ηε*}}) − λ(C) < ω a*²/4: gap {gap_eta}, cap {cap}"));
    }
    if !(ab / 2.0 < ae / math::sqrt(w)) {
        return Err(format!("η fails (a*+βε*)/2 < (a*+ηε*)/√π: {} vs {}", ab / 2.0, ae / math::sqrt(w)));
    }
    Ok(())
}

/// Largest `η` in `(0, β)` (on a grid of 4096 steps) meeting both `η`
/// constraints.
pub fn choose_eta(p: &CubeBallParams) -> Option<f64> {
    let steps = 4096;
    (1..steps).rev().map(|i| p.beta * i as f64 / steps as f64).find(|&eta| cube_ball_constraints(p, eta).is_ok())
}

pub fn thm1_cubeball(p: &CubeBallParams) -> Result<CubeBallPair, FamilyError> {
    if p.dim != 2 {
        return Err(domain("the cube / cube-ball pair is implemented in the plane (N = 2) only"));
    }
    positive("a*", p.a_star)?;
    positive("ε*", p.eps_star)?;
    let lo = 1.0 / math::sqrt(math::PI);
    let hi = math::sqrt(2.0) / 2.0;
    if !(p.sigma > lo && p.sigma < hi) {
        return Err(domain(format!("σ must lie in (1/√π, √2/2) = ({lo}, {hi}), got {}", p.sigma)));
    }
    if !(p.beta > 0.0 && p.beta < 1.0) {
        return Err(domain("β must lie in (0, 1)"));
    }
    let eta = match p.eta {
        Some(e) => {
            if !(e > 0.0 && e < p.beta) {
                return Err(domain("η must lie in (0, β)"));
            }
            cube_ball_constraints(p, e).map_err(FamilyError::NoAdmissible)?;
            e
        }
        None => choose_eta(p).ok_or_else(|| {
            FamilyError::NoAdmissible(cube_ball_constraints(p, p.beta * 0.999).err().unwrap_or_default())
        })?,
    };
    let ab = p.a_star + p.beta * p.eps_star;
    let ae = p.a_star + eta * p.eps_star;
    let r = p.sigma * ab;
    let lambda_e1 = ae * ae;
    let lambda_c = cube_ball_area_2d(ab, r);
    let lambda_qx = lambda_e1 - lambda_c;
    let side_x = math::sqrt(lambda_qx);
    let far_center = p.far_anchor.unwrap_or_else(|| Point::x(10.0 * (p.a_star + p.eps_star) + 10.0));
    // The far cube must clear the ball of radius r around the origin.
    if far_center.norm() <= r + side_x * math::sqrt(2.0) / 2.0 {
        return Err(FamilyError::Overlap(format!("far cube at distance {} meets C", far_center.norm())));
    }
    let e1 = SetExpr::cube(2, Point::ORIGIN, ae)?;
    let c = cube_ball(2, ab, r)?;
    let e2 = SetExpr::new(2, Node::Union(vec![c.into_node(), cube_node(far_center, side_x, 2)]))?;
    Ok(CubeBallPair { e1, e2, eta, r, lambda_e1, lambda_c, lambda_qx, far_center })
}
