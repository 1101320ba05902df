//! The bistable nonlinearity `f` and the scalars derived from it.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use thiserror::Error;

use crate::math;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReactionError {
    #[error("density {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("θ must lie in (0, 1), got {0}")]
    InvalidTheta(f64),
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("front speed only defined for positive mass")]
    NonPositiveMass,
    #[error("shooting did not converge: {0}")]
    Shooting(String),
}

/// Configuration form of a reaction.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields))]
pub enum ReactionSpec {
    /// `f(u) = u (1 − u) (u − θ)`.
    Cubic { theta: f64 },
    /// Natural cubic spline through `(u, f(u))` pairs spanning `[0, 1]`.
    Table { points: Vec<[f64; 2]> },
}

/// Natural cubic spline; segment `i` is `a + b t + c t² + d t³` with
/// `t = u − knots[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spline {
    knots: Vec<f64>,
    coef: Vec<[f64; 4]>,
}

impl Spline {
    fn natural(xs: &[f64], ys: &[f64]) -> Spline {
        let n = xs.len() - 1;
        let h: Vec<f64> = (0..n).map(|i| xs[i + 1] - xs[i]).collect();
        // Tridiagonal system for the second derivatives at interior knots.
        let mut m = vec![0.0; n + 1];
        if n >= 2 {
            let k = n - 1;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            let mut upper = vec![0.0; k];
            for i in 1..n {
                diag[i - 1] = 2.0 * (h[i - 1] + h[i]);
                upper[i - 1] = h[i];
                rhs[i - 1] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
            }
            for i in 1..k {
                let w = h[i] / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (1..k).rev() {
                m[i] = (rhs[i - 1] - upper[i - 1] * m[i + 1]) / diag[i - 1];
            }
        }
        let coef = (0..n)
            .map(|i| {
                let a = ys[i];
                let b = (ys[i + 1] - ys[i]) / h[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0;
                let c = m[i] / 2.0;
                let d = (m[i + 1] - m[i]) / (6.0 * h[i]);
                [a, b, c, d]
            })
            .collect();
        Spline { knots: xs.to_vec(), coef }
    }

    fn segment(&self, u: f64) -> (usize, f64) {
        let i = self.knots.partition_point(|&k| k <= u).saturating_sub(1).min(self.coef.len() - 1);
        (i, u - self.knots[i])
    }

    fn eval(&self, u: f64) -> f64 {
        let (i, t) = self.segment(u);
        let [a, b, c, d] = self.coef[i];
        a + t * (b + t * (c + t * d))
    }

    fn deriv(&self, u: f64) -> f64 {
        let (i, t) = self.segment(u);
        let [_, b, c, d] = self.coef[i];
        b + t * (2.0 * c + 3.0 * t * d)
    }

    fn segment_integral(&self, i: usize, t: f64) -> f64 {
        let [a, b, c, d] = self.coef[i];
        t * (a + t * (b / 2.0 + t * (c / 3.0 + t * d / 4.0)))
    }

    fn integral(&self) -> f64 {
        (0..self.coef.len())
            .map(|i| self.segment_integral(i, self.knots[i + 1] - self.knots[i]))
            .collect::<math::CompensatedSum>()
            .value()
    }

    /// `∫_0^u` of the spline.
    fn primitive(&self, u: f64) -> f64 {
        let (i, t) = self.segment(u);
        (0..i)
            .map(|j| self.segment_integral(j, self.knots[j + 1] - self.knots[j]))
            .chain(core::iter::once(self.segment_integral(i, t)))
            .collect::<math::CompensatedSum>()
            .value()
    }

    /// Points where `|f'|` can peak: knots and zeros of `f''` per segment.
    fn derivative_candidates(&self) -> Vec<f64> {
        let mut out = self.knots.clone();
        for (i, [_, _, c, d]) in self.coef.iter().enumerate() {
            if *d != 0.0 {
                let t = -c / (3.0 * d);
                if t > 0.0 && t < self.knots[i + 1] - self.knots[i] {
                    out.push(self.knots[i] + t);
                }
            }
        }
        out
    }

    /// Points where `|f|` can peak: knots and zeros of `f'` per segment.
    fn value_candidates(&self) -> Vec<f64> {
        let mut out = self.knots.clone();
        for (i, [_, b, c, d]) in self.coef.iter().enumerate() {
            let len = self.knots[i + 1] - self.knots[i];
            let (qa, qb, qc) = (3.0 * d, 2.0 * c, *b);
            let mut roots = Vec::new();
            if qa.abs() < 1e-300 {
                if qb != 0.0 {
                    roots.push(-qc / qb);
                }
            } else {
                let disc = qb * qb - 4.0 * qa * qc;
                if disc >= 0.0 {
                    let s = math::sqrt(disc);
                    roots.push((-qb + s) / (2.0 * qa));
                    roots.push((-qb - s) / (2.0 * qa));
                }
            }
            out.extend(roots.into_iter().filter(|&t| t > 0.0 && t < len).map(|t| self.knots[i] + t));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReactionKind {
    Cubic,
    Table(Spline),
}

/// A bistable `f` on `[0, 1]`: `f(0) = f(1) = 0`, `f < 0` on `(0, θ)`,
/// `f > 0` on `(θ, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BistableReaction {
    kind: ReactionKind,
    theta: f64,
    m_prime: f64,
    m_max: f64,
    mass: f64,
}

/// Dense sampling resolution used for the derived maxima.
const SAMPLES: usize = 10_000;

impl BistableReaction {
    pub fn cubic(theta: f64) -> Result<Self, ReactionError> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(ReactionError::InvalidTheta(theta));
        }
        let mut r = BistableReaction { kind: ReactionKind::Cubic, theta, m_prime: 0.0, m_max: 0.0, mass: 0.0 };
        // Critical points: f'' = 0 at (1+θ)/3; f' = 0 at the roots of
        // −3u² + 2(1+θ)u − θ.
        let crit_d = [(1.0 + theta) / 3.0];
        let disc = math::sqrt((1.0 + theta) * (1.0 + theta) - 3.0 * theta);
        let crit_f = [((1.0 + theta) - disc) / 3.0, ((1.0 + theta) + disc) / 3.0];
        r.m_prime = r.sampled_max(|u| r.derivative(u).abs(), &crit_d);
        r.m_max = r.sampled_max(|u| r.rate(u).abs(), &crit_f);
        r.mass = (1.0 - 2.0 * theta) / 12.0;
        Ok(r)
    }

    pub fn table(points: &[[f64; 2]]) -> Result<Self, ReactionError> {
        let bad = |m: &str| Err(ReactionError::InvalidTable(String::from(m)));
        if points.len() < 3 {
            return bad("need at least three points");
        }
        if points.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return bad("non-finite entry");
        }
        if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return bad("densities must be strictly increasing");
        }
        if points[0][0] != 0.0 || points[points.len() - 1][0] != 1.0 {
            return bad("densities must span exactly [0, 1]");
        }
        if points[0][1] != 0.0 || points[points.len() - 1][1] != 0.0 {
            return bad("f(0) and f(1) must vanish");
        }
        let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
        let spline = Spline::natural(&xs, &ys);
        // Sign pattern on a dense grid: one sign change, negative then positive.
        let vals: Vec<f64> = (1..SAMPLES).map(|i| spline.eval(i as f64 / SAMPLES as f64)).collect();
        let first_pos = vals.iter().position(|&v| v > 0.0);
        let Some(first_pos) = first_pos else { return bad("f is never positive") };
        if first_pos == 0 || vals[..first_pos].iter().any(|&v| v > 0.0) {
            return bad("f must be negative near 0");
        }
        if vals[first_pos..].iter().any(|&v| v <= 0.0) {
            return bad("f must stay positive above θ");
        }
        if vals[..first_pos - 1].iter().any(|&v| v >= 0.0) {
            return bad("f must stay negative below θ");
        }
        let (mut lo, mut hi) = (first_pos as f64 / SAMPLES as f64, (first_pos + 1) as f64 / SAMPLES as f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if spline.eval(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let theta = 0.5 * (lo + hi);
        let crit_d = spline.derivative_candidates();
        let crit_f = spline.value_candidates();
        let mass = spline.integral();
        let mut r = BistableReaction { kind: ReactionKind::Table(spline), theta, m_prime: 0.0, m_max: 0.0, mass };
        r.m_prime = r.sampled_max(|u| r.derivative(u).abs(), &crit_d);
        r.m_max = r.sampled_max(|u| r.rate(u).abs(), &crit_f);
        Ok(r)
    }

    pub fn from_spec(spec: &ReactionSpec) -> Result<Self, ReactionError> {
        match spec {
            ReactionSpec::Cubic { theta } => Self::cubic(*theta),
            ReactionSpec::Table { points } => Self::table(points),
        }
    }

    pub fn spec(&self) -> ReactionSpec {
        match &self.kind {
            ReactionKind::Cubic => ReactionSpec::Cubic { theta: self.theta },
            ReactionKind::Table(s) => ReactionSpec::Table {
                points: s.knots.iter().zip(&s.coef).map(|(&u, c)| [u, c[0]]).chain(core::iter::once([1.0, 0.0])).collect(),
            },
        }
    }

    fn sampled_max(&self, g: impl Fn(f64) -> f64, extra: &[f64]) -> f64 {
        (0..=SAMPLES)
            .map(|i| i as f64 / SAMPLES as f64)
            .chain(extra.iter().copied().filter(|u| (0.0..=1.0).contains(u)))
            .map(g)
            .fold(0.0, f64::max)
    }

    pub fn kind(&self) -> &ReactionKind {
        &self.kind
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `M' = max_{[0,1]} |f'|`.
    pub fn m_prime(&self) -> f64 {
        self.m_prime
    }

    /// `M = max_{[0,1]} |f|`.
    pub fn m_max(&self) -> f64 {
        self.m_max
    }

    /// `∫_0^1 f`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `f(u)` without the range check, for inner loops that validate the
    /// field themselves.
    #[inline]
    pub fn rate(&self, u: f64) -> f64 {
        match &self.kind {
            ReactionKind::Cubic => u * (1.0 - u) * (u - self.theta),
            ReactionKind::Table(s) => s.eval(u),
        }
    }

    /// `f(u)`; densities outside `[0, 1]` are an error, never clamped.
    pub fn eval(&self, u: f64) -> Result<f64, ReactionError> {
        if !(0.0..=1.0).contains(&u) {
            return Err(ReactionError::OutOfRange(u));
        }
        Ok(self.rate(u))
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        match &self.kind {
            ReactionKind::Cubic => -3.0 * u * u + 2.0 * (1.0 + self.theta) * u - self.theta,
            ReactionKind::Table(s) => s.deriv(u),
        }
    }

    /// `F(u) = ∫_0^u f`.
    pub fn primitive(&self, u: f64) -> f64 {
        match &self.kind {
            ReactionKind::Cubic => {
                let t = self.theta;
                u * u * (-u * u / 4.0 + (1.0 + t) * u / 3.0 - t / 2.0)
            }
            ReactionKind::Table(s) => s.primitive(u),
        }
    }

    /// `ε = e^{−M'} (4π)^{N/2} θ / 2`: every initial indicator of measure at
    /// most `ε` goes extinct.
    pub fn small_mass_epsilon(&self, dim: usize) -> f64 {
        math::exp(-self.m_prime) * math::powf(4.0 * math::PI, dim as f64 / 2.0) * self.theta / 2.0
    }

    /// `1/√(−f'(0))`, the decay length of small perturbations of 0.
    pub fn diffusion_length(&self) -> f64 {
        let d = -self.derivative(0.0);
        if d > 0.0 {
            1.0 / math::sqrt(d)
        } else {
            1.0
        }
    }

    /// Speed of the front connecting 1 to 0. Closed form `(1−2θ)/√2` for
    /// the cubic, shooting otherwise.
    pub fn front_speed(&self) -> Result<f64, ReactionError> {
        match self.kind {
            ReactionKind::Cubic => Ok((1.0 - 2.0 * self.theta) / math::sqrt(2.0)),
            ReactionKind::Table(_) => self.shooting_front_speed(),
        }
    }

    /// Outcome of integrating `φ'' + c φ' + f(φ) = 0` from the saddle at 1
    /// along its unstable manifold: `true` when the orbit stalls before 0
    /// (speed too large), `false` when it overshoots 0. The energy
    /// `p²/2 + F(φ)` is non-increasing, so once negative the orbit can no
    /// longer reach 0.
    fn stalls(&self, c: f64) -> Result<bool, ReactionError> {
        let fp1 = self.derivative(1.0);
        let lam = (-c + math::sqrt(c * c - 4.0 * fp1)) / 2.0;
        let delta = 1e-7;
        let (mut phi, mut p) = (1.0 - delta, -delta * lam);
        let rhs = |phi: f64, p: f64| (p, -c * p - self.rate(phi.clamp(0.0, 1.0)));
        let step = 2e-3;
        for _ in 0..20_000_000u32 {
            let (k1a, k1b) = rhs(phi, p);
            let (k2a, k2b) = rhs(phi + 0.5 * step * k1a, p + 0.5 * step * k1b);
            let (k3a, k3b) = rhs(phi + 0.5 * step * k2a, p + 0.5 * step * k2b);
            let (k4a, k4b) = rhs(phi + step * k3a, p + step * k3b);
            phi += step / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
            p += step / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
            if phi <= 0.0 {
                return Ok(false);
            }
            if p >= 0.0 || p * p / 2.0 + self.primitive(phi) < 0.0 {
                return Ok(true);
            }
        }
        Err(ReactionError::Shooting(format!("no decision at c = {c}")))
    }

    /// Front speed by shooting and bisection on `c`; used as an oracle for
    /// the cubic and as the method for tabulated `f`.
    pub fn shooting_front_speed(&self) -> Result<f64, ReactionError> {
        if self.mass <= 0.0 {
            return Err(ReactionError::NonPositiveMass);
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut grow = 0;
        while !self.stalls(hi)? {
            lo = hi;
            hi *= 2.0;
            grow += 1;
            if grow > 30 {
                return Err(ReactionError::Shooting(String::from("no stalling speed found")));
            }
        }
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if self.stalls(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-9 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_values() {
        let f = BistableReaction::cubic(0.4).unwrap();
        assert_eq!(f.eval(0.0).unwrap(), 0.0);
        assert_eq!(f.eval(1.0).unwrap(), 0.0);
        assert!(f.eval(0.4).unwrap().abs() < 1e-17);
        assert!((f.eval(0.7).unwrap() - 0.063).abs() < 1e-15);
        assert_eq!(f.eval(1.0 + 1e-9), Err(ReactionError::OutOfRange(1.0 + 1e-9)));
        assert_eq!(f.eval(-1e-9), Err(ReactionError::OutOfRange(-1e-9)));
        assert!(BistableReaction::cubic(1.0).is_err());
    }

    #[test]
    fn cubic_derived_scalars() {
        for theta in [0.1, 0.25, 0.4, 0.5, 0.7] {
            let f = BistableReaction::cubic(theta).unwrap();
            let exact = theta.max(1.0 - theta).max((1.0 - theta + theta * theta) / 3.0);
            assert!((f.m_prime() - exact).abs() < 1e-8);
            // Quadrature of the mass.
            let n = 100_000;
            let q: f64 = (0..n).map(|i| f.rate((i as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64;
            assert!((q - f.mass()).abs() < 1e-10);
            assert_eq!(f.mass() > 0.0, theta < 0.5);
        }
    }

    #[test]
    fn epsilon_scaling() {
        let f = BistableReaction::cubic(0.4).unwrap();
        let e1 = f.small_mass_epsilon(1);
        let expected = math::exp(-f.m_prime()) * math::sqrt(4.0 * math::PI) * 0.2;
        assert!((e1 - expected).abs() < 1e-15);
        assert!((f.small_mass_epsilon(2) / e1 - math::sqrt(4.0 * math::PI)).abs() < 1e-12);
    }

    #[test]
    fn speeds_agree_with_shooting() {
        for theta in [0.1, 0.25, 0.4] {
            let f = BistableReaction::cubic(theta).unwrap();
            let exact = f.front_speed().unwrap();
            let shot = f.shooting_front_speed().unwrap();
            assert!((exact - shot).abs() < 1e-4, "θ={theta}: {exact} vs {shot}");
        }
        assert_eq!(BistableReaction::cubic(0.5).unwrap().front_speed().unwrap(), 0.0);
    }

    #[test]
    fn table_reproduces_cubic() {
        let theta = 0.3;
        let pts: Vec<[f64; 2]> = (0..=200)
            .map(|i| {
                let u = i as f64 / 200.0;
                [u, u * (1.0 - u) * (u - theta)]
            })
            .collect();
        let t = BistableReaction::table(&pts).unwrap();
        let c = BistableReaction::cubic(theta).unwrap();
        assert!((t.theta() - theta).abs() < 1e-6);
        assert!((t.mass() - c.mass()).abs() < 1e-7);
        // The natural end conditions bend f' near the endpoints.
        assert!((t.m_prime() - c.m_prime()).abs() < 1e-2);
        assert!((t.front_speed().unwrap() - c.front_speed().unwrap()).abs() < 1e-3);
    }

    #[test]
    fn table_sign_pattern_is_enforced() {
        let bad = [[0.0, 0.0], [0.3, 0.1], [0.6, -0.1], [1.0, 0.0]];
        assert!(BistableReaction::table(&bad).is_err());
        let monostable = [[0.0, 0.0], [0.5, 0.2], [1.0, 0.0]];
        assert!(BistableReaction::table(&monostable).is_err());
        let ends = [[0.0, 0.1], [0.5, 0.2], [1.0, 0.0]];
        assert!(BistableReaction::table(&ends).is_err());
    }
}
