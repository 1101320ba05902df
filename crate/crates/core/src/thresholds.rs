//! Sharp thresholds along monotone one-parameter families of initial data.

use alloc::boxed::Box;
use alloc::vec::Vec;

use thiserror::Error;

use crate::families::{self, FamilyError};
use crate::geom::{rasterize_on, Grid, SetExpr};
use crate::point::Point;
use crate::solver::{Outcome, SolverError, Verdict};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThresholdError {
    #[error("invalid parameter range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("endpoints do not bracket after widening: {lo} → {lo_verdict:?}, {hi} → {hi_verdict:?}")]
    NotBracketing { lo: f64, hi: f64, lo_verdict: Verdict, hi_verdict: Verdict },
    #[error("every probe returned Undecided")]
    AllUndecided,
    #[error("family is not monotone between σ = {a} and σ = {b}")]
    NotMonotone { a: f64, b: f64 },
    #[error("verdicts out of order: invasion at {invasion}, extinction at {extinction}")]
    VerdictOrder { invasion: f64, extinction: f64 },
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Initial datum `amplitude · 𝟙_set`.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialData {
    pub set: SetExpr,
    pub amplitude: f64,
}

impl InitialData {
    pub fn indicator(set: SetExpr) -> Self {
        InitialData { set, amplitude: 1.0 }
    }
}

/// Whether the data grow (`Increasing`) or shrink with σ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Direction {
    #[default]
    Increasing,
    Decreasing,
}

type Generator<'a> = Box<dyn Fn(f64) -> Result<InitialData, FamilyError> + Sync + 'a>;

/// `σ ↦ u0` on a search range, pointwise monotone in σ.
pub struct MonotoneFamily<'a> {
    pub lo: f64,
    pub hi: f64,
    /// σ must stay strictly above this value when widening.
    pub floor: Option<f64>,
    /// σ must stay at or below this value when widening.
    pub ceiling: Option<f64>,
    pub direction: Direction,
    generator: Generator<'a>,
}

impl<'a> MonotoneFamily<'a> {
    pub fn new(lo: f64, hi: f64, direction: Direction, generator: impl Fn(f64) -> Result<InitialData, FamilyError> + Sync + 'a) -> Result<Self, ThresholdError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(ThresholdError::InvalidRange { lo, hi });
        }
        Ok(MonotoneFamily { lo, hi, floor: None, ceiling: None, direction, generator: Box::new(generator) })
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = Some(floor);
        self
    }

    pub fn with_ceiling(mut self, ceiling: f64) -> Self {
        self.ceiling = Some(ceiling);
        self
    }

    /// `amplitude · 𝟙_{B_σ(center)}`.
    pub fn ball(dim: usize, center: Point, amplitude: f64, lo: f64, hi: f64) -> Result<Self, ThresholdError> {
        Ok(Self::new(lo, hi, Direction::Increasing, move |r| {
            Ok(InitialData { set: SetExpr::ball(dim, center, r)?, amplitude })
        })?
        .with_floor(0.0))
    }

    /// `σ · 𝟙_set` for `σ ∈ (0, 1]`.
    pub fn amplitude(set: SetExpr, lo: f64, hi: f64) -> Result<Self, ThresholdError> {
        Ok(Self::new(lo, hi, Direction::Increasing, move |a| {
            if !(a > 0.0 && a <= 1.0) {
                return Err(FamilyError::OutOfDomain(alloc::format!("amplitude {a} outside (0, 1]")));
            }
            Ok(InitialData { set: set.clone(), amplitude: a })
        })?
        .with_floor(0.0)
        .with_ceiling(1.0))
    }

    /// Dilations `p + σ (E − p)`, monotone when `E` is star-shaped about `p`.
    pub fn dilation(set: SetExpr, about: Point, lo: f64, hi: f64) -> Result<Self, ThresholdError> {
        Ok(Self::new(lo, hi, Direction::Increasing, move |mu| {
            let shifted = set.translate(about * -1.0).scale(mu)?.translate(about);
            Ok(InitialData::indicator(shifted))
        })?
        .with_floor(0.0))
    }

    /// Cubes `Q_σ = (−σ/2, σ/2)ᴺ`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self, ThresholdError> {
        Ok(Self::new(lo, hi, Direction::Increasing, move |a| {
            Ok(InitialData::indicator(families::cube(dim, a, Point::ORIGIN)?))
        })?
        .with_floor(0.0))
    }

    /// `C_{a,σ} = Q_a ∩ B_σ`.
    pub fn cube_ball(dim: usize, side: f64, lo: f64, hi: f64) -> Result<Self, ThresholdError> {
        Ok(Self::new(lo, hi, Direction::Increasing, move |r| {
            Ok(InitialData::indicator(families::cube_ball(dim, side, r)?))
        })?
        .with_floor(0.0))
    }

    pub fn generate(&self, sigma: f64) -> Result<InitialData, FamilyError> {
        (self.generator)(sigma)
    }

    /// Checks pointwise monotonicity on `pairs` evenly spaced σ pairs by
    /// rasterizing both members on a common grid of step `h`.
    pub fn spot_check(&self, pairs: usize, h: f64) -> Result<(), ThresholdError> {
        let n = pairs.max(1);
        for k in 0..n {
            let a = self.lo + (self.hi - self.lo) * k as f64 / n as f64;
            let b = self.lo + (self.hi - self.lo) * (k as f64 + 0.5) / n as f64;
            let (small, large) = match self.direction {
                Direction::Increasing => (a, b),
                Direction::Decreasing => (b, a),
            };
            let ds = self.generate(small)?;
            let dl = self.generate(large)?;
            let bbox = ds.set.bbox().union(&dl.set.bbox());
            let grid = Grid::covering(ds.set.dim(), h, &bbox, 1).map_err(FamilyError::from)?;
            let s = if ds.set.dim() == 1 { 16 } else { 4 };
            let rs = rasterize_on(&ds.set, &grid, s).map_err(FamilyError::from)?;
            let rl = rasterize_on(&dl.set, &grid, s).map_err(FamilyError::from)?;
            let ordered = rs
                .coverage()
                .iter()
                .zip(rl.coverage())
                .all(|(x, y)| x * ds.amplitude <= y * dl.amplitude + 1e-12);
            if !ordered {
                return Err(ThresholdError::NotMonotone { a: small, b: large });
            }
        }
        Ok(())
    }
}

/// One classifier call.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProbeRecord {
    pub sigma: f64,
    pub verdict: Verdict,
    pub certificate_time: Option<f64>,
    pub final_time: f64,
}

impl ProbeRecord {
    pub fn from_outcome(sigma: f64, o: &Outcome) -> Self {
        ProbeRecord { sigma, verdict: o.verdict, certificate_time: o.certificate_time, final_time: o.final_time }
    }
}

pub type ProbeResult = Result<ProbeRecord, ThresholdError>;

/// Evaluates independent probes, possibly concurrently. Results must come
/// back in input order.
pub trait Executor {
    fn map(&self, sigmas: &[f64], probe: &(dyn Fn(f64) -> ProbeResult + Sync)) -> Vec<ProbeResult>;
}

/// Runs probes one after another.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map(&self, sigmas: &[f64], probe: &(dyn Fn(f64) -> ProbeResult + Sync)) -> Vec<ProbeResult> {
        sigmas.iter().map(|&s| probe(s)).collect()
    }
}

/// Classifies `amplitude · 𝟙_set`.
pub type Classifier<'a> = &'a (dyn Fn(&InitialData) -> Result<Outcome, SolverError> + Sync);

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BisectOptions {
    /// Target bracket width.
    pub tol: f64,
    /// Widening attempts per endpoint.
    pub max_widen: usize,
    /// Hard cap on classifier calls.
    pub max_probes: usize,
    /// Interior points per round; the probed σ sequence depends on this
    /// value only, never on the number of workers.
    pub fanout: usize,
}

impl Default for BisectOptions {
    fn default() -> Self {
        BisectOptions { tol: 0.01, max_widen: 10, max_probes: 60, fanout: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BracketStatus {
    /// `hi − lo ≤ tol`.
    Converged,
    /// Undecided probes fill the bracket at resolution `tol`.
    Stalled,
    /// The probe budget ran out first.
    Budget,
}

/// Certified bracket around a threshold. For increasing families `lo`
/// carries an Extinction certificate and `hi` an Invasion certificate;
/// for decreasing families the roles swap.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThresholdBracket {
    pub lo: f64,
    pub hi: f64,
    pub direction: Direction,
    pub undecided: Vec<f64>,
    pub tolerance: f64,
    pub status: BracketStatus,
    pub probes: Vec<ProbeRecord>,
}

impl ThresholdBracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Bisection state in the oriented variable `s` where small `s` means
/// extinction.
struct Search<'f, 'a> {
    family: &'f MonotoneFamily<'a>,
    sign: f64,
    probes: Vec<ProbeRecord>,
}

impl Search<'_, '_> {
    fn sigma(&self, s: f64) -> f64 {
        self.sign * s
    }

    fn eval(&mut self, ss: &[f64], classify: Classifier, exec: &dyn Executor) -> Result<Vec<Verdict>, ThresholdError> {
        let sigmas: Vec<f64> = ss.iter().map(|&s| self.sigma(s)).collect();
        let family = self.family;
        let probe = move |sigma: f64| -> ProbeResult {
            let data = family.generate(sigma)?;
            let o = classify(&data)?;
            Ok(ProbeRecord::from_outcome(sigma, &o))
        };
        let results = exec.map(&sigmas, &probe);
        let mut out = Vec::with_capacity(results.len());
        for r in results {
            let rec = r?;
            out.push(rec.verdict);
            self.probes.push(rec);
        }
        Ok(out)
    }
}

/// Locates the threshold of `family` to within `opts.tol`.
pub fn bisect(family: &MonotoneFamily, classify: Classifier, opts: &BisectOptions, exec: &dyn Executor) -> Result<ThresholdBracket, ThresholdError> {
    if !(opts.tol > 0.0) {
        return Err(ThresholdError::InvalidRange { lo: family.lo, hi: family.hi });
    }
    let sign = if family.direction == Direction::Increasing { 1.0 } else { -1.0 };
    let mut search = Search { family, sign, probes: Vec::new() };
    // Oriented bounds.
    let (floor, ceiling) = match family.direction {
        Direction::Increasing => (family.floor, family.ceiling),
        Direction::Decreasing => (family.ceiling.map(|c| -c), family.floor.map(|f| -f)),
    };
    let (mut lo, mut hi) = match family.direction {
        Direction::Increasing => (family.lo, family.hi),
        Direction::Decreasing => (-family.hi, -family.lo),
    };
    let mut undecided: Vec<f64> = Vec::new();

    // Certify the ends, widening outward when they do not bracket.
    let v = search.eval(&[lo, hi], classify, exec)?;
    let (mut vlo, mut vhi) = (v[0], v[1]);
    let mut widen = 0;
    let mut step = hi - lo;
    while vlo != Verdict::Extinction || vhi != Verdict::Invasion {
        if widen >= opts.max_widen || search.probes.len() >= opts.max_probes {
            if search.probes.iter().all(|p| p.verdict == Verdict::Undecided) {
                return Err(ThresholdError::AllUndecided);
            }
            return Err(ThresholdError::NotBracketing { lo: search.sigma(lo), hi: search.sigma(hi), lo_verdict: vlo, hi_verdict: vhi });
        }
        widen += 1;
        let width = step;
        step *= 2.0;
        if vlo != Verdict::Extinction {
            if vlo == Verdict::Invasion && vhi != Verdict::Invasion {
                hi = lo;
                vhi = vlo;
            } else if vlo == Verdict::Undecided {
                undecided.push(lo);
            }
            lo = match floor {
                Some(f) => f + (lo - f) / 2.0,
                None => lo - width,
            };
            vlo = search.eval(&[lo], classify, exec)?[0];
        } else {
            if vhi == Verdict::Extinction {
                lo = hi;
            } else if vhi == Verdict::Undecided {
                undecided.push(hi);
            }
            hi = match ceiling {
                Some(c) if hi + width > c => {
                    if hi >= c {
                        return Err(ThresholdError::NotBracketing { lo: search.sigma(lo), hi: search.sigma(hi), lo_verdict: vlo, hi_verdict: vhi });
                    }
                    c
                }
                _ => hi + width,
            };
            vhi = search.eval(&[hi], classify, exec)?[0];
        }
    }
    undecided.retain(|&u| u > lo && u < hi);

    let status = loop {
        if hi - lo <= opts.tol {
            break BracketStatus::Converged;
        }
        if search.probes.len() >= opts.max_probes {
            break BracketStatus::Budget;
        }
        // Refine the wider of the two gaps between a certified end and the
        // undecided cluster; the cluster's interior is not resolved.
        let (a, b) = match (undecided.iter().copied().reduce(f64::min), undecided.iter().copied().reduce(f64::max)) {
            (Some(umin), Some(umax)) => {
                if umin - lo >= hi - umax {
                    (lo, umin)
                } else {
                    (umax, hi)
                }
            }
            _ => (lo, hi),
        };
        if b - a <= opts.tol {
            break BracketStatus::Stalled;
        }
        let k = opts.fanout.max(1);
        let pts: Vec<f64> = (1..=k).map(|i| a + (b - a) * i as f64 / (k + 1) as f64).collect();
        let verdicts = search.eval(&pts, classify, exec)?;
        for (&s, v) in pts.iter().zip(verdicts) {
            match v {
                Verdict::Extinction => {
                    if s > hi {
                        return Err(ThresholdError::VerdictOrder { invasion: search.sigma(hi), extinction: search.sigma(s) });
                    }
                    lo = lo.max(s);
                }
                Verdict::Invasion => {
                    if s < lo {
                        return Err(ThresholdError::VerdictOrder { invasion: search.sigma(s), extinction: search.sigma(lo) });
                    }
                    hi = hi.min(s);
                }
                Verdict::Undecided => undecided.push(s),
            }
        }
        if lo > hi {
            return Err(ThresholdError::VerdictOrder { invasion: search.sigma(hi), extinction: search.sigma(lo) });
        }
        undecided.retain(|&u| u > lo && u < hi);
    };

    let (blo, bhi) = match family.direction {
        Direction::Increasing => (lo, hi),
        Direction::Decreasing => (-hi, -lo),
    };
    let mut und: Vec<f64> = undecided.iter().map(|&s| search.sigma(s)).collect();
    und.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(ThresholdBracket { lo: blo, hi: bhi, direction: family.direction, undecided: und, tolerance: hi - lo, status, probes: search.probes })
}

/// One row of a sweep; errors are kept per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub sigma: f64,
    pub result: Result<ProbeRecord, ThresholdError>,
}

/// Classifies every σ of `sigmas`; rows come back sorted by σ.
pub fn sweep(
    sigmas: &[f64],
    generate: &(dyn Fn(f64) -> Result<InitialData, FamilyError> + Sync),
    classify: Classifier,
    exec: &dyn Executor,
) -> Vec<SweepRow> {
    let mut sorted: Vec<f64> = sigmas.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let probe = |sigma: f64| -> ProbeResult {
        let data = generate(sigma)?;
        let o = classify(&data)?;
        Ok(ProbeRecord::from_outcome(sigma, &o))
    };
    exec.map(&sorted, &probe).into_iter().zip(sorted).map(|(result, sigma)| SweepRow { sigma, result }).collect()
}

/// Pairs `(σ_e, σ_i)` with `σ_i < σ_e`, an Invasion below an Extinction,
/// in a sweep over an increasing family.
pub fn order_violations(rows: &[SweepRow]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            if let (Ok(pa), Ok(pb)) = (&a.result, &b.result) {
                if pa.verdict == Verdict::Invasion && pb.verdict == Verdict::Extinction {
                    out.push((pb.sigma, pa.sigma));
                }
            }
        }
    }
    out
}

/// Bracket on `r*(ε)`: the threshold of `r ↦ Q_{a*+ε} ∩ B_r`. The search
/// starts on `[r_lo, (a*+ε)√N/2]`, where `r_lo` should sit below the
/// ball threshold.
pub fn r_star(
    dim: usize,
    epsilon: f64,
    a_star: f64,
    r_lo: f64,
    classify: Classifier,
    opts: &BisectOptions,
    exec: &dyn Executor,
) -> Result<ThresholdBracket, ThresholdError> {
    if !(epsilon > 0.0 && a_star > 0.0) {
        return Err(ThresholdError::InvalidRange { lo: epsilon, hi: a_star });
    }
    let side = a_star + epsilon;
    let r_hi = side * crate::math::sqrt(dim as f64) / 2.0;
    let fam = MonotoneFamily::cube_ball(dim, side, r_lo.min(0.9 * r_hi), r_hi)?.with_ceiling(r_hi);
    bisect(&fam, classify, opts, exec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{Certificate, Closest};
    use alloc::vec;

    /// Outcome oracle with a sharp threshold at `t` and an undecided band.
    fn fake(threshold: f64, band: f64) -> impl Fn(&InitialData) -> Result<Outcome, SolverError> + Sync {
        move |d: &InitialData| {
            let m = d.set.exact_measure().unwrap_or(0.0) * d.amplitude;
            let verdict = if m < threshold - band {
                Verdict::Extinction
            } else if m > threshold + band {
                Verdict::Invasion
            } else {
                Verdict::Undecided
            };
            Ok(Outcome {
                verdict,
                certificate: Certificate::None,
                certificate_time: None,
                final_time: 0.0,
                steps: 0,
                center: Point::ORIGIN,
                sup_history: vec![],
                front_history: vec![],
                closest: Closest { min_sup: 0.0, max_core_min: 0.0, longest_growth: 0 },
            })
        }
    }

    #[test]
    fn bisects_sharp_threshold() {
        let fam = MonotoneFamily::ball(1, Point::ORIGIN, 1.0, 1.0, 4.0).unwrap();
        let c = fake(4.6, 0.0);
        let b = bisect(&fam, &c, &BisectOptions { tol: 1e-3, ..Default::default() }, &Sequential).unwrap();
        assert_eq!(b.status, BracketStatus::Converged);
        assert!(b.contains(2.3) && b.width() <= 1e-3);
    }

    #[test]
    fn widens_out_of_a_bad_range() {
        let fam = MonotoneFamily::ball(1, Point::ORIGIN, 1.0, 3.0, 4.0).unwrap();
        let c = fake(4.6, 0.0);
        let b = bisect(&fam, &c, &BisectOptions { tol: 1e-3, ..Default::default() }, &Sequential).unwrap();
        assert!(b.contains(2.3));
        let fam = MonotoneFamily::ball(1, Point::ORIGIN, 1.0, 0.1, 0.2).unwrap();
        let b = bisect(&fam, &c, &BisectOptions { tol: 1e-3, ..Default::default() }, &Sequential).unwrap();
        assert!(b.contains(2.3));
    }

    #[test]
    fn undecided_band_stalls_with_certified_ends() {
        let fam = MonotoneFamily::ball(1, Point::ORIGIN, 1.0, 1.0, 4.0).unwrap();
        let c = fake(4.6, 0.1);
        let b = bisect(&fam, &c, &BisectOptions { tol: 1e-3, ..Default::default() }, &Sequential).unwrap();
        assert_eq!(b.status, BracketStatus::Stalled);
        assert!(!b.undecided.is_empty());
        assert!(b.undecided.iter().all(|&u| u > b.lo && u < b.hi));
        assert!(2.0 * b.lo <= 4.5 + 1e-9 && 2.0 * b.hi >= 4.7 - 1e-9);
    }

    #[test]
    fn decreasing_family() {
        // Radius 5 − σ.
        let fam = MonotoneFamily::new(0.5, 4.0, Direction::Decreasing, |s| Ok(InitialData::indicator(SetExpr::interval(-(5.0 - s), 5.0 - s)?))).unwrap();
        let c = fake(4.6, 0.0);
        let b = bisect(&fam, &c, &BisectOptions { tol: 1e-3, ..Default::default() }, &Sequential).unwrap();
        assert!(b.contains(2.7), "{b:?}");
    }

    #[test]
    fn fanout_is_deterministic() {
        let fam = MonotoneFamily::ball(1, Point::ORIGIN, 1.0, 1.0, 4.0).unwrap();
        let c = fake(4.6, 0.0);
        let opts = BisectOptions { tol: 1e-3, fanout: 3, ..Default::default() };
        let a = bisect(&fam, &c, &opts, &Sequential).unwrap();
        let b = bisect(&fam, &c, &opts, &Sequential).unwrap();
        assert_eq!(a, b);
        assert!(a.contains(2.3));
    }

    #[test]
    fn spot_check_rejects_non_monotone() {
        let ok = MonotoneFamily::cube_ball(2, 2.0, 0.5, 1.5).unwrap();
        ok.spot_check(5, 0.05).unwrap();
        let bad = MonotoneFamily::new(0.1, 5.0, Direction::Increasing, |a| Ok(InitialData::indicator(families::d_a(a, 1.0)?))).unwrap();
        assert!(bad.spot_check(5, 0.05).is_err());
    }

    #[test]
    fn sweep_is_sorted_and_flags_order() {
        let c = fake(4.6, 0.0);
        let gen = |r: f64| Ok(InitialData::indicator(SetExpr::interval(-r, r)?));
        let rows = sweep(&[3.0, 1.0, 2.0, -1.0], &gen, &c, &Sequential);
        let s: Vec<f64> = rows.iter().map(|r| r.sigma).collect();
        assert_eq!(s, vec![-1.0, 1.0, 2.0, 3.0]);
        assert!(rows[0].result.is_err());
        assert!(order_violations(&rows).is_empty());
    }
}
