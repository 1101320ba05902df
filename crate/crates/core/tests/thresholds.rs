use fragrd_core::solver::{classify, SolverConfig};
use fragrd_core::thresholds::*;
use fragrd_core::{BistableReaction, Point, SetExpr};

fn ball_threshold(f: &BistableReaction, h: f64, alpha: f64, tol: f64) -> ThresholdBracket {
    let cfg = SolverConfig { h, ..Default::default() };
    let c = |d: &InitialData| classify(&d.set, d.amplitude, f, &cfg);
    let fam = MonotoneFamily::ball(1, Point::ORIGIN, alpha, 1.5, 4.0).unwrap();
    bisect(&fam, &c, &BisectOptions { tol, ..Default::default() }, &Sequential).unwrap()
}

#[test]
fn ball_threshold_is_grid_stable() {
    let f = BistableReaction::cubic(0.4).unwrap();
    let a = ball_threshold(&f, 0.04, 1.0, 5e-3);
    let b = ball_threshold(&f, 0.02, 1.0, 5e-3);
    assert!((a.midpoint() - b.midpoint()).abs() <= 0.02 * b.midpoint(), "{a:?} {b:?}");
    // The length-4.55 interval sits below the threshold length.
    assert!(2.0 * b.lo > 4.55);
}

#[test]
fn threshold_radius_decreases_with_amplitude() {
    let f = BistableReaction::cubic(0.4).unwrap();
    let tol = 1e-2;
    let r08 = ball_threshold(&f, 0.04, 0.8, tol);
    let r10 = ball_threshold(&f, 0.04, 1.0, tol);
    assert!(r08.lo >= r10.lo - tol, "{} vs {}", r08.lo, r10.lo);
}

#[test]
fn amplitude_family_brackets() {
    let f = BistableReaction::cubic(0.4).unwrap();
    let cfg = SolverConfig { h: 0.04, ..Default::default() };
    let c = |d: &InitialData| classify(&d.set, d.amplitude, &f, &cfg);
    let fam = MonotoneFamily::amplitude(SetExpr::interval(-3.0, 3.0).unwrap(), 0.45, 1.0).unwrap();
    fam.spot_check(5, 0.05).unwrap();
    let b = bisect(&fam, &c, &BisectOptions { tol: 1e-2, ..Default::default() }, &Sequential).unwrap();
    assert!(b.lo > 0.4 && b.hi < 1.0);
}
