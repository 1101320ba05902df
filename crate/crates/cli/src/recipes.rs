//! Reproduction recipes. Each writes its documents, records every check,
//! and fails with exit code 4 when a check does not hold.

use crate::config::params;
use crate::error::{CliError, Result};
use crate::exec::par_map;
use crate::io::fmt;
use crate::run::{classifier, Run};
use crate::setdoc::SetDoc;
use fragrd_core::families::{self, CubeBallParams, FamilySpec, HomogenizationParams};
use fragrd_core::geom::{delta1_oracle_1d, IndexReport};
use fragrd_core::solver::{self, init_field, Outcome, SolverConfig, Verdict};
use fragrd_core::thresholds::{bisect, BisectOptions, MonotoneFamily, ThresholdBracket};
use fragrd_core::{Point, SetExpr};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const RECIPES: [&str; 4] = ["fig1", "thm1-homog", "thm1-cubeball", "nonmono-dh"];

pub fn dispatch(name: &str, run: &mut Run) -> Result<Value> {
    match name {
        "fig1" => fig1(run),
        "thm1-homog" => thm1_homog(run),
        "thm1-cubeball" => thm1_cubeball(run),
        "nonmono-dh" => nonmono_dh(run),
        other => Err(CliError::config(format!("unknown recipe `{other}`; expected one of {RECIPES:?}"))),
    }
}

fn classify_all(run: &Run, sets: &[SetExpr], cfg: &SolverConfig) -> Result<Vec<Outcome>> {
    let f = &run.reaction;
    par_map(run.cfg.workers, sets, &|s: &SetExpr| solver::classify(s, 1.0, f, cfg)).into_iter().map(|r| r.map_err(CliError::from)).collect()
}

fn ball_bracket(run: &mut Run, name: &str, dim: usize, amplitude: f64, lo: f64, hi: f64, tol: f64, cfg: &SolverConfig) -> Result<ThresholdBracket> {
    let f = run.reaction.clone();
    let c = classifier(&f, cfg);
    let fam = MonotoneFamily::ball(dim, Point::ORIGIN, amplitude, lo, hi)?;
    let b = bisect(&fam, &c, &BisectOptions { tol, ..Default::default() }, &run.executor())?;
    run.record_bracket(name, &b);
    Ok(b)
}

fn given_or<F: FnOnce(&mut Run) -> Result<ThresholdBracket>>(run: &mut Run, given: Option<[f64; 2]>, compute: F) -> Result<(f64, f64, Value)> {
    match given {
        Some([lo, hi]) => Ok((lo, hi, json!({ "lo": lo, "hi": hi, "source": "parameter" }))),
        None => {
            let b = compute(run)?;
            Ok((b.lo, b.hi, json!({ "lo": b.lo, "hi": b.hi, "status": b.status, "undecided": b.undecided, "probes": b.probes })))
        }
    }
}

fn verdict_doc(o: &Outcome) -> Value {
    json!({ "verdict": o.verdict, "certificate": o.certificate, "certificate_time": o.certificate_time, "final_time": o.final_time })
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig1Params {
    /// Length of the interval `E1`.
    pub length: f64,
    pub alpha: f64,
    pub z: f64,
    pub k: u32,
    pub snapshot_times: Vec<f64>,
    pub delta1_oracle: f64,
    pub delta1_tolerance: f64,
    pub early_time: f64,
    pub early_tolerance: f64,
}

impl Default for Fig1Params {
    fn default() -> Self {
        let mut times = vec![0.0, 0.05];
        times.extend((1..=20).map(|k| 4.0 * k as f64));
        Fig1Params {
            length: 4.55,
            alpha: 0.75,
            z: 2.16,
            k: 6,
            snapshot_times: times,
            delta1_oracle: 3.0 / 13.0,
            delta1_tolerance: 0.03,
            early_time: 0.05,
            early_tolerance: 0.1,
        }
    }
}

fn fig1(run: &mut Run) -> Result<Value> {
    let p: Fig1Params = params(&run.cfg.experiment.params)?;
    let e1 = SetExpr::interval(-p.length / 2.0, p.length / 2.0)?;
    let e2 = families::comb(p.alpha, p.z, p.k)?;
    let mut cfg = run.cfg.solver.clone();
    cfg.snapshot_times = p.snapshot_times.clone();
    cfg.stop_on_verdict = false;
    run.cfg.validate_solver(1)?;
    let f = run.reaction.clone();
    let sets = [e1.clone(), e2.clone()];
    let results = par_map(run.cfg.workers, &sets, &|s: &SetExpr| -> Result<_> {
        let field = init_field(s, 1.0, &f, &cfg)?;
        Ok(solver::simulate(field, &f, &cfg)?)
    });
    let mut outs = Vec::new();
    for (name, r) in ["e1", "e2"].iter().zip(results) {
        let (o, traj) = r?;
        run.out.write_csv_snapshots(&format!("fig1_{name}.csv"), &traj.grid, &traj.snapshots)?;
        run.record_verdict(name, &o);
        outs.push((o, traj));
    }
    let hull = p.k as f64 / p.z + p.alpha / (2.0 * p.z);
    let early = outs[1].1.snapshots.iter().find(|(t, _)| (t - p.early_time).abs() < 1e-9).map(|(_, u)| {
        let g = outs[1].1.grid;
        let inside: Vec<f64> = (0..g.len()).filter(|&i| g.coord(0, i).abs() < hull).map(|i| u[i]).collect();
        inside.iter().sum::<f64>() / inside.len() as f64
    });
    let r2 = run.indices("e2", &e2)?;
    let r1 = run.indices("e1", &e1)?;
    let oracle = delta1_oracle_1d(&e2.intervals_1d().expect("one-dimensional"))?.delta1;
    let (o1, o2) = (&outs[0].0, &outs[1].0);
    let checks = vec![
        run.check("e1_extinction", o1.verdict == Verdict::Extinction, format!("{:?}", o1.verdict)),
        run.check("e2_invasion", o2.verdict == Verdict::Invasion, format!("{:?}", o2.verdict)),
        run.check(
            "e2_delta1",
            (r2.delta1 - p.delta1_oracle).abs() <= p.delta1_tolerance,
            format!("raster {} vs pre-registered {} (tolerance {})", r2.delta1, p.delta1_oracle, p.delta1_tolerance),
        ),
        run.check(
            "e2_early_mean",
            early.map_or(false, |m| (m - p.alpha).abs() <= p.early_tolerance),
            format!("mean over the hull at t = {}: {:?}, expected {} ± {}", p.early_time, early, p.alpha, p.early_tolerance),
        ),
    ];
    let doc = json!({
        "params": p,
        "e1": { "set": SetDoc::from_expr(&e1), "measure": e1.exact_measure(), "delta1": r1.delta1, "outcome": verdict_doc(o1), "snapshots": "fig1_e1.csv" },
        "e2": { "set": SetDoc::from_expr(&e2), "measure": e2.exact_measure(), "delta1": r2.delta1, "delta1_oracle": oracle, "early_mean": early, "outcome": verdict_doc(o2), "snapshots": "fig1_e2.csv" },
        "checks": checks,
    });
    run.out.write_json("fig1.json", &doc)?;
    Ok(json!({ "e1": o1.verdict, "e2": o2.verdict, "delta1_e2": r2.delta1 }))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomogParams {
    pub alpha: f64,
    pub beta: f64,
    /// Lattice refinements tried in order until the pair splits as
    /// (Invasion, Extinction).
    pub n: Vec<u32>,
    pub tol: f64,
    /// Brackets `[lo, hi]` used instead of bisecting when given.
    pub r_alpha: Option<[f64; 2]>,
    pub r_beta: Option<[f64; 2]>,
    pub r_one: Option<[f64; 2]>,
    /// `n` values of the rescaled `En` tried for the extinct third set.
    pub triple_n: Vec<u32>,
}

impl Default for HomogParams {
    fn default() -> Self {
        HomogParams { alpha: 0.7, beta: 0.9, n: vec![8, 16, 32, 64], tol: 0.01, r_alpha: None, r_beta: None, r_one: None, triple_n: vec![8, 16, 32] }
    }
}

/// Index ordering, equal measure and verdicts of a pair `(E1, E2)`.
fn pair_checks(run: &mut Run, r1: &IndexReport, r2: &IndexReport, m1: f64, m2: f64, o1: &Outcome, o2: &Outcome) -> Vec<Value> {
    vec![
        run.check("equal_measure", rel_diff(m1, m2) <= 1e-3, format!("λ(E1) = {m1}, λ(E2) = {m2}")),
        run.check("delta1_order", 0.0 < r2.delta1 && r2.delta1 < r1.delta1, format!("δ1(E2) = {}, δ1(E1) = {}", r2.delta1, r1.delta1)),
        run.check("e1_invasion", o1.verdict == Verdict::Invasion, format!("{:?}", o1.verdict)),
        run.check("e2_extinction", o2.verdict == Verdict::Extinction, format!("{:?}", o2.verdict)),
    ]
}

/// Rescaled `En` of measure `m`: the first extinct member with `δ1` above
/// `floor`.
fn extinct_triple(run: &mut Run, dim: usize, ns: &[u32], m: f64, floor: f64, cfg: &SolverConfig) -> Result<(Value, Vec<Value>)> {
    let mut tried = Vec::new();
    for &n in ns {
        let spec = FamilySpec::ScaledEn { dim, n, measure: m };
        let set = families::build(&spec)?;
        let r = run.indices(&format!("triple_en{n}"), &set)?;
        let o = classify_all(run, &[set.clone()], cfg)?.remove(0);
        tried.push(json!({ "spec": spec, "delta1": r.delta1, "outcome": verdict_doc(&o) }));
        if o.verdict == Verdict::Extinction && r.delta1 > floor {
            run.record_verdict("triple_f", &o);
            let checks = vec![
                run.check("f_extinction", true, format!("n = {n}")),
                run.check("f_delta1_largest", true, format!("δ1(F) = {} > δ1(E1) = {floor}", r.delta1)),
            ];
            return Ok((json!({ "chosen_n": n, "tried": tried }), checks));
        }
    }
    let c = run.check("f_extinction", false, format!("no rescaled En in {ns:?} was extinct with δ1 above {floor}"));
    Ok((json!({ "chosen_n": null, "tried": tried }), vec![c]))
}

fn thm1_homog(run: &mut Run) -> Result<Value> {
    let p: HomogParams = params(&run.cfg.experiment.params)?;
    run.cfg.validate_solver(1)?;
    let cfg = run.cfg.solver.clone();
    let theta = run.reaction.theta();
    if !(theta < p.alpha && p.alpha < p.beta && p.beta < 1.0) {
        return Err(CliError::config(format!("need θ < α < β < 1, got θ = {theta}, α = {}, β = {}", p.alpha, p.beta)));
    }
    let (_, a_hi, a_doc) = given_or(run, p.r_alpha, |r| ball_bracket(r, "r_alpha", 1, p.alpha, 1.0, 8.0, p.tol, &cfg))?;
    let (b_lo, _, b_doc) = given_or(run, p.r_beta, |r| ball_bracket(r, "r_beta", 1, p.beta, 1.0, 8.0, p.tol, &cfg))?;
    let (o_lo, _, o_doc) = given_or(run, p.r_one, |r| ball_bracket(r, "r_one", 1, 1.0, 1.0, 8.0, p.tol, &cfg))?;
    // F_n ≈ α𝟙_{B_R} must invade: R > R_α. G_n ≈ β𝟙_{B_R'} must die:
    // R' < R_β. The compensating ball B_ρ, ρ = αR − βR', must die too, and
    // α R < R' keeps δ1(H_n) near 1 − β.
    let r = 0.5 * (a_hi + b_lo / p.alpha);
    let w_lo = (p.alpha * r).max((p.alpha * r - o_lo) / p.beta);
    let w_hi = r.min(b_lo).min(p.alpha * r / p.beta);
    let window = json!({ "r": r, "r_prime_lo": w_lo, "r_prime_hi": w_hi });
    let base = json!({ "params": p, "theta": theta, "r_alpha": a_doc, "r_beta": b_doc, "r_one": o_doc, "window": window });
    if !(r > a_hi && w_lo < w_hi) {
        let c = run.check("admissible_parameters", false, format!("no R' window: R = {r}, R_α ≤ {a_hi}, ({w_lo}, {w_hi})"));
        run.out.write_json("thm1-homog.json", &json!({ "setup": base, "checks": [c] }))?;
        return Ok(Value::Null);
    }
    let r_prime = 0.5 * (w_lo + w_hi);
    let mut attempts = Vec::new();
    let mut found = None;
    for &n in &p.n {
        let hp = HomogenizationParams { dim: 1, theta, alpha: p.alpha, beta: p.beta, r, r_prime, n, far_anchor: None };
        let pair = match families::thm1_homogenization(&hp) {
            Ok(pair) => pair,
            Err(e) => {
                attempts.push(json!({ "n": n, "error": e.to_string() }));
                continue;
            }
        };
        let outs = classify_all(run, &[pair.f.clone(), pair.h.clone()], &cfg)?;
        attempts.push(json!({ "n": n, "f": verdict_doc(&outs[0]), "h": verdict_doc(&outs[1]), "rho_n": pair.rho_n, "x_n": pair.x_n }));
        if outs[0].verdict == Verdict::Invasion && outs[1].verdict == Verdict::Extinction {
            found = Some((n, hp, pair, outs));
            break;
        }
    }
    let Some((n, hp, pair, outs)) = found else {
        let c = run.check("pair_found", false, format!("no n in {:?} gave (Invasion, Extinction)", p.n));
        run.out.write_json("thm1-homog.json", &json!({ "setup": base, "r_prime": r_prime, "attempts": attempts, "checks": [c] }))?;
        return Ok(Value::Null);
    };
    run.record_verdict("e1", &outs[0]);
    run.record_verdict("e2", &outs[1]);
    let r1 = run.indices("e1", &pair.f)?;
    let r2 = run.indices("e2", &pair.h)?;
    let m1 = pair.f.exact_measure().unwrap_or(pair.lambda_f);
    let m2 = pair.h.exact_measure().unwrap_or(pair.lambda_f);
    let mut checks = pair_checks(run, &r1, &r2, m1, m2, &outs[0], &outs[1]);
    let (triple, more) = extinct_triple(run, 1, &p.triple_n, m1, r1.delta1, &cfg)?;
    checks.extend(more);
    let doc = json!({
        "setup": base,
        "chosen": { "r": r, "r_prime": r_prime, "n": n, "construction": hp },
        "attempts": attempts,
        "e1": { "set": SetDoc::from_expr(&pair.f), "measure": m1, "delta1": r1.delta1, "outcome": verdict_doc(&outs[0]) },
        "e2": { "set": SetDoc::from_expr(&pair.h), "measure": m2, "delta1": r2.delta1, "rho_n": pair.rho_n, "outcome": verdict_doc(&outs[1]) },
        "triple": triple,
        "checks": checks,
    });
    run.out.write_json("thm1-homog.json", &doc)?;
    Ok(json!({ "n": n, "delta1_e1": r1.delta1, "delta1_e2": r2.delta1 }))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CubeBallRecipeParams {
    /// Grid spacing and horizon of the planar runs.
    pub h: f64,
    pub t_max: f64,
    pub sigma: f64,
    pub beta: f64,
    pub eta: Option<f64>,
    /// Initial range of the cube-side search.
    pub a_range: [f64; 2],
    pub tol: f64,
    /// Brackets used instead of bisecting when given.
    pub a_star: Option<[f64; 2]>,
    pub b_sigma: Option<[f64; 2]>,
    /// Clearance between the main set and the far cube.
    pub far_gap: f64,
    pub triple_n: Vec<u32>,
}

impl Default for CubeBallRecipeParams {
    fn default() -> Self {
        CubeBallRecipeParams {
            h: 0.2,
            t_max: 200.0,
            sigma: 0.6,
            beta: 2.0 / 3.0,
            eta: Some(1.0 / 3.0),
            a_range: [8.0, 16.0],
            tol: 0.04,
            a_star: None,
            b_sigma: None,
            far_gap: 20.0,
            triple_n: vec![4, 8, 16],
        }
    }
}

fn thm1_cubeball(run: &mut Run) -> Result<Value> {
    let p: CubeBallRecipeParams = params(&run.cfg.experiment.params)?;
    let mut cfg = run.cfg.solver.clone();
    cfg.h = p.h;
    cfg.t_max = p.t_max;
    cfg.dt = None;
    cfg.domain_margin = None;
    cfg.validate(2, run.reaction.m_prime())?;
    let f = run.reaction.clone();
    let c = classifier(&f, &cfg);
    let exec = run.executor();
    let opts = BisectOptions { tol: p.tol, ..Default::default() };
    let (a_lo, a_hi, a_doc) = given_or(run, p.a_star, |r| {
        let fam = MonotoneFamily::cube(2, p.a_range[0], p.a_range[1])?;
        let b = bisect(&fam, &c, &opts, &exec)?;
        r.record_bracket("a_star", &b);
        Ok(b)
    })?;
    let sigma = p.sigma;
    let (s_lo, s_hi, s_doc) = given_or(run, p.b_sigma, |r| {
        let fam = MonotoneFamily::new(a_lo, 1.5 * a_hi, Default::default(), move |b: f64| {
            Ok(fragrd_core::thresholds::InitialData::indicator(families::cube_ball(2, b, sigma * b)?))
        })?;
        let b = bisect(&fam, &c, &opts, &exec)?;
        r.record_bracket("b_sigma", &b);
        Ok(b)
    })?;
    // C_{b, σb} with b = a* + ε* sits on its own threshold.
    let a_star = 0.5 * (a_lo + a_hi);
    let eps_star = 0.5 * (s_lo + s_hi) - a_star;
    let setup = json!({ "params": p, "a_star": a_doc, "b_sigma": s_doc, "a_star_mid": a_star, "eps_star": eps_star });
    if !(eps_star > 0.0) {
        let c = run.check("eps_star_positive", false, format!("ε* = {eps_star}"));
        run.out.write_json("thm1-cubeball.json", &json!({ "setup": setup, "checks": [c] }))?;
        return Ok(Value::Null);
    }
    let ab = a_star + p.beta * eps_star;
    let reach = sigma * ab;
    let mut cp = CubeBallParams { dim: 2, a_star, eps_star, sigma, beta: p.beta, eta: p.eta, far_anchor: None };
    let far = reach + p.far_gap + (a_star + eps_star) / 2.0;
    cp.far_anchor = Some(Point::x(far));
    let pair = match families::thm1_cubeball(&cp) {
        Ok(pair) => pair,
        Err(e) => {
            let c = run.check("construction", false, e.to_string());
            run.out.write_json("thm1-cubeball.json", &json!({ "setup": setup, "construction": cp, "checks": [c] }))?;
            return Ok(Value::Null);
        }
    };
    let outs = classify_all(run, &[pair.e1.clone(), pair.e2.clone()], &cfg)?;
    run.record_verdict("e1", &outs[0]);
    run.record_verdict("e2", &outs[1]);
    let r1 = run.indices("e1", &pair.e1)?;
    let r2 = run.indices("e2", &pair.e2)?;
    let m1 = pair.lambda_e1;
    let m2 = pair.lambda_c + pair.lambda_qx;
    let raster_m2 = r2.measure;
    let mut checks = pair_checks(run, &r1, &r2, m1, m2, &outs[0], &outs[1]);
    checks.push(run.check("raster_measure", rel_diff(m1, raster_m2) <= 3.0 * r2.tolerance, format!("raster λ(E2) = {raster_m2}")));
    let (triple, more) = extinct_triple(run, 2, &p.triple_n, m1, r1.delta1, &cfg)?;
    checks.extend(more);
    let doc = json!({
        "setup": setup,
        "construction": cp,
        "eta": pair.eta,
        "r": pair.r,
        "e1": { "set": SetDoc::from_expr(&pair.e1), "measure": m1, "delta1": r1.delta1, "outcome": verdict_doc(&outs[0]) },
        "e2": { "set": SetDoc::from_expr(&pair.e2), "measure": m2, "delta1": r2.delta1, "far_center": pair.far_center, "outcome": verdict_doc(&outs[1]) },
        "triple": triple,
        "checks": checks,
    });
    run.out.write_json("thm1-cubeball.json", &doc)?;
    Ok(json!({ "a_star": [a_lo, a_hi], "eps_star": eps_star, "delta1_e1": r1.delta1, "delta1_e2": r2.delta1 }))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonmonoParams {
    /// `R = r_factor · R1`.
    pub r_factor: f64,
    pub tol: f64,
    pub r_one: Option<[f64; 2]>,
    /// Largest number of balls in the chain.
    pub n_max: u32,
    /// Satellite positions tried: `start, start + step, …` up to `x_max`.
    pub x_step: f64,
    pub x_max: f64,
}

impl Default for NonmonoParams {
    fn default() -> Self {
        NonmonoParams { r_factor: 1.1, tol: 0.01, r_one: None, n_max: 60, x_step: 1.0, x_max: 200.0 }
    }
}

fn nonmono_dh(run: &mut Run) -> Result<Value> {
    let p: NonmonoParams = params(&run.cfg.experiment.params)?;
    run.cfg.validate_solver(1)?;
    let cfg = run.cfg.solver.clone();
    let (_, o_hi, o_doc) = given_or(run, p.r_one, |r| ball_bracket(r, "r_one", 1, 1.0, 1.0, 8.0, p.tol, &cfg))?;
    let big_r = p.r_factor * o_hi;
    let ball = SetExpr::ball(1, Point::ORIGIN, big_r)?;
    let e = Point::x(1.0);
    let mut chain = Vec::new();
    let mut n0 = None;
    // Balls of radius R/n spaced by one are disjoint once n > 2R.
    for n in ((2.0 * big_r).floor() as u32 + 1)..=p.n_max {
        let set = families::o_n(1, n, big_r, e)?;
        let o = classify_all(run, &[set.clone()], &cfg)?.remove(0);
        chain.push(json!({ "n": n, "outcome": verdict_doc(&o) }));
        if o.verdict == Verdict::Extinction {
            n0 = Some((n, set, o));
            break;
        }
    }
    let setup = json!({ "params": p, "r_one": o_doc, "r": big_r });
    let Some((n0, on, on_out)) = n0 else {
        let c = run.check("chain_found", false, format!("no extinct chain up to n = {}", p.n_max));
        run.out.write_json("nonmono-dh.json", &json!({ "setup": setup, "chain": chain, "checks": [c] }))?;
        return Ok(Value::Null);
    };
    let rb = run.indices("ball", &ball)?;
    let ro = run.indices("chain", &on)?;
    // The big ball of the two-ball set is above the threshold by itself.
    let r_big = 0.5 * (o_hi + big_r);
    let r_small = big_r - r_big;
    let mut sat = Vec::new();
    let mut found = None;
    let mut x = r_big + r_small + p.x_step;
    while x <= p.x_max {
        let set = families::q_p(1, r_big, r_small, Point::x(x))?;
        let iv = set.intervals_1d().expect("one-dimensional");
        let closed = crate::commands::delta_h_closed_form_1d(&iv);
        if closed > ro.delta_h + 2.0 * ro.tolerance {
            let r = run.indices("two_balls", &set)?;
            let o = classify_all(run, &[set.clone()], &cfg)?.remove(0);
            sat.push(json!({ "x": x, "delta_h": r.delta_h, "outcome": verdict_doc(&o) }));
            if r.delta_h > ro.delta_h && o.verdict == Verdict::Invasion {
                found = Some((x, set, r, o));
                break;
            }
        }
        x += p.x_step;
    }
    let Some((xp, qp, rq, q_out)) = found else {
        let c = run.check("satellite_found", false, format!("no satellite position up to {} gave a larger δH with invasion", p.x_max));
        run.out.write_json("nonmono-dh.json", &json!({ "setup": setup, "chain": chain, "satellite": sat, "checks": [c] }))?;
        return Ok(Value::Null);
    };
    let b_out = classify_all(run, &[ball.clone()], &cfg)?.remove(0);
    run.record_verdict("ball", &b_out);
    run.record_verdict("chain", &on_out);
    run.record_verdict("two_balls", &q_out);
    let m = [ball.exact_measure(), on.exact_measure(), qp.exact_measure()];
    let checks = vec![
        run.check("ball_invasion", b_out.verdict == Verdict::Invasion, format!("{:?}", b_out.verdict)),
        run.check("chain_extinction", on_out.verdict == Verdict::Extinction, format!("{:?}", on_out.verdict)),
        run.check("two_balls_invasion", q_out.verdict == Verdict::Invasion, format!("{:?}", q_out.verdict)),
        run.check("ball_delta_h_zero", rb.delta_h <= rb.tolerance, format!("δH(B_R) = {} (tolerance {})", rb.delta_h, rb.tolerance)),
        run.check(
            "delta_h_order",
            rb.delta_h < ro.delta_h && ro.delta_h < rq.delta_h,
            format!("{} < {} < {}", fmt(rb.delta_h), fmt(ro.delta_h), fmt(rq.delta_h)),
        ),
        run.check(
            "equal_measure",
            m.iter().all(|v| v.map_or(false, |v| rel_diff(v, 2.0 * big_r) <= 1e-9)),
            format!("{m:?} vs {}", 2.0 * big_r),
        ),
    ];
    let doc = json!({
        "setup": setup,
        "ball": { "set": SetDoc::from_expr(&ball), "delta_h": rb.delta_h, "outcome": verdict_doc(&b_out) },
        "chain": { "n0": n0, "set": SetDoc::from_expr(&on), "delta_h": ro.delta_h, "outcome": verdict_doc(&on_out), "sweep": chain },
        "two_balls": { "x_p": xp, "r_big": r_big, "r_small": r_small, "set": SetDoc::from_expr(&qp), "delta_h": rq.delta_h, "outcome": verdict_doc(&q_out), "sweep": sat },
        "checks": checks,
    });
    run.out.write_json("nonmono-dh.json", &doc)?;
    Ok(json!({ "n0": n0, "x_p": xp, "delta_h": [rb.delta_h, ro.delta_h, rq.delta_h] }))
}
