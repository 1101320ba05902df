//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line
//! straight to stdout (past the test harness capture) and then asserts.
//! Tests hold a global lock so the wall-clock budgets are measured on an
//! otherwise idle process.

use fragrd::corpus::corpus;
use fragrd::{execute, Invocation, Task};
use fragrd_core::families::{self, FamilySpec};
use fragrd_core::geom::{delta1_oracle_1d, indices, IndexOptions};
use fragrd_core::solver::*;
use fragrd_core::thresholds::*;
use fragrd_core::{BistableReaction, Point, SetExpr};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use std::io::Write;
use std::sync::{Mutex, MutexGuard};
use std::time::Instant;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let line = format!("criterion {n:>2} [{name}]: {} | {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn cubic() -> BistableReaction {
    BistableReaction::cubic(0.4).unwrap()
}

fn ball_threshold(f: &BistableReaction, cfg: &SolverConfig, dim: usize, alpha: f64, lo: f64, hi: f64, tol: f64) -> ThresholdBracket {
    let c = |d: &InitialData| classify(&d.set, d.amplitude, f, cfg);
    let fam = MonotoneFamily::ball(dim, Point::ORIGIN, alpha, lo, hi).unwrap();
    bisect(&fam, &c, &BisectOptions { tol, ..Default::default() }, &Sequential).unwrap()
}

/// Planar runs: coarse grid, long horizon for near-threshold data.
fn planar() -> SolverConfig {
    SolverConfig { h: 0.2, t_max: 200.0, ..Default::default() }
}

fn reproduce(recipe: &str) -> (Value, f64) {
    let dir = tempfile::tempdir().unwrap();
    let inv = Invocation { out: Some(dir.path().to_path_buf()), ..Default::default() };
    let t0 = Instant::now();
    let result = execute(&Task::Reproduce(recipe.into()), &inv);
    let secs = t0.elapsed().as_secs_f64();
    let text = std::fs::read_to_string(dir.path().join(format!("{recipe}.json"))).unwrap_or_else(|_| "null".into());
    let mut doc: Value = serde_json::from_str(&text).unwrap();
    if let Err(e) = result {
        doc["error"] = Value::String(e.to_string());
    }
    (doc, secs)
}

fn failed_checks(doc: &Value) -> Vec<String> {
    let mut out: Vec<String> = doc["checks"]
        .as_array()
        .map(|a| a.iter().filter(|c| c["pass"] != true).map(|c| format!("{} ({})", c["check"], c["detail"])).collect())
        .unwrap_or_else(|| vec!["no checks recorded".into()]);
    if let Some(e) = doc.get("error") {
        out.push(e.to_string());
    }
    out
}

#[test]
fn criterion_01_ball_indices_vanish() {
    let _g = serial();
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for dim in [1, 2] {
        for r in [0.5, 1.0, 3.0] {
            let rep = indices(&SetExpr::ball(dim, Point::ORIGIN, r).unwrap(), &IndexOptions::default()).unwrap();
            worst = worst.max(rep.delta1).max(rep.delta_h);
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = worst <= 0.02 && secs < 10.0;
    report(1, "index exactness", pass, &format!("max index over 6 balls {worst:.3e} (≤ 0.02), {secs:.2} s (< 10 s)"));
    assert!(pass);
}

#[test]
fn criterion_02_one_dimensional_closed_form() {
    let _g = serial();
    let mut worst_h: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for set in corpus(2, 1, 100) {
        let iv = set.intervals_1d().unwrap();
        let rep = indices(&set, &IndexOptions::default()).unwrap();
        let closed = fragrd::commands::delta_h_closed_form_1d(&iv);
        worst_h = worst_h.max((rep.delta_h - closed).abs());
        let oracle = delta1_oracle_1d(&iv).unwrap();
        let tol = 3.0 * rep.h / oracle.measure;
        worst_ratio = worst_ratio.max((rep.delta1 - oracle.delta1).abs() / tol);
    }
    let pass = worst_h <= 1e-3 && worst_ratio <= 1.0;
    report(
        2,
        "1-D closed form",
        pass,
        &format!("max |δH − (ρ−R)/(ρ+R)| = {worst_h:.2e} (≤ 1e-3); max |δ1 − oracle| / (3h/λ) = {worst_ratio:.3} (≤ 1)"),
    );
    assert!(pass);
}

#[test]
fn criterion_03_comparison_constants_on_corpus() {
    let _g = serial();
    let t0 = Instant::now();
    let mut violations = Vec::new();
    let mut count = 0;
    for dim in [1usize, 2] {
        let n = dim as f64;
        let gamma = 4.0 * n * 3f64.powi(dim as i32 - 1);
        let eta = 8.0 * n.sqrt();
        for (i, set) in corpus(3, dim, 200).iter().enumerate() {
            let rep = indices(set, &IndexOptions::default()).unwrap();
            count += 1;
            if rep.delta1 > gamma * rep.delta_h + 0.02 {
                violations.push(format!("N={dim} #{i}: δ1 {} vs {gamma}·δH {}", rep.delta1, rep.delta_h));
            }
            if 1.0 - rep.delta_h > eta * (1.0 - rep.delta1).max(0.0).powf(1.0 / n) + 0.02 {
                violations.push(format!("N={dim} #{i}: 1−δH {} vs {eta}(1−δ1)^(1/N)", 1.0 - rep.delta_h));
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = violations.is_empty() && secs < 300.0;
    report(3, "comparison constants", pass, &format!("{count} sets, {} violations, {secs:.1} s (< 300 s) {violations:?}", violations.len()));
    assert!(pass);
}

#[test]
fn criterion_04_family_limits() {
    let _g = serial();
    let opts = IndexOptions::default();
    let nu = 0.5;
    let f32 = indices(&families::f_n(2, 32, nu).unwrap(), &opts).unwrap();
    let g64 = indices(&families::g_n(2, 64, Point::ORIGIN, Point::xy(1.0, 0.0)).unwrap(), &opts).unwrap();
    let e16 = indices(&families::e_n(1, 16).unwrap(), &opts).unwrap();
    let parts = [
        ("δ1(F32) − (1−ν²)", (f32.delta1 - (1.0 - nu * nu)).abs() <= 0.05, f32.delta1),
        ("δH(F32) − (1−ν)/(1+ν)", (f32.delta_h - (1.0 - nu) / (1.0 + nu)).abs() <= 0.05, f32.delta_h),
        ("δ1(G64) − 1/2", (g64.delta1 - 0.5).abs() <= 0.05, g64.delta1),
        ("δ1(E16) ≥ 0.9", e16.delta1 >= 0.9, e16.delta1),
    ];
    let pass = parts.iter().all(|p| p.1);
    let detail: Vec<String> = parts.iter().map(|(n, ok, v)| format!("{n}: {} (value {v:.4})", if *ok { "ok" } else { "FAILS" })).collect();
    report(4, "family limits", pass, &format!("{}; exact δ1(E16) = 1 − 2/15 = {:.4}", detail.join("; "), 1.0 - 2.0 / 15.0));
    assert!(pass, "{detail:?}");
}

#[test]
fn criterion_05_fig1() {
    let _g = serial();
    let (doc, secs) = reproduce("fig1");
    let v1 = doc["e1"]["outcome"]["verdict"].clone();
    let v2 = doc["e2"]["outcome"]["verdict"].clone();
    let d1 = doc["e2"]["delta1"].as_f64().unwrap_or(f64::NAN);
    let verdicts = v1 == "extinction" && v2 == "invasion";
    let index = (d1 - 3.0 / 13.0).abs() <= 0.03;
    let pass = verdicts && index && secs < 180.0;
    report(
        5,
        "Fig. 1 reproduction",
        pass,
        &format!("verdicts ({v1}, {v2}), δ1(E2) = {d1:.4} vs 3/13 ± 0.03, {secs:.2} s (< 180 s)"),
    );
    assert!(pass, "{:?}", failed_checks(&doc));
}

#[test]
fn criterion_06_front_speed() {
    let _g = serial();
    let mut detail = Vec::new();
    let mut pass = true;
    for (theta, exact) in [(0.4, 0.141421), (0.25, 0.353553)] {
        let f = BistableReaction::cubic(theta).unwrap();
        let cfg = SolverConfig { h: 0.02, t_max: 80.0, stop_on_verdict: false, ..Default::default() };
        let field = init_field(&SetExpr::interval(-5.0, 5.0).unwrap(), 1.0, &f, &cfg).unwrap();
        let (o, _) = run(field, &f, &cfg, &mut |_| {}).unwrap();
        let c = front_speed(&o.front_history, 0.25).unwrap();
        let shoot = f.shooting_front_speed().unwrap();
        let ok = o.verdict == Verdict::Invasion && (c - exact).abs() <= 0.05 * exact && (shoot - exact).abs() <= 1e-3 * exact;
        pass &= ok;
        detail.push(format!("θ={theta}: fitted {c:.5}, shooting {shoot:.6}, exact {exact}"));
    }
    report(6, "front speed", pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_07_thresholds() {
    let _g = serial();
    let f = cubic();
    let tol = 5e-3;
    let coarse = ball_threshold(&f, &SolverConfig { h: 0.02, ..Default::default() }, 1, 1.0, 1.5, 4.0, tol);
    let fine = ball_threshold(&f, &SolverConfig { h: 0.01, ..Default::default() }, 1, 1.0, 1.5, 4.0, tol);
    let grid_ok = (coarse.midpoint() - fine.midpoint()).abs() <= 0.02 * fine.midpoint();

    let cfg = SolverConfig::default();
    let ra: Vec<ThresholdBracket> = [0.8, 0.9, 1.0].iter().map(|&a| ball_threshold(&f, &cfg, 1, a, 1.5, 5.0, 1e-2)).collect();
    let alpha_ok = ra.windows(2).all(|w| w[0].lo >= w[1].lo - 1e-2);

    let pc = planar();
    let c = |d: &InitialData| classify(&d.set, d.amplitude, &f, &pc);
    let opts = BisectOptions { tol: 0.04, ..Default::default() };
    let r1 = bisect(&MonotoneFamily::ball(2, Point::ORIGIN, 1.0, 5.0, 10.0).unwrap(), &c, &opts, &Sequential).unwrap();
    let a = bisect(&MonotoneFamily::cube(2, 8.0, 16.0).unwrap(), &c, &opts, &Sequential).unwrap();
    let sandwich_ok = a.lo >= 2.0 * r1.hi / 2f64.sqrt() && a.hi <= 2.0 * r1.lo;

    let eps = [4.0, 0.4, 0.2, 0.1];
    let rs: Vec<ThresholdBracket> = eps.iter().map(|&e| r_star(2, e, a.hi, r1.lo - 1.0, &c, &opts, &Sequential).unwrap()).collect();
    let mono_ok = rs.windows(2).all(|w| w[0].lo <= w[1].hi + opts.tol);
    let contains_ok = rs[0].lo <= r1.hi && r1.lo <= rs[0].hi;

    let pass = grid_ok && alpha_ok && sandwich_ok && mono_ok && contains_ok;
    let rs_txt: Vec<String> = eps.iter().zip(&rs).map(|(e, b)| format!("ε={e}: [{:.3}, {:.3}]", b.lo, b.hi)).collect();
    report(
        7,
        "thresholds",
        pass,
        &format!(
            "R1(h=0.02) [{:.4}, {:.4}] vs R1(h=0.01) [{:.4}, {:.4}] {}; R_α lo at α=0.8,0.9,1: {:.3}, {:.3}, {:.3} {}; \
             planar R1 [{:.3}, {:.3}], a* [{:.3}, {:.3}] in [{:.3}, {:.3}] {}; r*: {} nonincreasing {} contains R1 {}",
            coarse.lo, coarse.hi, fine.lo, fine.hi, grid_ok, ra[0].lo, ra[1].lo, ra[2].lo, alpha_ok,
            r1.lo, r1.hi, a.lo, a.hi, 2.0 * r1.hi / 2f64.sqrt(), 2.0 * r1.lo, sandwich_ok,
            rs_txt.join(", "), mono_ok, contains_ok
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_08_two_interval_extinction() {
    let _g = serial();
    let f = cubic();
    let cfg = SolverConfig::default();
    let r1 = ball_threshold(&f, &cfg, 1, 1.0, 1.5, 4.0, 1e-2);
    let r = 1.1 * r1.hi;
    let near = classify(&families::d_a(0.01, r).unwrap(), 1.0, &f, &cfg).unwrap();
    let far = classify(&families::d_a(10.0, r).unwrap(), 1.0, &f, &cfg).unwrap();
    let pass = near.verdict == Verdict::Invasion && far.verdict == Verdict::Extinction && 2.0 * r > 2.0 * r1.hi;
    report(
        8,
        "D_a phenomenon",
        pass,
        &format!("r = {r:.4}: a=0.01 → {:?}, a=10 → {:?}; λ(D_a) = {:.4} > λ(B_R1) ≤ {:.4}", near.verdict, far.verdict, 2.0 * r, 2.0 * r1.hi),
    );
    assert!(pass);
}

#[test]
fn criterion_09_equimeasurable_pairs() {
    let _g = serial();
    let (homog, s1) = reproduce("thm1-homog");
    let (cube, s2) = reproduce("thm1-cubeball");
    let mut bad = failed_checks(&homog);
    bad.extend(failed_checks(&cube));
    let secs = s1 + s2;
    let pass = bad.is_empty() && secs < 900.0;
    let summary = |d: &Value| {
        format!(
            "δ1 {:.4} > {:.4}, verdicts ({}, {}), triple F δ1 {}",
            d["e1"]["delta1"].as_f64().unwrap_or(f64::NAN),
            d["e2"]["delta1"].as_f64().unwrap_or(f64::NAN),
            d["e1"]["outcome"]["verdict"],
            d["e2"]["outcome"]["verdict"],
            d["triple"]["tried"].as_array().and_then(|a| a.last()).map_or("none".into(), |t| t["delta1"].to_string()),
        )
    };
    report(
        9,
        "equimeasurable pairs",
        pass,
        &format!("homogenization: {} ({s1:.1} s); cube-ball: {} ({s2:.1} s); total {secs:.1} s (< 900 s) {bad:?}", summary(&homog), summary(&cube)),
    );
    assert!(pass, "{bad:?}");
}

#[test]
fn criterion_10_hausdorff_non_monotone() {
    let _g = serial();
    let (doc, secs) = reproduce("nonmono-dh");
    let bad = failed_checks(&doc);
    let pass = bad.is_empty();
    report(
        10,
        "δH non-monotonicity",
        pass,
        &format!(
            "verdicts ({}, {}, {}), δH {} < {} < {}, n0 = {}, x_p = {}, {secs:.1} s {bad:?}",
            doc["ball"]["outcome"]["verdict"],
            doc["chain"]["outcome"]["verdict"],
            doc["two_balls"]["outcome"]["verdict"],
            doc["ball"]["delta_h"],
            doc["chain"]["delta_h"],
            doc["two_balls"]["delta_h"],
            doc["chain"]["n0"],
            doc["two_balls"]["x_p"],
        ),
    );
    assert!(pass, "{bad:?}");
}

/// Explicit runs against `u* = 1/2 + 1/4 e^{−t} Π cos(π x_k / 4)` with the
/// matching forcing; max error at `t = 0.5`.
fn manufactured_error(dim: usize, n: usize) -> f64 {
    let f = cubic();
    let l = 4.0;
    let pi = std::f64::consts::PI;
    let shape = move |p: &Point| (0..dim).map(|k| (pi * p.0[k] / l).cos()).product::<f64>();
    let exact = move |t: f64, p: &Point| 0.5 + 0.25 * (-t).exp() * shape(p);
    let fr = f.clone();
    let forcing = move |t: f64, p: &Point| {
        let s = 0.25 * (-t).exp() * shape(p);
        -s + dim as f64 * (pi / l).powi(2) * s - fr.rate(exact(t, p))
    };
    let g = box_grid(dim, 0.0, l, n).unwrap();
    let steps = (0.5 / (0.4 * g.h * g.h / (2.0 * dim as f64))).ceil() as usize;
    let dt = 0.5 / steps as f64;
    let u0 = (0..g.len()).map(|i| exact(0.0, &g.center(g.unindex(i)))).collect();
    let mut field = Field::new(g, u0, 0.0).unwrap();
    let mut st = Stepper::new(g, Scheme::Explicit, dt, &f).unwrap().with_forcing(&forcing);
    for _ in 0..steps {
        st.step(&mut field).unwrap();
    }
    (0..g.len()).map(|i| (field.u[i] - exact(field.t, &g.center(g.unindex(i)))).abs()).fold(0.0, f64::max)
}

#[test]
fn criterion_11_solver_invariants() {
    let _g = serial();
    let f = cubic();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut notes = Vec::new();

    // Range: random data in [0, 1] under every scheme.
    let mut range_worst: f64 = 0.0;
    for dim in [1, 2] {
        for scheme in [Scheme::Explicit, Scheme::SemiImplicit] {
            let g = box_grid(dim, -5.0, 5.0, if dim == 1 { 200 } else { 50 }).unwrap();
            let cfg = SolverConfig { h: g.h, scheme, ..Default::default() };
            let u = (0..g.len()).map(|_| if rng.gen_bool(0.3) { 1.0 } else { rng.gen_range(0.0..1.0) }).collect();
            let mut field = Field::new(g, u, 0.0).unwrap();
            let mut st = Stepper::from_config(g, &cfg, &f).unwrap();
            for _ in 0..200 {
                st.step(&mut field).unwrap();
                range_worst = range_worst.max(-field.inf()).max(field.sup() - 1.0);
            }
        }
    }
    let range_ok = range_worst <= 1e-12;
    notes.push(format!("range excess {range_worst:.1e}"));

    let mut drift_worst: f64 = 0.0;
    for dim in [1, 2] {
        let g = box_grid(dim, -4.0, 4.0, if dim == 1 { 400 } else { 80 }).unwrap();
        let set = SetExpr::union(vec![
            SetExpr::ball(dim, Point::splat(dim, -1.0), 0.8).unwrap(),
            SetExpr::ball(dim, Point::splat(dim, 1.5), 0.5).unwrap(),
        ])
        .unwrap();
        let cfg = SolverConfig { h: g.h, ..Default::default() };
        let mut field = init_field_on(&set, 1.0, &g, &cfg).unwrap();
        let m0 = field.mass();
        let mut st = Stepper::new(g, Scheme::SemiImplicit, 0.05, &NoReaction).unwrap();
        for _ in 0..1000 {
            st.step(&mut field).unwrap();
        }
        drift_worst = drift_worst.max((field.mass() - m0).abs() / m0);
    }
    let drift_ok = drift_worst <= 1e-10;
    notes.push(format!("heat-mode mass drift {drift_worst:.1e}"));

    let g = box_grid(2, -12.0, 12.0, 120).unwrap();
    let cfg = SolverConfig { h: g.h, ..Default::default() };
    let mut field = init_field_on(&SetExpr::ball(2, Point::ORIGIN, 7.0).unwrap(), 1.0, &g, &cfg).unwrap();
    let mut st = Stepper::from_config(g, &cfg, &f).unwrap();
    let n = g.n[0];
    let mut asym: f64 = 0.0;
    for _ in 0..60 {
        st.step(&mut field).unwrap();
        for j in 0..n {
            for i in 0..n {
                let u = field.u[g.index(i, j, 0)];
                asym = asym.max((u - field.u[g.index(n - 1 - i, j, 0)]).abs()).max((u - field.u[g.index(i, n - 1 - j, 0)]).abs());
            }
        }
    }
    let sym_ok = asym <= 1e-12;
    notes.push(format!("reflection asymmetry {asym:.1e}"));

    let mut pairs = 0;
    let mut max_excess = f64::NEG_INFINITY;
    let mut order_ok = true;
    for (dim, h) in [(1, 0.02), (2, 0.2)] {
        let cfg = SolverConfig { h, t_max: 10.0, domain_margin: Some(15.0), ..Default::default() };
        for _ in 0..20 {
            let r_small = rng.gen_range(0.5..4.0);
            let r_big = r_small + rng.gen_range(0.0..2.0);
            let (a_small, a_big) = {
                let a = rng.gen_range(0.3..1.0);
                (a * rng.gen_range(0.5..1.0), a)
            };
            let c = Point::splat(dim, rng.gen_range(-0.5..0.5));
            let small = SetExpr::ball(dim, c, r_small).unwrap();
            let big = SetExpr::union(vec![SetExpr::ball(dim, c, r_big).unwrap(), SetExpr::ball(dim, Point::splat(dim, 3.0), 0.7).unwrap()]).unwrap();
            let grid = domain_grid(&big, &f, &cfg).unwrap();
            let a = init_field_on(&small, a_small, &grid, &cfg).unwrap();
            let b = init_field_on(&big, a_big, &grid, &cfg).unwrap();
            match compare_runs(a, b, &f, &cfg) {
                Ok(cmp) => max_excess = max_excess.max(cmp.max_excess),
                Err(e) => {
                    order_ok = false;
                    notes.push(format!("ordering: {e}"));
                }
            }
            pairs += 1;
        }
    }
    notes.push(format!("{pairs} ordered pairs, max excess {max_excess:.1e}"));

    let mut ratios = Vec::new();
    for dim in [1, 2] {
        ratios.push(manufactured_error(dim, 32) / manufactured_error(dim, 64));
    }
    let mms_ok = ratios.iter().all(|r| (3.3..=4.7).contains(r));
    notes.push(format!("manufactured-solution ratios {ratios:.3?}"));

    let pass = range_ok && drift_ok && sym_ok && order_ok && mms_ok;
    report(11, "solver invariants", pass, &notes.join("; "));
    assert!(pass);
}

/// `E` with a random piece of measure at most 1% of `λ(E)` added, removed
/// or shifted.
fn perturb(e: &SetExpr, rng: &mut impl Rng) -> SetExpr {
    let iv = e.intervals_1d().unwrap();
    let (lo, hi) = (iv[0].0, iv.last().unwrap().1);
    let m = e.exact_measure().unwrap();
    let w = rng.gen_range(0.1..1.0) * 0.01 * m;
    match rng.gen_range(0..3) {
        0 => {
            let x = rng.gen_range(lo - 3.0..hi + 3.0);
            SetExpr::union(vec![e.clone(), SetExpr::interval(x, x + w).unwrap()]).unwrap()
        }
        1 => {
            let x = rng.gen_range(lo..hi - w);
            SetExpr::diff(e.clone(), SetExpr::interval(x, x + w).unwrap()).unwrap()
        }
        _ => e.translate(Point::x(0.5 * w)),
    }
}

fn symmetric_difference(a: &SetExpr, b: &SetExpr) -> f64 {
    SetExpr::diff(a.clone(), b.clone()).unwrap().exact_measure().unwrap() + SetExpr::diff(b.clone(), a.clone()).unwrap().exact_measure().unwrap()
}

#[test]
fn criterion_12_verdicts_survive_small_perturbations() {
    let _g = serial();
    let f = cubic();
    let cfg = SolverConfig::default();
    let r1 = ball_threshold(&f, &cfg, 1, 1.0, 1.5, 4.0, 1e-2);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, half, expect) in [("invading", 1.3 * r1.hi, Verdict::Invasion), ("extinct", 0.7 * r1.lo, Verdict::Extinction)] {
        let e = SetExpr::interval(-half, half).unwrap();
        let base = classify(&e, 1.0, &f, &cfg).unwrap().verdict;
        let mut kept = 0;
        let mut worst_d1: f64 = 0.0;
        for _ in 0..10 {
            let p = perturb(&e, &mut rng);
            let d1 = symmetric_difference(&e, &p) / e.exact_measure().unwrap();
            worst_d1 = worst_d1.max(d1);
            if d1 <= 0.01 && classify(&p, 1.0, &f, &cfg).unwrap().verdict == expect {
                kept += 1;
            }
        }
        pass &= base == expect && kept == 10;
        notes.push(format!("{name} (half-length {half:.3}, {base:?}): {kept}/10 kept, max d1/λ {worst_d1:.4}"));
    }
    report(12, "robustness", pass, &notes.join("; "));
    assert!(pass);
}

#[test]
fn family_spec_dump_matches_closed_form() {
    let spec = FamilySpec::Fn { dim: 2, n: 16, nu: 0.5 };
    let m = families::closed_form_measure(&spec).unwrap();
    let e = families::build(&spec).unwrap();
    assert!((e.exact_measure().unwrap() - m).abs() <= 1e-9 * m);
}
