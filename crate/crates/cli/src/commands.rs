//! The plain subcommands: indices, family, simulate, classify, threshold.

use crate::config::{FamilyChoice, SetSpec, SnapshotFormat};
use crate::corpus::corpus;
use crate::error::{CliError, Result};
use crate::exec::par_map;
use crate::run::{classifier, Run};
use crate::setdoc::SetDoc;
use fragrd_core::families::{self, FamilySpec};
use fragrd_core::geom::{self, delta1_oracle_1d, indices, rasterize, IndexReport};
use fragrd_core::solver::{self, init_field};
use fragrd_core::thresholds::{bisect, r_star, BisectOptions, MonotoneFamily};
use fragrd_core::SetExpr;
use serde_json::{json, Value};

/// `δ1 ≤ 4N 3^{N−1} δH` and `1 − δH ≤ 8√N (1 − δ1)^{1/N}`, each with
/// slack 0.02.
pub fn comparison_bounds(r: &IndexReport) -> (bool, bool) {
    let n = r.dim as f64;
    let gamma = 4.0 * n * 3f64.powi(r.dim as i32 - 1);
    let eta = 8.0 * n.sqrt();
    let first = r.delta1 <= gamma * r.delta_h + 0.02;
    let second = 1.0 - r.delta_h <= eta * (1.0 - r.delta1).max(0.0).powf(1.0 / n) + 0.02;
    (first, second)
}

/// `(ρ − R)/(ρ + R)` from the hull and total length of a union of intervals.
pub fn delta_h_closed_form_1d(iv: &[(f64, f64)]) -> f64 {
    let rho = (iv.last().map_or(0.0, |p| p.1) - iv.first().map_or(0.0, |p| p.0)) / 2.0;
    let r = iv.iter().map(|p| p.1 - p.0).sum::<f64>() / 2.0;
    (rho - r) / (rho + r)
}

pub fn cmd_indices(run: &mut Run) -> Result<Value> {
    if let Some(c) = run.cfg.corpus.clone() {
        if !(1..=2).contains(&c.dim) {
            return Err(CliError::config("corpus.dim must be 1 or 2"));
        }
        let sets = corpus(run.cfg.seed, c.dim, c.count);
        let opts = run.cfg.indices;
        let reports = par_map(run.cfg.workers, &sets, &|s: &SetExpr| indices(s, &opts));
        let mut rows = Vec::with_capacity(sets.len());
        let (mut v1, mut v2) = (0, 0);
        for (i, (s, r)) in sets.iter().zip(reports).enumerate() {
            let r = r?;
            let (a, b) = comparison_bounds(&r);
            v1 += usize::from(!a);
            v2 += usize::from(!b);
            let closed = s.intervals_1d().map(|iv| delta_h_closed_form_1d(&iv));
            let oracle = s.intervals_1d().map(|iv| delta1_oracle_1d(&iv)).transpose()?.map(|o| o.delta1);
            rows.push(json!({
                "id": i,
                "set": SetDoc::from_expr(s),
                "report": r,
                "delta_h_closed_form": closed,
                "delta1_oracle": oracle,
                "delta1_bound_holds": a,
                "delta_h_bound_holds": b,
            }));
        }
        run.out.write_json("corpus.json", &rows)?;
        let summary = json!({ "sets": sets.len(), "dim": c.dim, "seed": run.cfg.seed, "delta1_bound_violations": v1, "delta_h_bound_violations": v2 });
        return Ok(summary);
    }
    let set = run.cfg.build_set()?;
    let r = run.indices("set", &set)?;
    let mut doc = serde_json::to_value(r)?;
    if let Value::Object(m) = &mut doc {
        m.insert("exact_measure".into(), json!(set.exact_measure()));
        if let Some(iv) = set.intervals_1d() {
            m.insert("delta1_oracle".into(), json!(delta1_oracle_1d(&iv)?.delta1));
            m.insert("delta_h_closed_form".into(), json!(delta_h_closed_form_1d(&iv)));
        }
    }
    run.out.write_json("indices.json", &doc)?;
    Ok(json!({ "delta1": r.delta1, "delta_h": r.delta_h, "tolerance": r.tolerance }))
}

pub fn cmd_family(run: &mut Run) -> Result<Value> {
    let spec = run.cfg.set.clone().ok_or_else(|| CliError::config("family needs a `set` block"))?;
    let set = spec.build()?;
    let closed = match &spec {
        SetSpec::Family(f) => families::closed_form_measure(f),
        SetSpec::Expr(_) => None,
    };
    let r = run.indices("set", &set)?;
    let raster = rasterize(&set, r.h, geom::default_supersampling(set.dim()))?;
    let est = raster.measure_estimate();
    run.out.write_bytes("set.grid", &crate::io::grid_dump(raster.grid(), None, raster.coverage()))?;
    run.out.write_json("set.json", &SetDoc::from_expr(&set))?;
    run.out.write_json("indices.json", &r)?;
    let doc = json!({
        "spec": spec,
        "primitives": set.node_count(),
        "exact_measure": set.exact_measure(),
        "closed_form_measure": closed,
        "raster_measure": est.value,
        "raster_measure_error": est.error_bound,
    });
    run.out.write_json("family.json", &doc)?;
    Ok(doc)
}

fn snapshot_times(run: &Run) -> Vec<f64> {
    if !run.cfg.solver.snapshot_times.is_empty() {
        return run.cfg.solver.snapshot_times.clone();
    }
    let step = 10.0 * run.cfg.solver.diagnostic_interval;
    let n = (run.cfg.solver.t_max / step).floor() as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

pub fn cmd_simulate(run: &mut Run) -> Result<Value> {
    let set = run.cfg.build_set()?;
    let mut cfg = run.cfg.solver.clone();
    cfg.snapshot_times = snapshot_times(run);
    let field = init_field(&set, run.cfg.amplitude, &run.reaction, &cfg)?;
    let (outcome, traj) = solver::simulate(field, &run.reaction, &cfg)?;
    run.record_verdict("set", &outcome);
    let binary = match run.cfg.output.snapshots {
        SnapshotFormat::Auto => set.dim() >= 2,
        SnapshotFormat::Csv => false,
        SnapshotFormat::Binary => true,
    };
    let snap_file = if binary {
        run.out.write_dump_series("snapshot", &traj.grid, &traj.snapshots)?;
        "snapshot_index.csv"
    } else {
        run.out.write_csv_snapshots("snapshots.csv", &traj.grid, &traj.snapshots)?;
        "snapshots.csv"
    };
    let doc = json!({
        "reaction": run.reaction.spec(),
        "initial_set": SetDoc::from_expr(&set),
        "amplitude": run.cfg.amplitude,
        "grid": { "dim": traj.grid.dim, "h": traj.grid.h, "origin": traj.grid.origin(), "n": &traj.grid.n[..traj.grid.dim] },
        "snapshots": snap_file,
        "outcome": outcome,
    });
    run.out.write_json("outcome.json", &doc)?;
    Ok(json!({ "verdict": outcome.verdict, "certificate_time": outcome.certificate_time }))
}

pub fn cmd_classify(run: &mut Run) -> Result<Value> {
    let set = run.cfg.build_set()?;
    let outcome = solver::classify(&set, run.cfg.amplitude, &run.reaction, &run.cfg.solver)?;
    run.record_verdict("set", &outcome);
    let doc = json!({
        "reaction": run.reaction.spec(),
        "initial_set": SetDoc::from_expr(&set),
        "amplitude": run.cfg.amplitude,
        "outcome": outcome,
    });
    run.out.write_json("outcome.json", &doc)?;
    Ok(json!({ "verdict": outcome.verdict, "certificate_time": outcome.certificate_time }))
}

pub fn cmd_threshold(run: &mut Run) -> Result<Value> {
    let tb = run.cfg.threshold.clone().ok_or_else(|| CliError::config("threshold needs a `threshold` block"))?;
    let opts = BisectOptions { tol: tb.tol, max_widen: tb.max_widen, max_probes: tb.max_probes, fanout: tb.fanout };
    let dim = match &tb.family {
        FamilyChoice::Ball { dim, .. } | FamilyChoice::Cube { dim } | FamilyChoice::CubeBall { dim, .. } | FamilyChoice::RStar { dim, .. } => *dim,
        FamilyChoice::Amplitude { set } | FamilyChoice::Dilation { set, .. } => set.build()?.dim(),
    };
    run.cfg.validate_solver(dim)?;
    let solver_cfg = run.cfg.solver.clone();
    let f = run.reaction.clone();
    let c = classifier(&f, &solver_cfg);
    let exec = run.executor();
    let bracket = match &tb.family {
        FamilyChoice::RStar { dim, epsilon, a_star } => r_star(*dim, *epsilon, *a_star, tb.lo, &c, &opts, &exec)?,
        choice => {
            let fam = match choice {
                FamilyChoice::Ball { dim, amplitude, center } => MonotoneFamily::ball(*dim, *center, *amplitude, tb.lo, tb.hi)?,
                FamilyChoice::Amplitude { set } => MonotoneFamily::amplitude(set.build()?, tb.lo, tb.hi)?,
                FamilyChoice::Dilation { set, about } => MonotoneFamily::dilation(set.build()?, *about, tb.lo, tb.hi)?,
                FamilyChoice::Cube { dim } => MonotoneFamily::cube(*dim, tb.lo, tb.hi)?,
                FamilyChoice::CubeBall { dim, side } => MonotoneFamily::cube_ball(*dim, *side, tb.lo, tb.hi)?,
                FamilyChoice::RStar { .. } => unreachable!(),
            };
            if tb.spot_check > 0 {
                fam.spot_check(tb.spot_check, solver_cfg.h)?;
            }
            bisect(&fam, &c, &opts, &exec)?
        }
    };
    run.record_bracket("threshold", &bracket);
    let doc = json!({ "family": tb.family, "options": opts, "bracket": bracket });
    run.out.write_json("bracket.json", &doc)?;
    Ok(json!({ "lo": bracket.lo, "hi": bracket.hi, "status": bracket.status }))
}

/// Named family member built from a spec, for recipes.
pub fn build(spec: FamilySpec) -> Result<SetExpr> {
    Ok(families::build(&spec)?)
}
