use fragrd::config::RunConfig;
use fragrd::io::{read_grid_dump, verify_inventory, Manifest};
use serde_json::{json, Value};
use std::path::Path;
use std::process::{Command, Output};

fn fragrd(dir: &Path, args: &[&str], config: Option<Value>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fragrd"));
    cmd.args(args).arg("--out").arg(dir.join("out"));
    if let Some(c) = config {
        let p = dir.join("config.json");
        std::fs::write(&p, serde_json::to_string_pretty(&c).unwrap()).unwrap();
        cmd.arg("--config").arg(p);
    }
    cmd.output().unwrap()
}

fn read(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out").join(name)).unwrap()).unwrap()
}

fn manifest(dir: &Path) -> Manifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/manifest.json")).unwrap()).unwrap()
}

fn interval(a: f64, b: f64) -> Value {
    json!({ "family": { "family": "interval", "a": a, "b": b } })
}

#[test]
fn unknown_keys_and_bad_overrides_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let o = fragrd(d.path(), &["classify"], Some(json!({ "solver": { "hh": 0.1 } })));
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let o = fragrd(d.path(), &["classify", "--override", "amplitude.x=1"], Some(json!({ "set": interval(-1.0, 1.0) })));
    assert_eq!(o.status.code(), Some(2));
    let o = fragrd(d.path(), &["classify"], None);
    assert_eq!(o.status.code(), Some(2), "missing set block");
    let o = fragrd(d.path(), &["classify", "--override", "solver.dt=5"], Some(json!({ "set": interval(-1.0, 1.0) })));
    assert_eq!(o.status.code(), Some(2), "dt above the monotonicity bound");
}

#[test]
fn domain_contamination_exits_3() {
    let d = tempfile::tempdir().unwrap();
    let cfg = json!({
        "set": interval(-4.0, 4.0),
        "solver": { "domain_margin": 40.0, "certificate": { "boundary_margin": 30.0, "growth_window": 1000 } },
    });
    let o = fragrd(d.path(), &["classify"], Some(cfg));
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(d.path());
    assert_eq!(m.summary["exit_code"], 3);
}

#[test]
fn failed_recipe_check_exits_4_with_outputs() {
    let d = tempfile::tempdir().unwrap();
    let o = fragrd(d.path(), &["reproduce", "fig1", "--override", "experiment.params.delta1_oracle=0.5"], None);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("e2_delta1"));
    let m = manifest(d.path());
    assert!(verify_inventory(&d.path().join("out"), &m).is_empty());
    assert!(m.files.iter().any(|f| f.path == "fig1_e2.csv"));
}

#[test]
fn tiny_interval_is_extinct_without_simulation() {
    let d = tempfile::tempdir().unwrap();
    let o = fragrd(d.path(), &["classify"], Some(json!({ "set": interval(0.0, 0.05) })));
    assert!(o.status.success());
    let doc = read(d.path(), "outcome.json");
    assert_eq!(doc["outcome"]["verdict"], "extinction");
    assert_eq!(doc["outcome"]["certificate"]["kind"], "small_mass");
}

#[test]
fn threshold_documents_are_deterministic() {
    let cfg = json!({
        "solver": { "h": 0.04 },
        "threshold": { "family": { "kind": "ball", "dim": 1 }, "lo": 1.5, "hi": 4.0, "tol": 0.02, "fanout": 2 },
    });
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(fragrd(a.path(), &["threshold", "--workers", "1"], Some(cfg.clone())).status.success());
    assert!(fragrd(b.path(), &["threshold", "--workers", "3"], Some(cfg)).status.success());
    let ba = std::fs::read(a.path().join("out/bracket.json")).unwrap();
    let bb = std::fs::read(b.path().join("out/bracket.json")).unwrap();
    assert_eq!(ba, bb);
    let doc = read(a.path(), "bracket.json");
    let (lo, hi) = (doc["bracket"]["lo"].as_f64().unwrap(), doc["bracket"]["hi"].as_f64().unwrap());
    assert!(lo < 2.3 && 2.25 < hi && hi - lo <= 0.02);
    assert!(doc["bracket"]["probes"].as_array().unwrap().iter().all(|p| p["verdict"].is_string()));
}

#[test]
fn manifest_hash_round_trips_and_lists_every_file() {
    let d = tempfile::tempdir().unwrap();
    let cfg = json!({ "set": interval(-4.0, 4.0), "solver": { "t_max": 20.0, "snapshot_times": [0.0, 5.0, 10.0] } });
    let o = fragrd(d.path(), &["simulate", "--seed", "9"], Some(cfg));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(d.path());
    let back: RunConfig = serde_json::from_value(m.config.clone()).unwrap();
    assert_eq!(back.hash(), m.config_hash);
    assert_eq!(back.seed, 9);
    let mut on_disk: Vec<String> = std::fs::read_dir(d.path().join("out"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    on_disk.sort();
    let listed: Vec<String> = m.files.iter().map(|f| f.path.clone()).collect();
    assert_eq!(on_disk, listed);
    assert!(verify_inventory(&d.path().join("out"), &m).is_empty());
    let csv = std::fs::read_to_string(d.path().join("out/snapshots.csv")).unwrap();
    assert!(csv.starts_with("t,x,u\n"));
    let rows_at = |t: &str| csv.lines().filter(|l| l.starts_with(t)).count();
    assert!(rows_at("0.0000000000000000e0,") > 0);
    assert_eq!(rows_at("5.0000000000000000e0,"), rows_at("0.0000000000000000e0,"));
}

#[test]
fn planar_simulation_writes_grid_dumps() {
    let d = tempfile::tempdir().unwrap();
    let cfg = json!({
        "set": { "expr": { "dim": 2, "node": { "type": "ball", "center": [0.0, 0.0], "radius": 2.0 } } },
        "solver": { "h": 0.25, "t_max": 2.0, "snapshot_times": [0.0, 1.0, 2.0] },
    });
    let o = fragrd(d.path(), &["simulate"], Some(cfg));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let index = std::fs::read_to_string(d.path().join("out/snapshot_index.csv")).unwrap();
    assert_eq!(index.lines().count(), 4);
    let (hdr, data) = read_grid_dump(&std::fs::read(d.path().join("out/snapshot_0001.grid")).unwrap()).unwrap();
    assert_eq!(hdr.dim, 2);
    assert_eq!(hdr.t, Some(1.0));
    assert_eq!(data.len(), hdr.n[0] * hdr.n[1]);
    assert!(data.iter().all(|u| (0.0..=1.0).contains(u)));
}

#[test]
fn index_examples() {
    let d = tempfile::tempdir().unwrap();
    let ball = json!({ "set": { "expr": { "dim": 2, "node": { "type": "ball", "center": [1.0, -2.0], "radius": 1.5 } } } });
    assert!(fragrd(d.path(), &["indices"], Some(ball)).status.success());
    let r = read(d.path(), "indices.json");
    assert!(r["delta1"].as_f64().unwrap() <= 0.02 && r["delta_h"].as_f64().unwrap() <= 0.02);

    let shell = json!({ "set": { "family": { "family": "shell", "dim": 2, "a": 1.0 } } });
    assert!(fragrd(d.path(), &["indices"], Some(shell)).status.success());
    let r = read(d.path(), "indices.json");
    assert!((r["delta_h"].as_f64().unwrap() - (2f64.sqrt() - 1.0)).abs() <= r["tolerance"].as_f64().unwrap());

    let comb = json!({ "set": { "family": { "family": "comb", "alpha": 0.75, "z": 2.16, "k": 6 } } });
    assert!(fragrd(d.path(), &["indices"], Some(comb)).status.success());
    let r = read(d.path(), "indices.json");
    assert!((r["delta1"].as_f64().unwrap() - 3.0 / 13.0).abs() <= 0.03);
    assert!((r["delta1_oracle"].as_f64().unwrap() - 3.0 / 13.0).abs() <= 1e-12);
}

#[test]
fn seeded_corpus_is_reproducible() {
    let cfg = json!({ "corpus": { "dim": 1, "count": 12 } });
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(fragrd(a.path(), &["indices", "--seed", "5"], Some(cfg.clone())).status.success());
    assert!(fragrd(b.path(), &["indices", "--seed", "5", "--workers", "2"], Some(cfg)).status.success());
    let ca = std::fs::read(a.path().join("out/corpus.json")).unwrap();
    assert_eq!(ca, std::fs::read(b.path().join("out/corpus.json")).unwrap());
    let rows: Vec<Value> = serde_json::from_slice(&ca).unwrap();
    assert_eq!(rows.len(), 12);
    for r in rows {
        assert!((r["report"]["delta_h"].as_f64().unwrap() - r["delta_h_closed_form"].as_f64().unwrap()).abs() <= 1e-3);
    }
}

#[test]
fn family_measure_matches_closed_form() {
    let d = tempfile::tempdir().unwrap();
    let cfg = json!({ "set": { "family": { "family": "fn", "dim": 2, "n": 16, "nu": 0.5 } } });
    let o = fragrd(d.path(), &["family"], Some(cfg));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let f = read(d.path(), "family.json");
    let closed = f["closed_form_measure"].as_f64().unwrap();
    assert!((f["exact_measure"].as_f64().unwrap() - closed).abs() <= 1e-9 * closed);
    assert!((f["raster_measure"].as_f64().unwrap() - closed).abs() <= f["raster_measure_error"].as_f64().unwrap() + 1e-9);
    let (hdr, cov) = read_grid_dump(&std::fs::read(d.path().join("out/set.grid")).unwrap()).unwrap();
    let cell = hdr.h * hdr.h;
    assert!((cov.iter().sum::<f64>() * cell - f["raster_measure"].as_f64().unwrap()).abs() < 1e-9 * closed);
    let set: fragrd::setdoc::SetDoc = serde_json::from_value(read(d.path(), "set.json")).unwrap();
    assert_eq!(set.dim, 2);
}
