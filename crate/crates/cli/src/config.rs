//! Run configuration: loading, dotted overrides, validation and hashing.

use crate::error::{CliError, Result};
use crate::setdoc::SetDoc;
use fragrd_core::families::{self, FamilySpec};
use fragrd_core::geom::IndexOptions;
use fragrd_core::reaction::ReactionSpec;
use fragrd_core::{BistableReaction, Point, SetExpr, SolverConfig};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use std::path::Path;

/// Inline set document or named family member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Expr(SetDoc),
    Family(FamilySpec),
}

impl SetSpec {
    pub fn build(&self) -> Result<SetExpr> {
        match self {
            SetSpec::Expr(d) => d.to_expr(),
            SetSpec::Family(f) => Ok(families::build(f)?),
        }
    }
}

fn one() -> f64 {
    1.0
}

/// Parameterized family searched by the `threshold` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyChoice {
    /// σ = radius of `amplitude · 𝟙_{B_σ(center)}`.
    Ball {
        dim: usize,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        center: Point,
    },
    /// σ = amplitude on a fixed set.
    Amplitude { set: SetSpec },
    /// σ = dilation factor of a set star-shaped about `about`.
    Dilation {
        set: SetSpec,
        #[serde(default)]
        about: Point,
    },
    /// σ = side of the centred cube.
    Cube { dim: usize },
    /// σ = radius of the ball cut out of a cube of side `side`.
    CubeBall { dim: usize, side: f64 },
    /// σ = r in `Q_{a*+ε} ∩ B_r`.
    RStar { dim: usize, epsilon: f64, a_star: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdBlock {
    pub family: FamilyChoice,
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_widen")]
    pub max_widen: usize,
    #[serde(default = "default_max_probes")]
    pub max_probes: usize,
    #[serde(default = "one_usize")]
    pub fanout: usize,
    /// Sample pairs checked for raster inclusion before searching.
    #[serde(default = "default_spot")]
    pub spot_check: usize,
}

fn default_tol() -> f64 {
    0.01
}
fn default_max_widen() -> usize {
    10
}
fn default_max_probes() -> usize {
    60
}
fn one_usize() -> usize {
    1
}
fn default_spot() -> usize {
    5
}

/// Random corpus for the `indices` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusBlock {
    pub dim: usize,
    pub count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Experiment {
    pub recipe: Option<String>,
    pub params: Map<String, Value>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotFormat {
    /// CSV in one dimension, binary dumps in two.
    #[default]
    Auto,
    Csv,
    Binary,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: Option<String>,
    pub snapshots: SnapshotFormat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub reaction: ReactionSpec,
    pub set: Option<SetSpec>,
    pub amplitude: f64,
    pub solver: SolverConfig,
    pub indices: IndexOptions,
    pub threshold: Option<ThresholdBlock>,
    pub corpus: Option<CorpusBlock>,
    pub experiment: Experiment,
    pub output: OutputBlock,
    pub seed: u64,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            reaction: ReactionSpec::Cubic { theta: 0.4 },
            set: None,
            amplitude: 1.0,
            solver: SolverConfig::default(),
            indices: IndexOptions::default(),
            threshold: None,
            corpus: None,
            experiment: Experiment::default(),
            output: OutputBlock::default(),
            seed: 0,
            workers: 1,
        }
    }
}

/// Splits `a.b.c=value`; the value is JSON when it parses, a string
/// otherwise.
pub fn parse_override(s: &str) -> Result<(Vec<String>, Value)> {
    let (key, raw) = s.split_once('=').ok_or_else(|| CliError::config(format!("override `{s}` is not key=value")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_owned).collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::config(format!("override key `{key}` has an empty segment")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    Ok((path, value))
}

/// Sets `path` inside `doc`, creating objects along the way. Numeric
/// segments index into existing arrays.
pub fn apply_override(doc: &mut Value, path: &[String], value: Value) -> Result<()> {
    let mut cur = doc;
    for (i, seg) in path.iter().enumerate() {
        let last = i + 1 == path.len();
        if cur.is_null() {
            *cur = Value::Object(Map::new());
        }
        cur = match cur {
            Value::Object(m) => {
                if last {
                    m.insert(seg.clone(), value);
                    return Ok(());
                }
                m.entry(seg.clone()).or_insert(Value::Null)
            }
            Value::Array(a) => {
                let k: usize = seg.parse().map_err(|_| CliError::config(format!("`{seg}` does not index an array")))?;
                let len = a.len();
                let slot = a.get_mut(k).ok_or_else(|| CliError::config(format!("index {k} out of range (length {len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(CliError::config(format!("override path {} crosses a scalar at `{seg}`", path.join(".")))),
        };
    }
    Ok(())
}

/// Reads the config document (an empty object without `path`), applies the
/// overrides in order and deserializes.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut doc = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text)?
        }
        None => Value::Object(Map::new()),
    };
    if !doc.is_object() {
        return Err(CliError::config("config document must be a JSON object"));
    }
    for o in overrides {
        let (p, v) = parse_override(o)?;
        apply_override(&mut doc, &p, v)?;
    }
    let cfg: RunConfig = serde_json::from_value(doc)?;
    Ok(cfg)
}

impl RunConfig {
    pub fn reaction(&self) -> Result<BistableReaction> {
        Ok(BistableReaction::from_spec(&self.reaction)?)
    }

    pub fn build_set(&self) -> Result<SetExpr> {
        self.set.as_ref().ok_or_else(|| CliError::config("this command needs a `set` block"))?.build()
    }

    /// Cross-field checks of the solver block for sets of dimension `dim`.
    pub fn validate_solver(&self, dim: usize) -> Result<()> {
        let f = self.reaction()?;
        self.solver.validate(dim, f.m_prime())?;
        if let Some(m) = self.solver.domain_margin {
            let c = f.front_speed().unwrap_or(0.0).max(0.0);
            let need = c * self.solver.t_max + 10.0 * f.diffusion_length();
            if m < need {
                return Err(CliError::config(format!(
                    "solver.domain_margin = {m} is below c·T_max + 10ℓ = {need}; the front could reach the walls"
                )));
            }
        }
        if !(self.amplitude.is_finite() && self.amplitude > 0.0 && self.amplitude <= 1.0) {
            return Err(CliError::config("amplitude must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(CliError::config("workers must be at least 1"));
        }
        self.reaction()?;
        if let Some(s) = &self.set {
            let e = s.build()?;
            if e.dim() <= 2 {
                self.validate_solver(e.dim())?;
            }
        }
        Ok(())
    }

    /// Canonical JSON: serde field order inside structs, sorted keys in
    /// free-form maps, shortest round-trip floats.
    pub fn canonical(&self) -> String {
        serde_json::to_string(&self.to_value()).expect("config serializes")
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

/// Parses recipe parameters, rejecting unknown keys.
pub fn params<T: serde::de::DeserializeOwned + Default>(m: &Map<String, Value>) -> Result<T> {
    if m.is_empty() {
        return Ok(T::default());
    }
    Ok(serde_json::from_value(Value::Object(m.clone()))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_overrides_create_and_replace() {
        let mut doc = serde_json::json!({"solver": {"h": 0.02}, "list": [1, 2]});
        for o in ["solver.h=0.05", "solver.certificate.core_radius=2", "list.1=5", "experiment.recipe=fig1"] {
            let (p, v) = parse_override(o).unwrap();
            apply_override(&mut doc, &p, v).unwrap();
        }
        assert_eq!(doc["solver"]["h"], 0.05);
        assert_eq!(doc["solver"]["certificate"]["core_radius"], 2);
        assert_eq!(doc["list"][1], 5);
        assert_eq!(doc["experiment"]["recipe"], "fig1");
        let (p, v) = parse_override("solver.h.x=1").unwrap();
        assert!(apply_override(&mut doc, &p, v).is_err());
    }

    #[test]
    fn hash_round_trips_through_canonical_form() {
        let mut cfg = RunConfig::default();
        cfg.set = Some(SetSpec::Family(FamilySpec::En { dim: 1, n: 8 }));
        cfg.solver.snapshot_times = vec![0.0, 0.05];
        let back: RunConfig = serde_json::from_str(&cfg.canonical()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let e = serde_json::from_str::<RunConfig>(r#"{"solver": {"hh": 1}}"#);
        assert!(e.is_err());
    }

    #[test]
    fn short_margin_is_rejected() {
        let mut cfg = RunConfig::default();
        cfg.set = Some(SetSpec::Family(FamilySpec::Interval { a: -1.0, b: 1.0 }));
        cfg.solver.domain_margin = Some(5.0);
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
        cfg.solver.domain_margin = None;
        cfg.validate().unwrap();
    }
}
