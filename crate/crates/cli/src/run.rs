//! Shared state of one command invocation.

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::exec::Threaded;
use crate::io::{Manifest, OutputDir};
use fragrd_core::geom::{indices, IndexReport};
use fragrd_core::solver::{self, Outcome, SolverConfig, SolverError};
use fragrd_core::thresholds::{InitialData, ThresholdBracket};
use fragrd_core::{BistableReaction, SetExpr};
use serde::Serialize;
use serde_json::Value;
use std::path::PathBuf;
use std::time::Instant;

pub struct Run {
    pub cfg: RunConfig,
    pub reaction: BistableReaction,
    pub out: OutputDir,
    pub manifest: Manifest,
    /// Failed recipe checks; nonempty means exit code 4.
    pub failures: Vec<String>,
    start: Instant,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

impl Run {
    pub fn new(command: &str, cfg: RunConfig, out: PathBuf) -> Result<Run> {
        let start = Instant::now();
        cfg.validate()?;
        let reaction = cfg.reaction()?;
        let manifest = Manifest::new(command, cfg.to_value(), cfg.hash());
        let out = OutputDir::create(out)?;
        Ok(Run { cfg, reaction, out, manifest, failures: Vec::new(), start })
    }

    pub fn executor(&self) -> Threaded {
        Threaded { workers: self.cfg.workers.max(1) }
    }

    pub fn record_verdict(&mut self, name: &str, o: &Outcome) {
        self.manifest.verdicts.insert(
            name.to_owned(),
            serde_json::json!({
                "verdict": o.verdict,
                "certificate": o.certificate,
                "certificate_time": o.certificate_time,
                "final_time": o.final_time,
            }),
        );
    }

    pub fn record_index(&mut self, name: &str, r: &IndexReport) {
        self.manifest.index_reports.insert(name.to_owned(), to_value(r));
    }

    pub fn record_bracket(&mut self, name: &str, b: &ThresholdBracket) {
        self.manifest.brackets.insert(
            name.to_owned(),
            serde_json::json!({
                "lo": b.lo,
                "hi": b.hi,
                "status": b.status,
                "undecided": b.undecided,
                "probes": b.probes.len(),
            }),
        );
    }

    /// Records a check; failing checks are reported and turn into exit 4.
    pub fn check(&mut self, name: &str, ok: bool, detail: String) -> Value {
        if !ok {
            self.failures.push(format!("{name}: {detail}"));
        }
        serde_json::json!({ "check": name, "pass": ok, "detail": detail })
    }

    pub fn indices(&mut self, name: &str, set: &SetExpr) -> Result<IndexReport> {
        let r = indices(set, &self.cfg.indices)?;
        self.record_index(name, &r);
        Ok(r)
    }

    pub fn finish(mut self, summary: Value) -> Result<Manifest> {
        self.manifest.summary = summary;
        self.manifest.wall_clock_seconds = self.start.elapsed().as_secs_f64();
        let failures = std::mem::take(&mut self.failures);
        let m = self.out.finish(self.manifest)?;
        if failures.is_empty() {
            Ok(m)
        } else {
            Err(CliError::Assertion(failures.join("; ")))
        }
    }
}

/// Classifier closure over a fixed reaction and solver configuration.
pub fn classifier<'a>(
    reaction: &'a BistableReaction,
    cfg: &'a SolverConfig,
) -> impl Fn(&InitialData) -> std::result::Result<Outcome, SolverError> + Sync + 'a {
    move |d: &InitialData| solver::classify(&d.set, d.amplitude, reaction, cfg)
}
