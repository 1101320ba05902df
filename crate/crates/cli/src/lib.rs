//! Command-line front end: configuration documents, output files,
//! threaded execution and the reproduction recipes.

pub mod commands;
pub mod config;
pub mod corpus;
pub mod error;
pub mod exec;
pub mod io;
pub mod recipes;
pub mod run;
pub mod setdoc;

use config::RunConfig;
use error::Result;
use io::Manifest;
use run::Run;
use std::path::{Path, PathBuf};

/// What to run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Task {
    Indices,
    Family,
    Simulate,
    Classify,
    Threshold,
    Reproduce(String),
}

impl Task {
    pub fn name(&self) -> String {
        match self {
            Task::Indices => "indices".into(),
            Task::Family => "family".into(),
            Task::Simulate => "simulate".into(),
            Task::Classify => "classify".into(),
            Task::Threshold => "threshold".into(),
            Task::Reproduce(r) => format!("reproduce {r}"),
        }
    }

    fn dir_name(&self) -> String {
        match self {
            Task::Reproduce(r) => r.clone(),
            other => other.name(),
        }
    }
}

/// Command-line inputs shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct Invocation {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

impl Invocation {
    /// Config document with overrides applied; `--workers` and `--seed`
    /// act as the last overrides.
    pub fn load(&self, task: &Task) -> Result<RunConfig> {
        let mut ov = self.overrides.clone();
        if let Some(w) = self.workers {
            ov.push(format!("workers={w}"));
        }
        if let Some(s) = self.seed {
            ov.push(format!("seed={s}"));
        }
        if let Task::Reproduce(r) = task {
            ov.insert(0, format!("experiment.recipe=\"{r}\""));
        }
        config::load(self.config.as_deref(), &ov)
    }

    fn out_dir(&self, cfg: &RunConfig, task: &Task) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| Path::new("out").join(task.dir_name()))
    }
}

/// Runs one task end to end and writes the manifest. Recipe check
/// failures surface as [`CliError::Assertion`] after all files are
/// written.
pub fn execute(task: &Task, inv: &Invocation) -> Result<Manifest> {
    let cfg = inv.load(task)?;
    let out = inv.out_dir(&cfg, task);
    let mut run = Run::new(&task.name(), cfg, out)?;
    let result = match task {
        Task::Indices => commands::cmd_indices(&mut run),
        Task::Family => commands::cmd_family(&mut run),
        Task::Simulate => commands::cmd_simulate(&mut run),
        Task::Classify => commands::cmd_classify(&mut run),
        Task::Threshold => commands::cmd_threshold(&mut run),
        Task::Reproduce(r) => recipes::dispatch(r, &mut run),
    };
    match result {
        Ok(summary) => run.finish(summary),
        Err(e) => {
            run.failures.clear();
            let code = e.exit_code();
            let _ = run.finish(serde_json::json!({ "error": e.to_string(), "exit_code": code }));
            Err(e)
        }
    }
}
