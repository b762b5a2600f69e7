//! Config-driven experiment runner. A run writes its CSV files,
//! `summary.json` (byte-reproducible for a given config) and `timing.json`
//! into the output directory.

mod config;
mod describe;
mod experiments;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::dynamics::MapSystem;
use crate::error::{Error, Result};
use crate::models::build;
use crate::parallel::{default_workers, with_workers};

pub use config::{
    ConstantOverrides, DiskConfig, Experiment, ExperimentConfig, MeasureConfig, Reference, SamplingConfig,
};
pub use describe::{describe, model_listing};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Everything a run reports. Wall time is kept out of `summary.json` and
/// written to `timing.json` instead.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub experiment: Experiment,
    pub model: String,
    pub config: ExperimentConfig,
    pub measured: BTreeMap<String, f64>,
    pub assertions: Vec<Assertion>,
    pub files: Vec<String>,
    pub passed: bool,
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl RunSummary {
    pub fn measured(&self, key: &str) -> Option<f64> {
        self.measured.get(key).copied()
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

/// Per-run state handed to the experiments.
pub(crate) struct Run<'a> {
    pub cfg: &'a ExperimentConfig,
    pub sys: &'a dyn MapSystem,
    dir: PathBuf,
    measured: BTreeMap<String, f64>,
    assertions: Vec<Assertion>,
    files: Vec<String>,
}

pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

impl<'a> Run<'a> {
    pub fn measure(&mut self, key: &str, value: f64) {
        self.measured.insert(key.to_string(), value);
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    /// Writes `name` in the output directory through `fill`.
    pub fn file(&mut self, name: &str, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let mut buf = Vec::new();
        fill(&mut buf).map_err(|e| Error::io(&path, e))?;
        fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// CSV with a fixed header; cells are preformatted.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        self.file(name, |w| {
            writeln!(w, "{}", header.join(","))?;
            for r in rows {
                writeln!(w, "{}", r.join(","))?;
            }
            Ok(())
        })
    }
}

/// Runs `cfg` with the worker count from the environment.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    run_with_workers(cfg, default_workers())
}

/// Runs `cfg` on a dedicated pool of `workers` threads.
pub fn run_with_workers(cfg: &ExperimentConfig, workers: usize) -> Result<RunSummary> {
    cfg.validate()?;
    let start = Instant::now();
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let sys = build(&cfg.model)?;
    log::info!(
        "running {} on {} with {workers} workers",
        cfg.experiment,
        cfg.model.name()
    );
    let mut run = Run {
        cfg,
        sys: sys.as_ref(),
        dir: dir.clone(),
        measured: BTreeMap::new(),
        assertions: Vec::new(),
        files: Vec::new(),
    };
    with_workers(workers, || experiments::dispatch(&mut run))?;
    let passed = run.assertions.iter().all(|a| a.passed);
    let summary = RunSummary {
        experiment: cfg.experiment,
        model: cfg.model.name().to_string(),
        config: cfg.clone(),
        measured: run.measured,
        assertions: run.assertions,
        files: run.files,
        passed,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&dir.join("summary.json"), &summary.to_json()?)?;
    let timing = serde_json::json!({
        "wall_seconds": summary.wall_seconds,
        "workers": workers,
    });
    write_json(
        &dir.join("timing.json"),
        &(serde_json::to_string_pretty(&timing)? + "\n"),
    )?;
    Ok(summary)
}

fn write_json(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
