//! Sweep orchestration: runs a configured experiment, aggregates rows,
//! fits, and writes the artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use reconlab_core::fit::loglog_fit;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::jobs::{write_rows_csv, Row};
use crate::pipelines;
use crate::scaling::ScalingFit;

/// A fitted line, usually in log-log coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub name: String,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub git_hash: Option<String>,
    pub seeds: Vec<u64>,
    pub wall_time_s: f64,
    pub threads: usize,
    pub version: String,
}

/// Everything a pipeline produces before provenance is attached.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub rows: Vec<Row>,
    pub fits: Vec<FitSummary>,
    pub scaling: BTreeMap<String, ScalingFit>,
    pub scalars: BTreeMap<String, f64>,
    /// Fits that could not be computed, with the reason.
    pub notes: Vec<String>,
    /// Extra files, relative path and contents.
    pub artifacts: Vec<(String, Vec<u8>)>,
}

impl Outcome {
    /// `ln y` against `ln x` over paired samples; failures become notes.
    pub fn loglog(&mut self, name: &str, x: &[f64], y: &[f64]) {
        match loglog_fit(x, y) {
            Ok(f) => self.fits.push(FitSummary {
                name: name.to_string(),
                slope: f.slope,
                intercept: f.intercept,
                r2: f.r2,
                rows: x.len(),
            }),
            Err(e) => self.notes.push(format!("{name}: {e}")),
        }
    }

    pub fn fit(&self, name: &str) -> Option<&FitSummary> {
        self.fits.iter().find(|f| f.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kind: ExperimentKind,
    pub rows: Vec<Row>,
    pub fits: Vec<FitSummary>,
    pub scaling: BTreeMap<String, ScalingFit>,
    pub scalars: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub provenance: Provenance,
    #[serde(skip)]
    pub artifacts: Vec<(String, Vec<u8>)>,
}

impl SweepResult {
    pub fn fit(&self, name: &str) -> Option<&FitSummary> {
        self.fits.iter().find(|f| f.name == name)
    }

    pub fn rows_in<'a>(&'a self, group: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.group == group)
    }

    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }
}

fn git_hash() -> Option<String> {
    let out = std::process::Command::new("git")
        .args(["rev-parse", "--short=12", "HEAD"])
        .output()
        .ok()?;
    if !out.status.success() {
        return None;
    }
    let s = String::from_utf8(out.stdout).ok()?.trim().to_string();
    (!s.is_empty()).then_some(s)
}

/// Runs the pipeline for `cfg.kind` without touching the file system.
pub fn execute(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let start = Instant::now();
    let run = || match cfg.kind {
        ExperimentKind::AdvdiffRate | ExperimentKind::TheoremBConstant => pipelines::advdiff::run(cfg),
        ExperimentKind::TheoremAReconnection => pipelines::reconnection::run(cfg),
        ExperimentKind::TheoremCStochastic => pipelines::stochastic::run_theorem_c(cfg),
        ExperimentKind::SnsEnergy => pipelines::stochastic::run_energy(cfg),
    };
    let outcome = if cfg.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(std::io::Error::other)?;
        pool.install(run)?
    } else {
        run()?
    };
    let mut artifacts = outcome.artifacts;
    artifacts.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(SweepResult {
        kind: cfg.kind,
        rows: outcome.rows,
        fits: outcome.fits,
        scaling: outcome.scaling,
        scalars: outcome.scalars,
        notes: outcome.notes,
        provenance: Provenance {
            git_hash: git_hash(),
            seeds: cfg.seeds.clone(),
            wall_time_s: start.elapsed().as_secs_f64(),
            threads: rayon::current_num_threads(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        artifacts,
    })
}

/// `config.resolved`, `rows.csv`, `summary.json` and the pipeline's extra
/// files under `dir`. Everything except `summary.json` depends only on the
/// config.
pub fn write_outputs(cfg: &ExperimentConfig, result: &SweepResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.resolved"), cfg.to_text())?;
    let header = vec![
        format!("kind={}", cfg.kind),
        format!(
            "seeds={}",
            cfg.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
        ),
        format!("grid={}", cfg.grid.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("x")),
    ];
    let mut csv = Vec::new();
    write_rows_csv(&mut csv, &header, &result.rows)?;
    fs::write(dir.join("rows.csv"), csv)?;
    let json = serde_json::to_string_pretty(result).map_err(std::io::Error::from)?;
    fs::write(dir.join("summary.json"), json)?;
    for (name, bytes) in &result.artifacts {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, bytes)?;
    }
    Ok(())
}

/// Executes `cfg` and writes its outputs to `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let result = execute(cfg)?;
    write_outputs(cfg, &result, &cfg.out)?;
    log::info!(
        "{} finished in {:.1} s with {} failed rows; outputs in {}",
        cfg.kind,
        result.provenance.wall_time_s,
        result.failed_rows(),
        cfg.out.display()
    );
    Ok(result)
}
