// SPDX-License-Identifier: Apache-2.0

//! Experiment orchestration.
//!
//! An [`ExperimentSpec`] names an experiment kind, an ensemble template and
//! the swept grid. Every (grid point, trial) pair is an independent job with
//! its own derived seed; jobs run on the data-parallel pool and results are
//! collected in job order, so the emitted CSV files do not depend on thread
//! count or scheduling.

mod sweeps;
pub mod table;
mod temporal;
mod threshold;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use sweeps::{transition_crossing, transition_first_above, TRANSITION_LEVEL};
pub use table::Table;
pub use temporal::{default_temporal_ensemble, temporal_theory, TemporalCell, TemporalMode, DEFAULT_THRESHOLD_FRACS};
pub use threshold::{kstar_curve, KstarPoint};

use crate::netgen::EnsembleParams;
use crate::spectral::{EigOptions, NullSource};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    LocalizationSweep,
    PersistenceSweep,
    ThresholdProbe,
    ThresholdKstarSweep,
    TemporalBinning,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::LocalizationSweep => "localization_sweep",
            ExperimentKind::PersistenceSweep => "persistence_sweep",
            ExperimentKind::ThresholdProbe => "threshold_probe",
            ExperimentKind::ThresholdKstarSweep => "threshold_kstar_sweep",
            ExperimentKind::TemporalBinning => "temporal_binning",
        }
    }
}

/// Swept values. Which fields are used depends on the experiment kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    /// Community sizes `K`.
    #[serde(default)]
    pub k: Vec<usize>,
    /// Persistences `T`.
    #[serde(default)]
    pub t: Vec<usize>,
    /// Thresholds `L̃`. Empty means `1..=L`.
    #[serde(default)]
    pub thresholds: Vec<usize>,
    /// Odd window widths for temporal binning.
    #[serde(default)]
    pub widths: Vec<usize>,
    /// Mean layer probabilities for the threshold `K̂*` sweep.
    #[serde(default)]
    pub p: Vec<f64>,
    /// Threshold fractions of the window width for temporal binning.
    #[serde(default)]
    pub threshold_fracs: Vec<f64>,
}

fn default_trials() -> usize {
    10
}

fn default_null() -> NullSource {
    NullSource::Empirical
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    5000
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Eigenpairs per solve; defaults to communities + 4.
    #[serde(default)]
    pub k_eigs: Option<usize>,
    #[serde(default = "default_null")]
    pub null: NullSource,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Temporal binning: also generate and eigensolve instances.
    #[serde(default)]
    pub empirical: bool,
    /// Threshold probe: eigensolve each thresholded network.
    #[serde(default = "default_true")]
    pub detect: bool,
    pub ensemble: EnsembleParams,
    #[serde(default)]
    pub grid: Grid,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => {
                let spec: Self = serde_json::from_str(&text)?;
                spec.validate()?;
                Ok(spec)
            }
            _ => Self::from_toml(&text),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("tol must be positive"));
        }
        let g = &self.grid;
        let need_template = || -> Result<()> {
            if self.ensemble.communities.len() != 1 {
                return Err(Error::config(format!(
                    "{} needs exactly one community template",
                    self.kind.name()
                )));
            }
            Ok(())
        };
        match self.kind {
            ExperimentKind::LocalizationSweep => {
                need_template()?;
                if g.k.is_empty() {
                    return Err(Error::config("grid.k must be nonempty"));
                }
            }
            ExperimentKind::PersistenceSweep => {
                need_template()?;
                if g.k.is_empty() || g.t.is_empty() {
                    return Err(Error::config("grid.k and grid.t must be nonempty"));
                }
                if g.t.iter().any(|&t| t == 0 || t > self.ensemble.layers) {
                    return Err(Error::config("grid.t values must lie in 1..=L"));
                }
            }
            ExperimentKind::ThresholdProbe => {
                need_template()?;
            }
            ExperimentKind::ThresholdKstarSweep => {
                need_template()?;
                if g.p.is_empty() {
                    return Err(Error::config("grid.p must be nonempty"));
                }
                if g.p.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
                    return Err(Error::config("grid.p values must lie in (0,1)"));
                }
            }
            ExperimentKind::TemporalBinning => {
                if self.ensemble.communities.is_empty() {
                    return Err(Error::config("temporal binning needs communities"));
                }
                if g.widths.is_empty() {
                    return Err(Error::config("grid.widths must be nonempty"));
                }
                if g.widths.iter().any(|w| w % 2 == 0 || *w > self.ensemble.layers) {
                    return Err(Error::config("grid.widths must be odd and at most L"));
                }
            }
        }
        if g.k.iter().any(|&k| k < 2) {
            return Err(Error::config("grid.k values must be at least 2"));
        }
        if g.thresholds.iter().any(|&t| t == 0 || t > self.ensemble.layers) {
            return Err(Error::config("grid.thresholds must lie in 1..=L"));
        }
        // Validate the ensemble with the largest swept community in place.
        let mut probe = self.ensemble.clone();
        if let (Some(&kmax), Some(c)) = (g.k.iter().max(), probe.communities.first_mut()) {
            c.nodes = crate::netgen::Selection::Random { random: kmax };
        }
        probe.validate()?;
        Ok(())
    }

    /// Full-scale variant: `n = 10⁴` with the `K` grid rescaled by `√(10⁴/n)`,
    /// keeping the grid's position relative to `K* ∝ √N`.
    pub fn at_full_scale(&self) -> Self {
        const FULL_N: usize = 10_000;
        let mut s = self.clone();
        if s.ensemble.n >= FULL_N {
            return s;
        }
        let ratio = (FULL_N as f64 / s.ensemble.n as f64).sqrt();
        s.ensemble.n = FULL_N;
        let mut k: Vec<usize> = s.grid.k.iter().map(|&k| ((k as f64 * ratio).round() as usize).max(2)).collect();
        k.dedup();
        s.grid.k = k;
        s
    }

    pub(crate) fn eig_options(&self, seed: u64) -> EigOptions {
        EigOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            seed,
            ..EigOptions::default()
        }
    }

    pub(crate) fn k_eigs(&self, communities: usize) -> usize {
        self.k_eigs.unwrap_or(communities + 4).max(communities)
    }

    /// Seed of trial `trial` at grid point `point`.
    pub fn job_seed(&self, point: usize, trial: usize) -> u64 {
        seed::derive(seed::derive(self.seed, seed::JOB, point as u64), seed::JOB, trial as u64)
    }

    /// SHA-256 of the canonical JSON form of the spec.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("spec serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub tables: Vec<Table>,
    pub wall_time_s: f64,
}

impl ExperimentOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Run an experiment in memory.
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let start = Instant::now();
    let tables = match spec.kind {
        ExperimentKind::LocalizationSweep => sweeps::run_localization_sweep(spec)?,
        ExperimentKind::PersistenceSweep => sweeps::run_persistence_sweep(spec)?,
        ExperimentKind::ThresholdProbe => threshold::run_threshold_probe(spec)?,
        ExperimentKind::ThresholdKstarSweep => threshold::run_threshold_kstar_sweep(spec)?,
        ExperimentKind::TemporalBinning => temporal::run_temporal_binning(spec)?,
    };
    Ok(ExperimentOutput {
        tables,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub rows: usize,
}

/// Record of a run, sufficient to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec_hash: String,
    pub spec: ExperimentSpec,
    pub seed: u64,
    pub job_seeds: Vec<Vec<u64>>,
    pub crate_version: String,
    pub parallel: bool,
    pub outputs: Vec<OutputFile>,
    pub wall_time_s: f64,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Run and write `<kind>_<table>.csv` files plus `manifest.json` into `out`.
pub fn run_to_dir(spec: &ExperimentSpec, out: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let output = run(spec)?;
    let mut files = Vec::new();
    for t in &output.tables {
        let name = format!("{}.csv", t.name);
        let path: PathBuf = out.join(&name);
        let csv = t.to_csv();
        std::fs::write(&path, &csv).map_err(|e| Error::io(&path, e))?;
        files.push(OutputFile {
            file: name,
            sha256: hex::encode(Sha256::digest(csv.as_bytes())),
            rows: t.rows.len(),
        });
    }
    let points = grid_points(spec);
    let manifest = Manifest {
        spec_hash: spec.hash(),
        spec: spec.clone(),
        seed: spec.seed,
        job_seeds: (0..points)
            .map(|p| (0..spec.trials).map(|t| spec.job_seed(p, t)).collect())
            .collect(),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        parallel: crate::par::is_parallel(),
        outputs: files,
        wall_time_s: output.wall_time_s,
    };
    let path = out.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

fn grid_points(spec: &ExperimentSpec) -> usize {
    let g = &spec.grid;
    match spec.kind {
        ExperimentKind::LocalizationSweep => g.k.len(),
        ExperimentKind::PersistenceSweep => g.k.len() * g.t.len(),
        ExperimentKind::ThresholdProbe => g.k.len().max(1),
        ExperimentKind::ThresholdKstarSweep => g.p.len(),
        ExperimentKind::TemporalBinning => 1,
    }
}
