//! Experiment orchestration: seeded Monte Carlo replication, comparison of
//! simulation against the closed-form model, and table/figure export.
//!
//! All outputs are deterministic functions of their configuration. CSV is
//! the canonical format; JSON mirrors it with the same field names. Floats
//! are written with 9 significant digits unless noted.

mod compare;
mod figures;
mod monte_carlo;
mod tables;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::AnalyticsError;
use crate::game::{GameConfig, GameError, Semantics};
use crate::tsp::io::InstanceFileError;

pub use compare::{compare, render_comparison, write_comparison, ComparisonRow};
pub use figures::{
    emit_figure_data, figure10_specs, figure_approx_specs, write_figure_data, FigureData, Series,
    SeriesKind, SeriesSpec,
};
pub use monte_carlo::{
    aggregate, mc_analytic_semantics, replication_seed, run_monte_carlo, run_replications,
    write_report, CountingOutcome, DayAggregate, ReportMetadata, RunReport, Summary,
};
pub use tables::{
    default_table_sets, reproduce_tables, table_rows, trajectory_rows, write_table, TableRow,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Instance(#[from] InstanceFileError),
}

impl HarnessError {
    /// Whether the failure came from the filesystem rather than the inputs.
    pub fn is_io(&self) -> bool {
        match self {
            HarnessError::Io { .. } => true,
            HarnessError::Csv { source, .. } => source.is_io_error(),
            HarnessError::Json { source, .. } => source.is_io(),
            HarnessError::Instance(e) => e.is_io(),
            _ => false,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// A seeded Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub game: GameConfig,
    pub replications: usize,
    pub master_seed: u64,
    pub semantics: Semantics,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
    /// Worker threads; `None` uses every available core.
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            game: GameConfig::default(),
            replications: 1000,
            master_seed: 0,
            semantics: Semantics::Behavioral,
            output_path: None,
            format: OutputFormat::Csv,
            workers: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.replications == 0 {
            return Err(HarnessError::InvalidConfig("replications must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(HarnessError::InvalidConfig("workers must be at least 1".into()));
        }
        self.game.validate()?;
        Ok(())
    }

    /// Reads a JSON config; absent fields take their defaults.
    pub fn from_json_file(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| HarnessError::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Formats `x` with `digits` significant digits in plain decimal notation.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding can carry into a new leading digit (0.99999999 -> 1.0000000).
    let rounded: f64 = s.parse().unwrap_or(x);
    let new_magnitude = rounded.abs().log10().floor() as i64;
    if new_magnitude > magnitude && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

/// `x` rounded to `digits` significant digits.
pub(crate) fn round_sig(x: f64, digits: usize) -> f64 {
    fmt_sig(x, digits).parse().unwrap_or(x)
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

pub(crate) fn worker_pool(workers: Option<usize>) -> Result<rayon::ThreadPool, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    builder
        .build()
        .map_err(|e| HarnessError::InvalidConfig(format!("cannot start worker pool: {e}")))
}
