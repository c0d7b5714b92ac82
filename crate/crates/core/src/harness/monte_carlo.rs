use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{round_sig, worker_pool, write_file, ExperimentConfig, HarnessError, OutputFormat};
use crate::game::{self, DayLog, GameConfig, GameState, Placement, Semantics, TourPolicy};
use crate::seed;

const FLOAT_DIGITS: usize = 9;

/// Seed of replication `index` under `master_seed`.
pub fn replication_seed(master_seed: u64, index: usize) -> u64 {
    seed::derive(master_seed, index as u64)
}

/// Mean, sample standard deviation and 95% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std_dev: f64,
    pub ci95: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let k = values.len();
        if k == 0 {
            return Summary {
                mean: f64::NAN,
                std_dev: f64::NAN,
                ci95: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / k as f64;
        let std_dev = if k > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (k - 1) as f64).sqrt()
        } else {
            0.0
        };
        Summary {
            mean,
            std_dev,
            ci95: 1.96 * std_dev / (k as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayAggregate {
    pub day: u32,
    /// Cumulative utilization at the end of the day.
    pub utilization: Summary,
    /// Agents newly served that day.
    pub served: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub n: usize,
    pub m: usize,
    pub tour_policy: TourPolicy,
    pub placement: Placement,
    pub lambda: f64,
    pub max_days: u32,
    pub tsp_budget: u64,
    pub semantics: Semantics,
    pub replications: usize,
    pub master_seed: u64,
    pub seed_derivation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub metadata: ReportMetadata,
    pub days: Vec<DayAggregate>,
    /// Wall-clock time; kept out of serialized output so reports stay
    /// byte-identical across runs.
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Plays `replications` independent games. Results are in replication order
/// regardless of how the work was scheduled.
pub fn run_replications(config: &ExperimentConfig) -> Result<Vec<Vec<DayLog>>, HarnessError> {
    config.validate()?;
    let pool = worker_pool(config.workers)?;
    pool.install(|| {
        (0..config.replications)
            .into_par_iter()
            .map(|i| {
                let game = GameConfig {
                    seed: replication_seed(config.master_seed, i),
                    ..config.game.clone()
                };
                game::run_game_with(game, config.semantics).map_err(HarnessError::from)
            })
            .collect()
    })
}

/// Utilization at the end of `day` (1-based); after the last logged day the
/// final value persists.
pub(crate) fn utilization_on(logs: &[DayLog], day: u32) -> f64 {
    match logs.get(day as usize - 1) {
        Some(log) => log.cumulative_utilization,
        None => logs.last().map_or(0.0, |l| l.cumulative_utilization),
    }
}

/// Per-day statistics over replications, up to the longest run.
pub fn aggregate(runs: &[Vec<DayLog>]) -> Vec<DayAggregate> {
    let horizon = runs.iter().map(Vec::len).max().unwrap_or(0) as u32;
    (1..=horizon)
        .map(|day| {
            let util: Vec<f64> = runs.iter().map(|r| utilization_on(r, day)).collect();
            let served: Vec<f64> = runs
                .iter()
                .map(|r| r.get(day as usize - 1).map_or(0.0, |l| l.served_today as f64))
                .collect();
            DayAggregate {
                day,
                utilization: Summary::of(&util),
                served: Summary::of(&served),
            }
        })
        .collect()
}

pub fn run_monte_carlo(config: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    let started = Instant::now();
    let runs = run_replications(config)?;
    let g = &config.game;
    Ok(RunReport {
        metadata: ReportMetadata {
            n: g.n,
            m: g.m,
            tour_policy: g.tour_policy,
            placement: g.placement,
            lambda: g.lambda,
            max_days: g.max_days,
            tsp_budget: g.tsp_budget,
            semantics: config.semantics,
            replications: config.replications,
            master_seed: config.master_seed,
            seed_derivation: seed::DERIVATION.to_string(),
        },
        days: aggregate(&runs),
        elapsed: started.elapsed(),
    })
}

#[derive(Debug, Serialize)]
struct ReportRow {
    day: u32,
    utilization_mean: f64,
    utilization_sd: f64,
    utilization_ci95: f64,
    served_mean: f64,
    served_sd: f64,
    served_ci95: f64,
}

impl From<&DayAggregate> for ReportRow {
    fn from(d: &DayAggregate) -> Self {
        let r = |x| round_sig(x, FLOAT_DIGITS);
        ReportRow {
            day: d.day,
            utilization_mean: r(d.utilization.mean),
            utilization_sd: r(d.utilization.std_dev),
            utilization_ci95: r(d.utilization.ci95),
            served_mean: r(d.served.mean),
            served_sd: r(d.served.std_dev),
            served_ci95: r(d.served.ci95),
        }
    }
}

impl RunReport {
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let meta = serde_json::to_value(&self.metadata).expect("metadata serializes");
        let mut out = String::new();
        if let serde_json::Value::Object(map) = meta {
            for (k, v) in map {
                let v = match v {
                    serde_json::Value::String(s) => s,
                    other => other.to_string(),
                };
                out.push_str(&format!("# {k}: {v}\n"));
            }
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        for d in &self.days {
            w.serialize(ReportRow::from(d))?;
        }
        let body = w.into_inner().map_err(|e| e.into_error())?;
        out.push_str(std::str::from_utf8(&body).expect("csv output is utf-8"));
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<ReportRow> = self.days.iter().map(ReportRow::from).collect();
        let doc = serde_json::json!({ "metadata": self.metadata, "days": rows });
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render(&self, format: OutputFormat) -> Result<String, csv::Error> {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => Ok(self.to_json()),
        }
    }
}

pub fn write_report(report: &RunReport, path: &Path, format: OutputFormat) -> Result<(), HarnessError> {
    let text = report.render(format).map_err(|source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    write_file(path, text.as_bytes())
}

/// Which previously vacant restaurants count as utilized under position
/// counting: those in the first `m` positions of at least one active tour.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountingOutcome {
    pub utilized: Vec<usize>,
    pub vacant: Vec<usize>,
}

pub fn mc_analytic_semantics(state: &GameState) -> CountingOutcome {
    let first = state.counting_first_stop();
    let (mut utilized, mut vacant) = (Vec::new(), Vec::new());
    for r in state.vacant_restaurants() {
        if first[r].is_some() {
            utilized.push(r);
        } else {
            vacant.push(r);
        }
    }
    CountingOutcome { utilized, vacant }
}
