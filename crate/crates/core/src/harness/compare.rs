use std::path::Path;

use serde::Serialize;

use super::monte_carlo::{run_replications, utilization_on, Summary};
use super::{round_sig, write_file, ExperimentConfig, HarnessError, OutputFormat};
use crate::analytics::{approx_stats, trajectory, ModelParams};
use crate::game::{DayLog, GameConfig, Semantics};

const FLOAT_DIGITS: usize = 9;

/// One day of theory against simulation. Monte Carlo columns are `None` when
/// no replications were requested.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub day: u32,
    pub exact_f: f64,
    pub approx_f: f64,
    pub counting_mean: Option<f64>,
    pub counting_ci95: Option<f64>,
    pub behavioral_mean: Option<f64>,
    pub behavioral_ci95: Option<f64>,
    /// Behavioral minus counting utilization, paired on replication seeds.
    pub gap_mean: Option<f64>,
    pub gap_ci95: Option<f64>,
}

fn approx_f(n: f64, m: u32, t: u32) -> Result<f64, HarnessError> {
    let a = approx_stats(n, m, t)?;
    // the exact recurrence finishes once n_t ≤ m; mirror that here
    Ok(if a.n_t <= m as f64 { 1.0 } else { a.f })
}

/// Rows run until the exact model and every simulated game have finished.
pub fn compare(
    game: GameConfig,
    replications: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<ComparisonRow>, HarnessError> {
    game.validate()?;
    let (n, m) = (game.n as f64, game.m as u32);
    let exact = trajectory(ModelParams::new(n, m)?, game.max_days.max(1))?;

    let mut runs: Option<(Vec<Vec<DayLog>>, Vec<Vec<DayLog>>)> = None;
    if replications > 0 {
        let mut cfg = ExperimentConfig {
            game,
            replications,
            master_seed,
            semantics: Semantics::AnalyticCounting,
            workers,
            ..ExperimentConfig::default()
        };
        let counting = run_replications(&cfg)?;
        cfg.semantics = Semantics::Behavioral;
        let behavioral = run_replications(&cfg)?;
        runs = Some((counting, behavioral));
    }

    let sim_days = runs.as_ref().map_or(0, |(c, b)| {
        c.iter().chain(b).map(Vec::len).max().unwrap_or(0)
    });
    let horizon = exact.days.len().max(sim_days) as u32;

    let mut rows = Vec::with_capacity(horizon as usize);
    for day in 1..=horizon {
        let mut row = ComparisonRow {
            day,
            exact_f: exact.utilization(day).unwrap_or(f64::NAN),
            approx_f: approx_f(n, m, day)?,
            counting_mean: None,
            counting_ci95: None,
            behavioral_mean: None,
            behavioral_ci95: None,
            gap_mean: None,
            gap_ci95: None,
        };
        if let Some((counting, behavioral)) = &runs {
            let c: Vec<f64> = counting.iter().map(|r| utilization_on(r, day)).collect();
            let b: Vec<f64> = behavioral.iter().map(|r| utilization_on(r, day)).collect();
            let gap: Vec<f64> = b.iter().zip(&c).map(|(b, c)| b - c).collect();
            let (c, b, gap) = (Summary::of(&c), Summary::of(&b), Summary::of(&gap));
            row.counting_mean = Some(c.mean);
            row.counting_ci95 = Some(c.ci95);
            row.behavioral_mean = Some(b.mean);
            row.behavioral_ci95 = Some(b.ci95);
            row.gap_mean = Some(gap.mean);
            row.gap_ci95 = Some(gap.ci95);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn rounded(row: &ComparisonRow) -> ComparisonRow {
    let r = |x: f64| round_sig(x, FLOAT_DIGITS);
    let o = |x: Option<f64>| x.map(r);
    ComparisonRow {
        day: row.day,
        exact_f: r(row.exact_f),
        approx_f: r(row.approx_f),
        counting_mean: o(row.counting_mean),
        counting_ci95: o(row.counting_ci95),
        behavioral_mean: o(row.behavioral_mean),
        behavioral_ci95: o(row.behavioral_ci95),
        gap_mean: o(row.gap_mean),
        gap_ci95: o(row.gap_ci95),
    }
}

pub fn render_comparison(rows: &[ComparisonRow], format: OutputFormat) -> Result<String, csv::Error> {
    let rows: Vec<ComparisonRow> = rows.iter().map(rounded).collect();
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            if rows.is_empty() {
                w.write_record([
                    "day",
                    "exact_f",
                    "approx_f",
                    "counting_mean",
                    "counting_ci95",
                    "behavioral_mean",
                    "behavioral_ci95",
                    "gap_mean",
                    "gap_ci95",
                ])?;
            }
            for row in &rows {
                w.serialize(row)?;
            }
            let bytes = w.into_inner().map_err(|e| e.into_error())?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&rows).expect("rows serialize");
            s.push('\n');
            Ok(s)
        }
    }
}

pub fn write_comparison(rows: &[ComparisonRow], path: &Path, format: OutputFormat) -> Result<(), HarnessError> {
    let text = render_comparison(rows, format).map_err(|source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    write_file(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_against_approximation_at_large_n() {
        let rows = compare(GameConfig::new(1_000_000, 2), 0, 0, None).unwrap();
        assert!((rows[0].exact_f - 0.864665).abs() < 1e-6);
        assert!((rows[0].approx_f - 0.8646647).abs() < 1e-7);
        assert!((rows[0].exact_f - rows[0].approx_f).abs() < 1e-5);
        assert!(rows[0].counting_mean.is_none());
    }

    #[test]
    fn degenerate_population() {
        let rows = compare(GameConfig::new(2, 2), 50, 1, Some(2)).unwrap();
        let r = &rows[0];
        assert_eq!(r.exact_f, 1.0);
        assert_eq!(r.approx_f, 1.0);
        assert_eq!(r.counting_mean, Some(1.0));
        assert_eq!(r.behavioral_mean, Some(1.0));
        assert_eq!(r.gap_mean, Some(0.0));
    }

    #[test]
    fn behavioral_within_counting_bound() {
        let rows = compare(GameConfig::new(100, 2), 2000, 7, None).unwrap();
        let r = &rows[0];
        let (b, c) = (r.behavioral_mean.unwrap(), r.counting_mean.unwrap());
        assert!(b <= c + 2.0 * r.counting_ci95.unwrap());
        assert!(r.gap_mean.unwrap() <= 0.0);
        assert_eq!(rows.last().unwrap().counting_mean, Some(1.0));
    }

    #[test]
    fn csv_layout() {
        let rows = compare(GameConfig::new(100, 2), 0, 0, None).unwrap();
        let csv = render_comparison(&rows, OutputFormat::Csv).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "day,exact_f,approx_f,counting_mean,counting_ci95,behavioral_mean,behavioral_ci95,gap_mean,gap_ci95"
        );
        assert_eq!(lines.next().unwrap(), "1,0.867380444,0.864664717,,,,,,");
    }
}
