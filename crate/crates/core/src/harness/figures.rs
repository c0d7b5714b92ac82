use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{round_sig, write_file, HarnessError, OutputFormat};
use crate::analytics::{approx_utilization, trajectory, ModelParams};

const FLOAT_DIGITS: usize = 9;

/// A curve to emit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeriesSpec {
    /// Exact expected utilization on days `1..=days`, held at 1 once reached.
    Exact { n: f64, m: u32, days: u32 },
    /// `1 − e^{−tm}` at `samples` evenly spaced `t` in `[from, to]`.
    Approx { m: u32, from: f64, to: f64, samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Exact,
    Approx,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub label: String,
    pub kind: SeriesKind,
    pub n: Option<f64>,
    pub m: u32,
    /// `(t, utilization)` pairs.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FigureData {
    pub series: Vec<Series>,
}

/// Four `m = 2` populations and `n = 10⁹, m = 3`, days 1..11.
pub fn figure10_specs() -> Vec<SeriesSpec> {
    [(1e2, 2), (1e3, 2), (1e6, 2), (1e9, 2), (1e9, 3)]
        .into_iter()
        .map(|(n, m)| SeriesSpec::Exact { n, m, days: 11 })
        .collect()
}

/// The smooth approximation for `m` on `t ∈ [0.4, 10]`, 100 samples.
pub fn figure_approx_specs(m: u32) -> Vec<SeriesSpec> {
    vec![SeriesSpec::Approx {
        m,
        from: 0.4,
        to: 10.0,
        samples: 100,
    }]
}

fn label_n(n: f64) -> String {
    if n.fract() == 0.0 && n < 1e18 {
        (n as u64).to_string()
    } else {
        n.to_string()
    }
}

fn build(spec: &SeriesSpec) -> Result<Series, HarnessError> {
    match *spec {
        SeriesSpec::Exact { n, m, days } => {
            let traj = trajectory(ModelParams::new(n, m)?, days.max(1))?;
            let points = (1..=days)
                .map(|t| (t as f64, traj.utilization(t).unwrap_or(f64::NAN)))
                .collect();
            Ok(Series {
                label: format!("exact_n{}_m{m}", label_n(n)),
                kind: SeriesKind::Exact,
                n: Some(n),
                m,
                points,
            })
        }
        SeriesSpec::Approx { m, from, to, samples } => {
            if m == 0 || !from.is_finite() || !to.is_finite() || to < from {
                return Err(HarnessError::InvalidConfig(format!(
                    "approximation series needs m ≥ 1 and from ≤ to (got m={m}, [{from}, {to}])"
                )));
            }
            let points = (0..samples)
                .map(|i| {
                    let t = if samples == 1 {
                        from
                    } else {
                        from + (to - from) * i as f64 / (samples - 1) as f64
                    };
                    (t, approx_utilization(m, t))
                })
                .collect();
            Ok(Series {
                label: format!("approx_m{m}"),
                kind: SeriesKind::Approx,
                n: None,
                m,
                points,
            })
        }
    }
}

pub fn emit_figure_data(specs: &[SeriesSpec]) -> Result<FigureData, HarnessError> {
    Ok(FigureData {
        series: specs.iter().map(build).collect::<Result<_, _>>()?,
    })
}

#[derive(Serialize)]
struct PointRow<'a> {
    series: &'a str,
    kind: SeriesKind,
    n: Option<f64>,
    m: u32,
    t: f64,
    utilization: f64,
}

impl FigureData {
    /// Long-format CSV: `series,kind,n,m,t,utilization`.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(["series", "kind", "n", "m", "t", "utilization"])?;
        for s in &self.series {
            for &(t, f) in &s.points {
                let row = PointRow {
                    series: &s.label,
                    kind: s.kind,
                    n: s.n,
                    m: s.m,
                    t: round_sig(t, FLOAT_DIGITS),
                    utilization: round_sig(f, FLOAT_DIGITS),
                };
                w.serialize(row)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> String {
        let rounded = FigureData {
            series: self
                .series
                .iter()
                .map(|s| Series {
                    points: s
                        .points
                        .iter()
                        .map(|&(t, f)| (round_sig(t, FLOAT_DIGITS), round_sig(f, FLOAT_DIGITS)))
                        .collect(),
                    ..s.clone()
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&rounded).expect("figure data serializes");
        s.push('\n');
        s
    }
}

pub fn write_figure_data(data: &FigureData, path: &Path, format: OutputFormat) -> Result<(), HarnessError> {
    let text = match format {
        OutputFormat::Csv => data.to_csv().map_err(|source| HarnessError::Csv {
            path: path.to_path_buf(),
            source,
        })?,
        OutputFormat::Json => data.to_json(),
    };
    write_file(path, text.as_bytes())
}
