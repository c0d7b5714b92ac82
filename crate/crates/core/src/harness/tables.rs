use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{fmt_sig, write_file, HarnessError};
use crate::analytics::{trajectory, ModelParams};

const TABLE_DIGITS: usize = 7;
const TABLE_HORIZON: u32 = 1000;

/// One day of the expected-value recurrence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableRow {
    pub day: u32,
    pub n_t: f64,
    pub vp: f64,
    pub a_s: f64,
    pub a_u: f64,
    pub f: f64,
}

/// Rows until utilization reaches 1.
pub fn table_rows(n: f64, m: u32) -> Result<Vec<TableRow>, HarnessError> {
    trajectory_rows(n, m, TABLE_HORIZON)
}

/// Rows until utilization reaches 1 or `horizon` days have passed.
pub fn trajectory_rows(n: f64, m: u32, horizon: u32) -> Result<Vec<TableRow>, HarnessError> {
    let traj = trajectory(ModelParams::new(n, m)?, horizon)?;
    Ok(traj
        .days
        .iter()
        .map(|d| TableRow {
            day: d.t,
            n_t: d.n_t,
            vp: d.vp,
            a_s: d.a_s,
            a_u: d.a_u,
            f: d.f,
        })
        .collect())
}

/// CSV with header `day,n_t,vp,a_s,a_u,f`, floats to 7 significant digits.
pub fn write_table(rows: &[TableRow]) -> String {
    let mut out = String::from("day,n_t,vp,a_s,a_u,f\n");
    for r in rows {
        let cells = [r.n_t, r.vp, r.a_s, r.a_u, r.f].map(|x| fmt_sig(x, TABLE_DIGITS));
        out.push_str(&format!("{},{}\n", r.day, cells.join(",")));
    }
    out
}

fn file_name(m: u32, n: f64) -> String {
    if n.fract() == 0.0 && n < 1e18 {
        format!("table_m{m}_n{}.csv", n as u64)
    } else {
        format!("table_m{m}_n{n}.csv")
    }
}

/// Writes `table_m{m}_n{n}.csv` for every `n` and returns the paths written.
pub fn reproduce_tables(m: u32, ns: &[f64], out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut written = Vec::with_capacity(ns.len());
    for &n in ns {
        let rows = table_rows(n, m)?;
        let path = out_dir.join(file_name(m, n));
        write_file(&path, write_table(&rows).as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

/// The reference table sets: m = 2 at four population sizes and m = 3 at 10⁹.
pub fn default_table_sets() -> Vec<(u32, Vec<f64>)> {
    vec![(2, vec![1e2, 1e3, 1e6, 1e9]), (3, vec![1e9])]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_rows() {
        let t = write_table(&table_rows(100.0, 2).unwrap());
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "1,100.0000,0.1326196,86.73804,13.26196,0.8673804");
        assert!(lines[2].ends_with(",0.9848263"));
        assert!(lines[3].ends_with(",1.000000"));
        assert_eq!(table_rows(1e9, 2).unwrap().len(), 11);
        assert_eq!(table_rows(1e9, 3).unwrap().len(), 8);
    }

    #[test]
    fn table_files() {
        let dir = tempfile::tempdir().unwrap();
        let paths = reproduce_tables(2, &[100.0, 1e9], dir.path()).unwrap();
        let names: Vec<String> = paths
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, ["table_m2_n100.csv", "table_m2_n1000000000.csv"]);
        assert!(std::fs::read_to_string(&paths[1]).unwrap().starts_with("day,n_t,vp,a_s,a_u,f\n"));
    }

    #[test]
    fn invalid_parameters() {
        assert!(table_rows(0.0, 2).is_err());
        assert!(table_rows(10.0, 0).is_err());
    }
}
