//! Trajectory CSV and JSON outputs.
//!
//! The CSV has one header row and one row per logged sample:
//! `t, q0_x.., q0dot_x.., q1_x.., …, qN_x.., u1_1.., …, uN_m.., e1_x.., …, eN_x.., P, V`.
//! Agents are numbered from 1. Axes are `x, y, z` when `n ≤ 3` and `1..n` otherwise.
//! Floats use Rust's shortest round-trip formatting; `P` and `V` are empty when unavailable.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sim::TrajectoryLog;

pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const METRICS_JSON: &str = "metrics.json";
pub const CERTIFICATE_JSON: &str = "certificate.json";

pub fn axis_name(k: usize, n: usize) -> String {
    if n <= 3 {
        ["x", "y", "z"][k].to_string()
    } else {
        (k + 1).to_string()
    }
}

pub fn trajectory_header(log: &TrajectoryLog) -> Vec<String> {
    let n = log.dim;
    let axes: Vec<String> = (0..n).map(|k| axis_name(k, n)).collect();
    let mut h = vec!["t".to_string()];
    h.extend(axes.iter().map(|a| format!("q0_{a}")));
    h.extend(axes.iter().map(|a| format!("q0dot_{a}")));
    for i in 1..=log.agents {
        h.extend(axes.iter().map(|a| format!("q{i}_{a}")));
    }
    let input_dims: Vec<usize> = log
        .samples
        .first()
        .map(|s| s.u.iter().map(Vec::len).collect())
        .unwrap_or_else(|| vec![n; log.agents]);
    for (i, m) in input_dims.iter().enumerate() {
        h.extend((1..=*m).map(|k| format!("u{}_{k}", i + 1)));
    }
    for i in 1..=log.agents {
        h.extend(axes.iter().map(|a| format!("e{i}_{a}")));
    }
    h.push("P".into());
    h.push("V".into());
    h
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

/// Writes the trajectory CSV. `pv` holds the `P` and `V` traces, one value per sample.
pub fn write_trajectory_csv<W: Write>(
    writer: W,
    log: &TrajectoryLog,
    pv: Option<(&[f64], &[f64])>,
) -> Result<()> {
    if let Some((p, v)) = pv {
        if p.len() != log.len() || v.len() != log.len() {
            return Err(Error::validation("P/V traces do not match the log length"));
        }
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(trajectory_header(log))?;
    let mut row = Vec::new();
    for (k, s) in log.samples.iter().enumerate() {
        row.clear();
        row.push(fmt(s.t));
        row.extend(s.q0.iter().chain(&s.q0dot).chain(&s.q).map(|&x| fmt(x)));
        row.extend(s.u.iter().flatten().map(|&x| fmt(x)));
        row.extend(s.errors.e.iter().map(|&x| fmt(x)));
        match pv {
            Some((p, v)) => {
                row.push(fmt(p[k]));
                row.push(fmt(v[k]));
            }
            None => {
                row.push(String::new());
                row.push(String::new());
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trajectory_csv(
    path: impl AsRef<Path>,
    log: &TrajectoryLog,
    pv: Option<(&[f64], &[f64])>,
) -> Result<()> {
    write_trajectory_csv(File::create(path)?, log, pv)
}

pub fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// A parsed trajectory CSV. Empty cells read as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub agents: usize,
    pub dim: usize,
}

impl TrajectoryTable {
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.first().map(String::as_str) != Some("t") {
            return Err(Error::validation("trajectory CSV must start with a 't' column"));
        }
        let dim = header
            .iter()
            .filter(|h| h.starts_with("q0_"))
            .count();
        if dim == 0 {
            return Err(Error::validation("trajectory CSV has no q0_ columns"));
        }
        let mut agents = 0;
        while header.iter().any(|h| *h == format!("e{}_{}", agents + 1, axis_name(0, dim))) {
            agents += 1;
        }
        if agents == 0 {
            return Err(Error::validation("trajectory CSV has no agent error columns"));
        }
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(Error::validation(format!(
                    "row {} has {} fields, header has {}",
                    line + 1,
                    rec.len(),
                    header.len()
                )));
            }
            let row = rec
                .iter()
                .map(|f| {
                    if f.is_empty() {
                        Ok(f64::NAN)
                    } else {
                        f.parse::<f64>().map_err(|_| {
                            Error::validation(format!("row {}: '{f}' is not a number", line + 1))
                        })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Self {
            header,
            rows,
            agents,
            dim,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| {
            Error::validation(format!("cannot open {}: {e}", path.display()))
        })?;
        Self::read(file)
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::validation(format!("trajectory CSV has no '{name}' column")))?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        self.column("t")
    }

    /// Rows of `prefix{axis}` columns, e.g. `q3_` or `e1_`.
    pub fn vectors(&self, prefix: &str) -> Result<Vec<Vec<f64>>> {
        let cols = (0..self.dim)
            .map(|k| self.column(&format!("{prefix}{}", axis_name(k, self.dim))))
            .collect::<Result<Vec<_>>>()?;
        Ok((0..self.rows.len())
            .map(|r| cols.iter().map(|c| c[r]).collect())
            .collect())
    }

    /// `‖eᵢ(t)‖` for 1-based agent `i`.
    pub fn error_norms(&self, agent: usize) -> Result<Vec<f64>> {
        Ok(self
            .vectors(&format!("e{agent}_"))?
            .iter()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_names() {
        assert_eq!(axis_name(2, 3), "z");
        assert_eq!(axis_name(3, 5), "4");
    }

    #[test]
    fn header_only_reads_as_empty() {
        let t = TrajectoryTable::read("t,q0_x,e1_x,P,V\n".as_bytes()).unwrap();
        assert!(t.rows.is_empty());
        assert_eq!((t.agents, t.dim), (1, 1));
    }

    #[test]
    fn malformed_rows_are_rejected() {
        assert!(TrajectoryTable::read("t,q0_x,e1_x\n0,1\n".as_bytes()).is_err());
        assert!(TrajectoryTable::read("t,q0_x,e1_x\n0,1,abc\n".as_bytes()).is_err());
        assert!(TrajectoryTable::read("x,y\n".as_bytes()).is_err());
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 123456789.12345679] {
            assert_eq!(fmt(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
