//! Trajectories, their CSV form and drift summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub step: usize,
    /// Always `step as f64 * dt`.
    pub time: f64,
    pub state: Vec<f64>,
    pub h: f64,
    pub casimirs: Vec<f64>,
    pub newton_iters: usize,
}

/// Row 0 is the initial point.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub dt: f64,
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryRecord {
    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, |r| r.state.len())
    }

    pub fn casimir_count(&self) -> usize {
        self.rows.first().map_or(0, |r| r.casimirs.len())
    }

    pub fn final_state(&self) -> &[f64] {
        self.rows.last().map_or(&[], |r| &r.state)
    }

    pub fn header(&self) -> String {
        let mut cols = vec!["step".to_string(), "time".to_string()];
        cols.extend((0..self.dim()).map(|i| format!("x{i}")));
        cols.push("H".into());
        cols.extend((0..self.casimir_count()).map(|i| format!("C{i}")));
        cols.push("newton_iters".into());
        cols.join(",")
    }

    /// Fixed column order `step,time,x0..,H,C0..,newton_iters`; floats carry
    /// 17 significant digits so that parsing the file back is exact.
    pub fn to_csv(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        for r in &self.rows {
            write!(out, "{},{}", r.step, fmt_f64(r.time)).unwrap();
            for v in r.state.iter().chain([&r.h]).chain(&r.casimirs) {
                write!(out, ",{}", fmt_f64(*v)).unwrap();
            }
            writeln!(out, ",{}", r.newton_iters).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad =
            |line: usize, msg: &str| HarnessError::config(format!("trajectory line {line}: {msg}"));
        let mut lines = text.lines();
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad(1, "empty file"))?
            .split(',')
            .collect();
        let n = header.iter().filter(|c| c.starts_with('x')).count();
        let m = header.iter().filter(|c| c.starts_with('C')).count();
        let want = 4 + n + m;
        if header.len() != want
            || header[0] != "step"
            || header[1] != "time"
            || header[2 + n] != "H"
        {
            return Err(bad(1, "unexpected header"));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let lno = i + 2;
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != want {
                return Err(bad(lno, "wrong number of fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(lno, "malformed number"));
            let int = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| bad(lno, "malformed integer"))
            };
            let vals = f[2..want - 1]
                .iter()
                .map(|s| num(s))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(TrajectoryRow {
                step: int(f[0])?,
                time: num(f[1])?,
                state: vals[..n].to_vec(),
                h: vals[n],
                casimirs: vals[n + 1..].to_vec(),
                newton_iters: int(f[want - 1])?,
            });
        }
        let dt = match rows.get(1) {
            Some(r) if r.step > 0 => r.time / r.step as f64,
            _ => 0.0,
        };
        Ok(Self { dt, rows })
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// SHA-256 over `blob <len>\0<bytes>`, the framing git uses for blobs.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub config: RunConfig,
    pub scheme: String,
    pub columns: Vec<String>,
    pub rows: usize,
    pub trajectory_hash: String,
}

impl Metadata {
    pub fn new(config: &RunConfig, scheme: String, record: &TrajectoryRecord, csv: &str) -> Self {
        Self {
            config: config.clone(),
            scheme,
            columns: record.header().split(',').map(String::from).collect(),
            rows: record.rows.len(),
            trajectory_hash: content_hash(csv.as_bytes()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metadata always serialises");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub steps: usize,
    pub max_abs_dh: f64,
    /// One entry per Casimir column.
    pub max_abs_dc: Vec<f64>,
    /// Newton iterations per step → number of steps (row 0 excluded).
    pub newton_histogram: BTreeMap<usize, usize>,
    /// `ln ‖x_N‖`, computed without overflow.
    pub final_log_norm: f64,
}

pub fn drift_report(record: &TrajectoryRecord) -> DriftReport {
    let Some(first) = record.rows.first() else {
        return DriftReport {
            steps: 0,
            max_abs_dh: 0.0,
            max_abs_dc: Vec::new(),
            newton_histogram: BTreeMap::new(),
            final_log_norm: f64::NEG_INFINITY,
        };
    };
    let mut max_abs_dh: f64 = 0.0;
    let mut max_abs_dc = vec![0.0f64; first.casimirs.len()];
    let mut newton_histogram = BTreeMap::new();
    for r in &record.rows[1..] {
        max_abs_dh = max_abs_dh.max((r.h - first.h).abs());
        for (m, (c, c0)) in max_abs_dc
            .iter_mut()
            .zip(r.casimirs.iter().zip(&first.casimirs))
        {
            *m = m.max((c - c0).abs());
        }
        *newton_histogram.entry(r.newton_iters).or_insert(0) += 1;
    }
    DriftReport {
        steps: record.rows.len() - 1,
        max_abs_dh,
        max_abs_dc,
        newton_histogram,
        final_log_norm: log_norm(record.final_state()),
    }
}

/// `ln ‖x‖₂`, scaled by the largest entry.
pub fn log_norm(x: &[f64]) -> f64 {
    let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m == 0.0 || !m.is_finite() {
        return m.ln();
    }
    m.ln() + 0.5 * x.iter().map(|v| (v / m).powi(2)).sum::<f64>().ln()
}
