//! Run results and their on-disk form: `slots.csv`, `summary.json` and
//! `trace.csv`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::MissionConfig;
use crate::error::{Error, Result};
use crate::planner::{ConvergenceTrace, Plan, Termination, Violation};
use crate::rates::{metrics, Metrics, Scheme};

pub const SLOTS_HEADER: [&str; 13] = [
    "slot",
    "time_s",
    "qs_x",
    "qs_y",
    "qj_x",
    "qj_y",
    "p_s_w",
    "p_j_w",
    "zeta",
    "isr",
    "harvested_w",
    "isee",
    "harvest_eff",
];

/// Twelve significant digits, locale independent.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.11e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_else(|| "undefined".into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub scheme: Scheme,
    pub slot_duration: f64,
    pub plan: Plan,
    pub metrics: Metrics,
    pub trace: ConvergenceTrace,
    pub violations: Vec<Violation>,
}

/// Aggregates written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scheme: Scheme,
    pub n_slots: usize,
    /// Average secrecy rate with per-slot clamping, bits/s/Hz.
    pub asr: f64,
    pub asr_unclamped: f64,
    /// Average harvested power, watts.
    pub ahe_w: f64,
    pub harvest_ratio: Option<f64>,
    pub mean_isee: Option<f64>,
    pub iterations: usize,
    pub terminated_by: Termination,
    pub violations: Vec<Violation>,
}

impl RunReport {
    pub fn new(cfg: &MissionConfig, plan: Plan, trace: ConvergenceTrace, violations: Vec<Violation>) -> Result<Self> {
        let metrics = metrics(&plan, cfg.scheme, &cfg.geometry, &cfg.channel, cfg.eta)?;
        Ok(Self {
            scheme: cfg.scheme,
            slot_duration: cfg.slot_duration(),
            plan,
            metrics,
            trace,
            violations,
        })
    }

    pub fn converged(&self) -> bool {
        self.trace.terminated_by == Termination::Epsilon
    }

    pub fn summary(&self) -> Summary {
        Summary {
            scheme: self.scheme,
            n_slots: self.plan.len(),
            asr: self.metrics.asr,
            asr_unclamped: self.metrics.asr_unclamped,
            ahe_w: self.metrics.ahe,
            harvest_ratio: self.metrics.harvest_ratio,
            mean_isee: self.metrics.mean_isee(),
            iterations: self.trace.iterations,
            terminated_by: self.trace.terminated_by,
            violations: self.violations.clone(),
        }
    }

    /// Rows of `slots.csv`, header excluded.
    pub fn slot_rows(&self) -> Vec<Vec<String>> {
        let p = &self.plan;
        self.metrics
            .slots
            .iter()
            .enumerate()
            .map(|(n, m)| {
                vec![
                    n.to_string(),
                    fmt_f64(n as f64 * self.slot_duration),
                    fmt_f64(p.q_s[n].x),
                    fmt_f64(p.q_s[n].y),
                    fmt_f64(p.q_j[n].x),
                    fmt_f64(p.q_j[n].y),
                    fmt_f64(p.p_s[n]),
                    fmt_f64(p.p_j[n]),
                    fmt_f64(p.zeta[n]),
                    fmt_f64(m.isr),
                    fmt_f64(m.harvested_w),
                    fmt_opt(m.isee),
                    fmt_opt(m.harvest_efficiency),
                ]
            })
            .collect()
    }

    pub fn write_slots_csv(&self, path: &Path) -> Result<()> {
        write_csv(path, &SLOTS_HEADER, self.slot_rows())
    }

    pub fn write_trace_csv(&self, path: &Path) -> Result<()> {
        let rows = self
            .trace
            .asr
            .iter()
            .enumerate()
            .map(|(i, a)| vec![i.to_string(), fmt_f64(*a)])
            .collect();
        write_csv(path, &["iteration", "asr"], rows)
    }

    pub fn write_summary_json(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.summary()).expect("summary serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Writes all three artifacts into `dir`, creating it if needed.
    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let paths = [dir.join("slots.csv"), dir.join("summary.json"), dir.join("trace.csv")];
        self.write_slots_csv(&paths[0])?;
        self.write_summary_json(&paths[1])?;
        self.write_trace_csv(&paths[2])?;
        Ok(paths.to_vec())
    }
}

pub(crate) fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
