//! One-parameter sweeps over independent optimization runs.

use std::path::Path;
use std::str::FromStr;

use crate::channel::Position2D;
use crate::config::MissionConfig;
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::planner::optimize;
use crate::rates::Scheme;
use crate::report::{fmt_f64, write_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Eavesdropper uncertainty radius, distance units.
    EveRadius,
    /// Destination-to-eavesdropper distance along the x axis.
    EveDistance,
    /// Mission duration in seconds; the per-slot step grows with it so the
    /// top speed stays fixed.
    MissionTime,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::EveRadius => "eve_radius",
            SweepParam::EveDistance => "eve_distance",
            SweepParam::MissionTime => "mission_time",
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eve_radius" => Ok(SweepParam::EveRadius),
            "eve_distance" => Ok(SweepParam::EveDistance),
            "mission_time" => Ok(SweepParam::MissionTime),
            _ => Err(Error::InvalidArgument(format!(
                "unknown sweep parameter '{s}' (expected eve_radius, eve_distance or mission_time)"
            ))),
        }
    }
}

/// Copy of `cfg` with one parameter replaced, validated.
pub fn apply(cfg: &MissionConfig, param: SweepParam, value: f64) -> Result<MissionConfig> {
    let mut c = cfg.clone();
    match param {
        SweepParam::EveRadius => c.geometry.r_e = value,
        SweepParam::EveDistance => c.geometry.w_e_hat = c.geometry.w_d + Position2D::new(value, 0.0),
        SweepParam::MissionTime => {
            c.d_step_max = cfg.d_step_max * value / cfg.mission_time_s;
            c.mission_time_s = value;
        }
    }
    c.validate()?;
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub scheme: Scheme,
    /// `ok`, `max_iters`, or the error message of a failed point.
    pub status: String,
    pub asr: Option<f64>,
    pub ahe: Option<f64>,
    pub mean_isee: Option<f64>,
    pub iterations: Option<usize>,
}

fn run_point(cfg: &MissionConfig, param: SweepParam, value: f64, scheme: Scheme) -> SweepRow {
    let mut row = SweepRow {
        value,
        scheme,
        status: String::new(),
        asr: None,
        ahe: None,
        mean_isee: None,
        iterations: None,
    };
    match apply(&cfg.clone().with_scheme(scheme), param, value).and_then(|c| optimize(&c)) {
        Ok(r) => {
            row.status = if r.converged() { "ok" } else { "max_iters" }.into();
            row.asr = Some(r.metrics.asr);
            row.ahe = Some(r.metrics.ahe);
            row.mean_isee = r.metrics.mean_isee();
            row.iterations = Some(r.trace.iterations);
        }
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

/// Runs every (value, scheme) pair, up to `workers` at a time. Rows come
/// back ordered by value, then by scheme as given.
pub fn sweep(
    cfg: &MissionConfig,
    param: SweepParam,
    values: &[f64],
    schemes: &[Scheme],
    exec: Exec,
    workers: usize,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() || schemes.is_empty() {
        return Err(Error::Empty("sweep needs at least one value and one scheme"));
    }
    let points: Vec<(f64, Scheme)> = values
        .iter()
        .flat_map(|&v| schemes.iter().map(move |&s| (v, s)))
        .collect();
    Ok(exec.map_with_workers(workers, &points, |&(v, s)| run_point(cfg, param, v, s)))
}

pub fn write_sweep_csv(path: &Path, param: SweepParam, rows: &[SweepRow]) -> Result<()> {
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_else(|| "undefined".into());
    let body = rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.value),
                r.scheme.to_string(),
                opt(r.asr),
                opt(r.ahe),
                opt(r.mean_isee),
                r.iterations.map(|i| i.to_string()).unwrap_or_default(),
                r.status.clone(),
            ]
        })
        .collect();
    write_csv(
        path,
        &[param.as_str(), "scheme", "asr", "ahe_w", "mean_isee", "iterations", "status"],
        body,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_parse_and_apply() {
        let cfg = MissionConfig::default();
        assert_eq!("eve_radius".parse::<SweepParam>().unwrap(), SweepParam::EveRadius);
        assert!("altitude".parse::<SweepParam>().is_err());
        let c = apply(&cfg, SweepParam::EveDistance, 2.5).unwrap();
        assert_eq!(c.geometry.w_e_hat, Position2D::new(2.5, 0.0));
        let c = apply(&cfg, SweepParam::MissionTime, 4.0).unwrap();
        assert!((c.d_step_max - 2.0 * cfg.d_step_max).abs() < 1e-15);
        assert!(apply(&cfg, SweepParam::EveRadius, -1.0).is_err());
    }

    #[test]
    fn empty_sweep_rejected() {
        let cfg = MissionConfig::default();
        assert!(sweep(&cfg, SweepParam::EveRadius, &[], &Scheme::ALL, Exec::Sequential, 1).is_err());
    }
}
