//! Mission configuration: a flat TOML file whose omitted keys take the
//! reference-scenario defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{db_to_linear, dbm_to_milliwatts, dbm_to_watts, ChannelParams, Position2D};
use crate::error::{Error, Result};
use crate::power_source::PowerBudget;
use crate::rates::{Geometry, Scheme};
use crate::solver::SolverOptions;

/// Raw file contents. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scheme: Option<Scheme>,
    pub n_slots: Option<usize>,
    pub mission_time_s: Option<f64>,
    /// Total budget of both UAVs together, split equally.
    pub total_power_dbm: Option<f64>,
    pub papr: Option<f64>,
    pub n0_dbm: Option<f64>,
    pub psi_h_dbm: Option<f64>,
    pub eta: Option<f64>,
    pub gamma0_db: Option<f64>,
    pub alpha: Option<f64>,
    pub altitude: Option<f64>,
    /// Flying-zone radius in units of the altitude.
    pub zone_radius_factor: Option<f64>,
    pub eve_center: Option<[f64; 2]>,
    /// Eavesdropper uncertainty radius in units of the altitude.
    pub eve_radius_factor: Option<f64>,
    /// UAV separation in units of the altitude.
    pub safety_factor: Option<f64>,
    pub epsilon: Option<f64>,
    pub endpoints: Option<EndpointsFile>,
    pub d_step_max: Option<f64>,
    pub seed: Option<u64>,
    pub max_iters: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointsFile {
    pub source_start: Option<[f64; 2]>,
    pub source_end: Option<[f64; 2]>,
    pub jammer_start: Option<[f64; 2]>,
    pub jammer_end: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Endpoints {
    pub source_start: Position2D,
    pub source_end: Position2D,
    pub jammer_start: Position2D,
    pub jammer_end: Position2D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionConfig {
    pub scheme: Scheme,
    pub n_slots: usize,
    pub mission_time_s: f64,
    pub source_budget: PowerBudget,
    pub jammer_budget: PowerBudget,
    /// Harvesting target, watts.
    pub psi_h: f64,
    pub eta: f64,
    pub channel: ChannelParams,
    pub geometry: Geometry,
    pub endpoints: Endpoints,
    /// Maximum horizontal distance a UAV covers in one slot.
    pub d_step_max: f64,
    /// BCD stop threshold on the absolute ASR change, bits/s/Hz.
    pub epsilon: f64,
    pub max_iters: usize,
    pub sca_tol: f64,
    pub max_sca_iters: usize,
    pub solver: SolverOptions,
    pub seed: u64,
}

fn pt(a: [f64; 2]) -> Position2D {
    Position2D::new(a[0], a[1])
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self::from_file(&ConfigFile::default()).expect("defaults are valid").0
    }
}

impl MissionConfig {
    /// Slot duration in seconds.
    pub fn slot_duration(&self) -> f64 {
        self.mission_time_s / self.n_slots as f64
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    /// Builds a configuration from parsed file contents. Returns the
    /// configuration together with non-fatal warnings.
    pub fn from_file(f: &ConfigFile) -> Result<(Self, Vec<String>)> {
        let mut warnings = Vec::new();
        let scheme = f.scheme.unwrap_or(Scheme::Fuj);
        let n_slots = f.n_slots.unwrap_or(100);
        let altitude = f.altitude.unwrap_or(1.5);
        let r_fly = f.zone_radius_factor.unwrap_or(2.5) * altitude;
        let n0_dbm = f.n0_dbm.unwrap_or(-40.0);
        let papr = f.papr.unwrap_or(4.0);
        let total_w = dbm_to_watts(f.total_power_dbm.unwrap_or(20.0));
        let gamma0 = db_to_linear(f.gamma0_db.unwrap_or(40.0));
        if n_slots == 0 {
            return Err(Error::InvalidConfig("n_slots must be at least 1".into()));
        }

        if scheme == Scheme::Woj {
            let mut ignored = Vec::new();
            if f.safety_factor.is_some() {
                ignored.push("safety_factor");
            }
            if let Some(e) = &f.endpoints {
                if e.jammer_start.is_some() {
                    ignored.push("endpoints.jammer_start");
                }
                if e.jammer_end.is_some() {
                    ignored.push("endpoints.jammer_end");
                }
            }
            for k in ignored {
                warnings.push(format!("key '{k}' only affects the jammer and is ignored for scheme woj"));
            }
        }

        let ep = f.endpoints.clone().unwrap_or_default();
        let endpoints = Endpoints {
            source_start: ep.source_start.map(pt).unwrap_or(Position2D::new(-r_fly, 0.0)),
            source_end: ep.source_end.map(pt).unwrap_or(Position2D::new(r_fly, 0.0)),
            jammer_start: ep.jammer_start.map(pt).unwrap_or(Position2D::new(-0.8 * r_fly, 0.5 * r_fly)),
            jammer_end: ep.jammer_end.map(pt).unwrap_or(Position2D::new(0.8 * r_fly, 0.5 * r_fly)),
        };

        let channel = ChannelParams {
            alpha: f.alpha.unwrap_or(2.5),
            // γ0 is referenced to milliwatt powers
            beta_bar: gamma0 * dbm_to_milliwatts(n0_dbm),
            n0: dbm_to_watts(n0_dbm),
            altitude,
            ..ChannelParams::default()
        };
        let geometry = Geometry {
            w_d: Position2D::ORIGIN,
            w_e_hat: f.eve_center.map(pt).unwrap_or(Position2D::new(r_fly / 2.0, 0.0)),
            r_e: f.eve_radius_factor.unwrap_or(0.2) * altitude,
            r_fly,
            d_safe: f.safety_factor.unwrap_or(0.1) * altitude,
        };
        let cfg = MissionConfig {
            scheme,
            n_slots,
            mission_time_s: f.mission_time_s.unwrap_or(2.0),
            source_budget: PowerBudget::from_total(total_w / 2.0, n_slots, papr),
            jammer_budget: PowerBudget::from_total(total_w / 2.0, n_slots, papr),
            psi_h: dbm_to_watts(f.psi_h_dbm.unwrap_or(-20.0)),
            eta: f.eta.unwrap_or(0.7),
            channel,
            geometry,
            endpoints,
            d_step_max: f.d_step_max.unwrap_or(0.08 * altitude),
            epsilon: f.epsilon.unwrap_or(1e-2),
            max_iters: f.max_iters.unwrap_or(100),
            sca_tol: 1e-6,
            max_sca_iters: 50,
            solver: SolverOptions::default(),
            seed: f.seed.unwrap_or(0),
        };
        warnings.extend(cfg.validate()?);
        Ok((cfg, warnings))
    }

    pub fn from_toml_str(s: &str) -> Result<(Self, Vec<String>)> {
        let f: ConfigFile = toml::from_str(s).map_err(|e| Error::Parse {
            path: "<string>".into(),
            message: e.to_string(),
        })?;
        Self::from_file(&f)
    }

    /// Peak power of the whole network in one slot.
    pub fn peak_network_power(&self) -> f64 {
        let jammer = if self.scheme.has_jammer() { self.jammer_budget.p_peak } else { 0.0 };
        self.source_budget.p_peak + jammer
    }

    /// Largest flying radius for which the network peak power reaching the
    /// destination still covers the harvesting target; `None` when even a
    /// transmitter straight above the destination is not enough.
    pub fn feasibility_radius(&self) -> Option<f64> {
        let ch = &self.channel;
        let reach = (self.peak_network_power() * ch.beta_bar / self.psi_h).powf(2.0 / ch.alpha);
        let r2 = reach - ch.altitude * ch.altitude;
        (r2 >= 0.0).then(|| r2.sqrt())
    }

    /// Checks invariants; returns warnings for suspicious but legal values.
    pub fn validate(&self) -> Result<Vec<String>> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let mut warnings = Vec::new();
        self.channel.validate()?;
        if self.n_slots == 0 {
            return bad("n_slots must be at least 1".into());
        }
        if !(self.mission_time_s > 0.0 && self.mission_time_s.is_finite()) {
            return bad("mission_time_s must be positive".into());
        }
        if self.channel.altitude < 1.0 {
            return bad(format!(
                "altitude {} is below 1; the trajectory subproblems are only convex for altitudes of at least 1",
                self.channel.altitude
            ));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad("eta must lie in (0, 1]".into());
        }
        if !(self.psi_h >= 0.0 && self.psi_h.is_finite()) {
            return bad("harvesting target must be finite and non-negative".into());
        }
        for (name, b) in [("source", &self.source_budget), ("jammer", &self.jammer_budget)] {
            if !(b.p_avg > 0.0 && b.p_peak >= b.p_avg) {
                return bad(format!("{name} budget needs positive power and papr >= 1"));
            }
        }
        let g = &self.geometry;
        if !(g.r_fly > 0.0 && g.r_e >= 0.0 && g.d_safe > 0.0) {
            return bad("zone radius and safety distance must be positive, eavesdropper radius non-negative".into());
        }
        if !(self.d_step_max > 0.0) {
            return bad("d_step_max must be positive".into());
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive".into());
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        match self.feasibility_radius() {
            None => {
                return bad(format!(
                    "harvesting target {:.3e} W cannot be met even from straight above the destination (no feasibility radius exists)",
                    self.psi_h
                ))
            }
            Some(r) if g.r_fly > r * (1.0 + 1e-12) => {
                return bad(format!(
                    "flying radius {:.4} exceeds the feasibility radius {:.4} implied by the peak power and harvesting target",
                    g.r_fly, r
                ))
            }
            _ => {}
        }
        let e = &self.endpoints;
        let mut pts = vec![("source_start", e.source_start), ("source_end", e.source_end)];
        if self.scheme.has_jammer() {
            pts.push(("jammer_start", e.jammer_start));
            pts.push(("jammer_end", e.jammer_end));
        }
        for (name, p) in pts {
            if !p.is_finite() || p.distance(g.w_d) > g.r_fly * (1.0 + 1e-12) {
                return bad(format!("endpoint {name} lies outside the flying zone"));
            }
        }
        if self.scheme.has_jammer() && e.source_start.distance(e.jammer_start) < g.d_safe {
            return bad("UAV start points are closer than the safety distance".into());
        }
        if self.d_step_max > self.channel.altitude / 2.0 {
            warnings.push(format!(
                "d_step_max {} is large relative to the altitude {}; the per-slot channel is assumed nearly constant",
                self.d_step_max, self.channel.altitude
            ));
        }
        Ok(warnings)
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<(MissionConfig, Vec<String>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let f: ConfigFile = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    MissionConfig::from_file(&f)
}
