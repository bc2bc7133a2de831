//! Constraint check of a complete plan.

use std::fmt;

use serde::Serialize;

use crate::channel::Position2D;
use crate::config::MissionConfig;
use crate::planner::Plan;
use crate::psr::ZETA_CAP;
use crate::rates::harvested_power;

/// Absolute slack on distances; power and harvesting checks use the same
/// slack relative to their limits.
pub const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub constraint: &'static str,
    pub slot: Option<usize>,
    /// Amount by which the constraint is exceeded.
    pub magnitude: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.slot {
            Some(n) => write!(f, "{} violated at slot {} by {:.3e}", self.constraint, n, self.magnitude),
            None => write!(f, "{} violated by {:.3e}", self.constraint, self.magnitude),
        }
    }
}

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn excess(&mut self, constraint: &'static str, slot: Option<usize>, excess: f64) {
        if !(excess <= SLACK) {
            self.flag(constraint, slot, excess);
        }
    }

    fn flag(&mut self, constraint: &'static str, slot: Option<usize>, magnitude: f64) {
        self.out.push(Violation {
            constraint,
            slot,
            magnitude: if magnitude.is_nan() { f64::INFINITY } else { magnitude },
        });
    }

    fn path(
        &mut self,
        q: &[Position2D],
        start: Position2D,
        end: Position2D,
        cfg: &MissionConfig,
        names: [&'static str; 4],
    ) {
        let d = cfg.d_step_max;
        self.excess(names[0], Some(0), q[0].distance(start));
        for n in 1..q.len() {
            self.excess(names[1], Some(n), q[n].distance(q[n - 1]) - d);
        }
        let last = q.len() - 1;
        self.excess(names[2], Some(last), q[last].distance(end) - d);
        for (n, p) in q.iter().enumerate() {
            self.excess(names[3], Some(n), p.distance(cfg.geometry.w_d) - cfg.geometry.r_fly);
        }
    }
}

/// Lists every violated constraint. Empty means the plan is feasible.
pub fn validate(plan: &Plan, cfg: &MissionConfig) -> Vec<Violation> {
    let mut c = Checker { out: Vec::new() };
    let n = cfg.n_slots;
    if !plan.is_consistent() || plan.len() != n || n == 0 {
        c.excess("slot count", None, f64::INFINITY);
        return c.out;
    }
    let finite = plan.p_s.iter().chain(&plan.p_j).chain(&plan.zeta).all(|v| v.is_finite())
        && plan.q_s.iter().chain(&plan.q_j).all(|p| p.is_finite());
    if !finite {
        c.excess("finite values", None, f64::INFINITY);
        return c.out;
    }
    let scheme = cfg.scheme;
    let (bs, bj) = (&cfg.source_budget, &cfg.jammer_budget);

    let mean_s = plan.p_s.iter().sum::<f64>() / n as f64;
    c.excess("C1", None, (mean_s - bs.p_avg) / bs.p_avg);
    for (k, &p) in plan.p_s.iter().enumerate() {
        c.excess("C2", Some(k), (-p).max((p - bs.p_peak) / bs.p_peak));
    }
    if scheme.has_jammer() {
        let mean_j = plan.p_j.iter().sum::<f64>() / n as f64;
        c.excess("C3", None, (mean_j - bj.p_avg) / bj.p_avg);
        for (k, &p) in plan.p_j.iter().enumerate() {
            c.excess("C4", Some(k), (-p).max((p - bj.p_peak) / bj.p_peak));
        }
    } else {
        for (k, &p) in plan.p_j.iter().enumerate() {
            if p != 0.0 {
                c.flag("C4", Some(k), p.abs());
            }
        }
    }

    let e = &cfg.endpoints;
    c.path(&plan.q_s, e.source_start, e.source_end, cfg, ["C5", "C6", "C7", "C12"]);
    if scheme.has_jammer() {
        c.path(&plan.q_j, e.jammer_start, e.jammer_end, cfg, ["C8", "C9", "C10", "C13"]);
        for k in 0..n {
            c.excess("C11", Some(k), cfg.geometry.d_safe - plan.q_s[k].distance(plan.q_j[k]));
        }
    }

    for (k, &z) in plan.zeta.iter().enumerate() {
        if z < 0.0 {
            c.flag("C14", Some(k), -z);
        } else if z >= 1.0 {
            c.flag("C14", Some(k), z - ZETA_CAP);
        }
    }
    if cfg.psi_h > 0.0 {
        for k in 0..n {
            let mut s = plan.slot(k);
            if !scheme.has_jammer() {
                s.p_j = 0.0;
            }
            let got = harvested_power(&s, &cfg.geometry, &cfg.channel, cfg.eta);
            c.excess("C15", Some(k), (cfg.psi_h - got) / cfg.psi_h);
        }
    }
    c.out
}
