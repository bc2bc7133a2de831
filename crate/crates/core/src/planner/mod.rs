//! Initialization and the block-coordinate-descent loop over source power,
//! jammer power, power splitting, source path and jammer path.

mod baseline;
mod plan;
mod validate;

use log::{debug, warn};
use serde::Serialize;

pub use baseline::{baseline_trajectory, hover_path};
pub use plan::Plan;
pub use validate::{validate, Violation, SLACK};

use crate::channel::path_gain;
use crate::config::MissionConfig;
use crate::error::{Error, Result};
use crate::power_jammer::solve_jammer_power;
use crate::power_source::solve_source_power;
use crate::psr::solve_psr;
use crate::rates::average_secrecy;
use crate::report::RunReport;
use crate::trajectory::{update_trajectory, Uav};

/// Block names in update order.
pub const BLOCKS: [&str; 5] = [
    "source power",
    "jammer power",
    "power splitting",
    "source trajectory",
    "jammer trajectory",
];

/// Relative tolerance of the budget multiplier searches.
const POWER_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Epsilon,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTrace {
    /// Unclamped average secrecy rate in bits/s/Hz: the initial value, then
    /// one entry per iteration.
    pub asr: Vec<f64>,
    /// Per iteration, the ASR change produced by each block.
    pub block_deltas: Vec<[f64; 5]>,
    pub iterations: usize,
    pub terminated_by: Termination,
}

impl ConvergenceTrace {
    pub fn final_asr(&self) -> f64 {
        *self.asr.last().expect("trace holds the initial value")
    }

    /// True when no iteration lowered the ASR by more than `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.asr.windows(2).all(|w| w[1] >= w[0] - slack)
    }
}

fn asr(plan: &Plan, cfg: &MissionConfig) -> Result<f64> {
    average_secrecy(plan, cfg.scheme, &cfg.geometry, &cfg.channel, false)
}

/// Source powers for the baseline: a common level, raised where needed to
/// reach the harvesting target with no power split to decoding, chosen so
/// the average budget is used exactly.
fn initial_source_powers(plan: &Plan, cfg: &MissionConfig) -> Result<Vec<f64>> {
    let ch = &cfg.channel;
    let g = &cfg.geometry;
    let budget = &cfg.source_budget;
    let floors: Vec<f64> = (0..plan.len())
        .map(|n| {
            let jam = if cfg.scheme.jams_destination() {
                plan.p_j[n] * ch.beta_bar * path_gain(plan.q_j[n], g.w_d, ch)
            } else {
                0.0
            };
            let need = cfg.psi_h / cfg.eta - ch.n0 - jam;
            (need / (ch.beta_bar * path_gain(plan.q_s[n], g.w_d, ch))).max(0.0)
        })
        .collect();
    for (slot, &f) in floors.iter().enumerate() {
        if f > budget.p_peak {
            return Err(Error::InfeasibleHarvest {
                slot,
                floor: f,
                peak: budget.p_peak,
            });
        }
    }
    let total = budget.total(plan.len());
    let used = |level: f64| floors.iter().map(|&f| f.max(level).min(budget.p_peak)).sum::<f64>();
    let needed = used(0.0);
    if needed > total {
        return Err(Error::InfeasibleBudget { needed, budget: total });
    }
    let (mut lo, mut hi) = (0.0, budget.p_peak);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if used(mid) <= total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(floors.iter().map(|&f| f.max(lo).min(budget.p_peak)).collect())
}

/// Feasible starting plan: baseline paths, evenly spread jamming power,
/// source power leveled above the harvesting floors and the matching
/// power-splitting ratios.
pub fn initialize(cfg: &MissionConfig) -> Result<Plan> {
    let (q_s, q_j) = baseline_trajectory(cfg)?;
    let n = cfg.n_slots;
    let p_j = if cfg.scheme.has_jammer() { cfg.jammer_budget.p_avg } else { 0.0 };
    let mut plan = Plan {
        p_s: vec![0.0; n],
        p_j: vec![p_j; n],
        zeta: vec![0.0; n],
        q_s,
        q_j,
    };
    plan.p_s = initial_source_powers(&plan, cfg)?;
    plan.zeta = solve_psr(&plan, cfg.scheme, &cfg.geometry, &cfg.channel, cfg.eta, cfg.psi_h);
    if let Some(v) = validate(&plan, cfg).first() {
        return Err(Error::InfeasibleMission(format!("initial plan: {v}")));
    }
    Ok(plan)
}

/// Applies `update` and keeps the result only if the ASR did not drop.
fn guarded(
    plan: &mut Plan,
    cfg: &MissionConfig,
    block: usize,
    update: impl FnOnce(&Plan) -> Result<Plan>,
) -> Result<f64> {
    let before = asr(plan, cfg)?;
    let next = update(plan)?;
    let after = asr(&next, cfg)?;
    if after >= before {
        *plan = next;
        Ok(after - before)
    } else {
        debug!("{} block would lower the ASR by {:.3e}; kept previous values", BLOCKS[block], before - after);
        Ok(0.0)
    }
}

/// One pass over the five blocks. Returns the updated plan and the ASR
/// change of each block (zero for skipped blocks).
pub fn bcd_iterate(plan: &Plan, cfg: &MissionConfig) -> Result<(Plan, [f64; 5])> {
    let scheme = cfg.scheme;
    let (geo, ch) = (&cfg.geometry, &cfg.channel);
    let mut plan = plan.clone();
    let mut deltas = [0.0; 5];

    deltas[0] = guarded(&mut plan, cfg, 0, |p| {
        let sol = solve_source_power(p, scheme, geo, ch, cfg.eta, &cfg.source_budget, cfg.psi_h, POWER_TOL)?;
        Ok(Plan { p_s: sol.powers, ..p.clone() })
    })?;
    if scheme.has_jammer() {
        deltas[1] = guarded(&mut plan, cfg, 1, |p| {
            let sol = solve_jammer_power(
                p,
                scheme,
                geo,
                ch,
                cfg.eta,
                &cfg.jammer_budget,
                cfg.psi_h,
                cfg.sca_tol,
                cfg.max_sca_iters,
            )?;
            Ok(Plan { p_j: sol.powers, ..p.clone() })
        })?;
    }
    deltas[2] = guarded(&mut plan, cfg, 2, |p| {
        Ok(Plan {
            zeta: solve_psr(p, scheme, geo, ch, cfg.eta, cfg.psi_h),
            ..p.clone()
        })
    })?;
    let uavs: &[(usize, Uav)] = if scheme.has_jammer() {
        &[(3, Uav::Source), (4, Uav::Jammer)]
    } else {
        &[(3, Uav::Source)]
    };
    for &(block, uav) in uavs {
        deltas[block] = guarded(&mut plan, cfg, block, |p| {
            let out = update_trajectory(uav, p, scheme, cfg)?;
            let mut next = p.clone();
            match uav {
                Uav::Source => next.q_s = out.positions,
                Uav::Jammer => next.q_j = out.positions,
            }
            Ok(next)
        })?;
    }
    Ok((plan, deltas))
}

/// Iterates from `plan` until the ASR changes by less than `epsilon` or
/// the iteration cap is reached.
pub fn iterate_from(plan: Plan, cfg: &MissionConfig) -> Result<(Plan, ConvergenceTrace)> {
    let mut plan = plan;
    let mut trace = ConvergenceTrace {
        asr: vec![asr(&plan, cfg)?],
        block_deltas: Vec::new(),
        iterations: 0,
        terminated_by: Termination::MaxIters,
    };
    while trace.iterations < cfg.max_iters {
        let (next, deltas) = bcd_iterate(&plan, cfg)?;
        plan = next;
        let value = asr(&plan, cfg)?;
        let gain = value - trace.final_asr();
        trace.asr.push(value);
        trace.block_deltas.push(deltas);
        trace.iterations += 1;
        debug!("iteration {}: ASR {:.6} bits/s/Hz", trace.iterations, value);
        if gain.abs() < cfg.epsilon {
            trace.terminated_by = Termination::Epsilon;
            break;
        }
    }
    Ok((plan, trace))
}

/// Runs the whole optimization for one configuration.
pub fn optimize(cfg: &MissionConfig) -> Result<RunReport> {
    let start = initialize(cfg)?;
    let (plan, trace) = iterate_from(start, cfg)?;
    let violations = validate(&plan, cfg);
    for v in &violations {
        warn!("final plan: {v}");
    }
    RunReport::new(cfg, plan, trace, violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Position2D;
    use crate::rates::Scheme;

    #[test]
    fn default_initialization_is_feasible() {
        for scheme in Scheme::ALL {
            let cfg = MissionConfig::default().with_scheme(scheme);
            let plan = initialize(&cfg).unwrap();
            assert!(validate(&plan, &cfg).is_empty());
            let used: f64 = plan.p_s.iter().sum();
            assert!(used <= cfg.source_budget.total(cfg.n_slots) * (1.0 + 1e-12));
            if scheme == Scheme::Woj {
                assert!(plan.p_j.iter().all(|&p| p == 0.0));
            }
        }
    }

    #[test]
    fn no_harvest_target_puts_everything_into_decoding() {
        let mut cfg = MissionConfig::default();
        cfg.psi_h = 0.0;
        let plan = initialize(&cfg).unwrap();
        assert!(plan.zeta.iter().all(|&z| z == crate::psr::ZETA_CAP));
    }

    #[test]
    fn constructed_breaches_are_reported() {
        let cfg = MissionConfig::default();
        let mut plan = initialize(&cfg).unwrap();
        plan.zeta[0] = 1.0;
        let v = validate(&plan, &cfg);
        assert!(v.iter().any(|v| v.constraint == "C14" && v.slot == Some(0)));

        let mut plan = initialize(&cfg).unwrap();
        plan.q_s[5] = plan.q_j[5];
        let v = validate(&plan, &cfg);
        let c11 = v.iter().find(|v| v.constraint == "C11").unwrap();
        assert_eq!(c11.slot, Some(5));
        assert!((c11.magnitude - cfg.geometry.d_safe).abs() < 1e-12);

        let mut plan = initialize(&cfg).unwrap();
        plan.q_s[0] = Position2D::new(0.0, 0.0);
        assert!(validate(&plan, &cfg).iter().any(|v| v.constraint == "C5"));
    }

    #[test]
    fn woj_iteration_touches_three_blocks() {
        let cfg = MissionConfig::default().with_scheme(Scheme::Woj);
        let plan = initialize(&cfg).unwrap();
        let (next, d) = bcd_iterate(&plan, &cfg).unwrap();
        assert_eq!(d[1], 0.0);
        assert_eq!(d[4], 0.0);
        assert_eq!(next.q_j, plan.q_j);
        assert!(next.p_j.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn huge_epsilon_stops_after_one_iteration() {
        let mut cfg = MissionConfig::default();
        cfg.epsilon = 1e9;
        let plan = initialize(&cfg).unwrap();
        let (_, trace) = iterate_from(plan, &cfg).unwrap();
        assert_eq!(trace.iterations, 1);
        assert_eq!(trace.terminated_by, Termination::Epsilon);
    }
}
