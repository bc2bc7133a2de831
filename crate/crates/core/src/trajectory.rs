//! Trajectory blocks: one successive-convex-approximation step on the source
//! or jammer path with every other variable held fixed.
//!
//! Each step builds a convex program around the current path (the
//! expansion point), solves it with the barrier solver and maps the new
//! positions back into the plan. Only the first slot is pinned; the final
//! position is an inequality constraint.

use log::debug;

use crate::channel::{path_gain, Position2D};
use crate::config::MissionConfig;
use crate::error::{Error, Result};
use crate::planner::Plan;
use crate::rates::{average_secrecy_nats, worst_jammer_eve_dist_sq, worst_source_eve_dist_sq, Scheme};
use crate::solver::terms::{
    sigmoid, softplus, Affine, DistPow, LogOnePlusPow, Pow1, Pt, ScaledExp, SmoothNorm, Softplus, SqDist, Sum,
};
use crate::solver::{minimize, ConvexProgram, SolveStatus};

/// Smoothing of `‖q − ŵ‖` in the eavesdropper constraints.
const NORM_EPS: f64 = 1e-9;
/// Largest tolerated constraint violation at the expansion point.
const EXPANSION_TOL: f64 = 1e-7;
const RELAX_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Uav {
    Source,
    Jammer,
}

impl Uav {
    pub fn as_str(self) -> &'static str {
        match self {
            Uav::Source => "source trajectory",
            Uav::Jammer => "jammer trajectory",
        }
    }
}

/// Variable indices of one free slot. `aux` holds `(T, U)` for the source
/// and `(S̃, Ṽ)` for the jammer; absent entries do not enter the program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotVars {
    pub slot: usize,
    pub x: usize,
    pub aux: [Option<usize>; 2],
}

impl SlotVars {
    fn point(&self) -> (usize, usize) {
        (self.x, self.x + 1)
    }
}

/// A built subproblem together with its expansion point.
pub struct TrajectoryProgram {
    pub uav: Uav,
    pub scheme: Scheme,
    pub program: ConvexProgram,
    pub layout: Vec<SlotVars>,
    pub expansion: Vec<f64>,
    /// Largest shift applied to make the expansion strictly feasible.
    pub relaxation: f64,
}

impl TrajectoryProgram {
    /// Positions encoded in a variable vector, with the pinned first slot.
    pub fn positions(&self, plan: &Plan, x: &[f64]) -> Vec<Position2D> {
        let mut q = match self.uav {
            Uav::Source => plan.q_s.clone(),
            Uav::Jammer => plan.q_j.clone(),
        };
        for v in &self.layout {
            q[v.slot] = Position2D::new(x[v.x], x[v.x + 1]);
        }
        q
    }

    /// Increase of the surrogate objective from the expansion point to `x`.
    pub fn surrogate_gain(&self, x: &[f64]) -> f64 {
        self.program.objective_value(&self.expansion) - self.program.objective_value(x)
    }
}

/// Result of one trajectory block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOutcome {
    pub positions: Vec<Position2D>,
    /// Exact average secrecy rate (nats, unclamped) before and after.
    pub objective_before: f64,
    pub objective_after: f64,
    /// False when the solution was discarded in favor of the expansion.
    pub accepted: bool,
    pub status: SolveStatus,
    pub newton_iters: usize,
}

/// Coefficients of the affine upper bound of `−‖x − a‖²` at `x0`:
/// `−‖x − a‖² ≤ ‖x0‖² − ‖a‖² − 2(x0 − a)ᵀx`. Returns `(gradient, constant)`.
pub fn neg_sq_dist_upper(x0: Position2D, a: Position2D) -> (Position2D, f64) {
    ((x0 - a) * -2.0, x0.norm_sq() - a.norm_sq())
}

/// Slope of `ln(1 + A·T^(−α/2))` at `T_k`.
pub fn rate_slope(a: f64, t_k: f64, alpha: f64) -> f64 {
    -alpha * a / (2.0 * t_k * (a + t_k.powf(0.5 * alpha)))
}

fn upper_pt(x0: Position2D, a: Position2D, vars: (usize, usize), extra: f64) -> Affine {
    let (g, c) = neg_sq_dist_upper(x0, a);
    Affine::new(vec![vars.0, vars.1], vec![g.x, g.y], c + extra)
}

/// Bound on squared 3-D distances inside the mission area, used to box the
/// slack variables.
fn slack_ceiling(cfg: &MissionConfig) -> f64 {
    let g = &cfg.geometry;
    let h = cfg.channel.altitude;
    let span = 2.0 * (g.r_fly + g.w_e_hat.distance(g.w_d)) + g.r_e + 1.0;
    4.0 * span * span + h * h
}

fn check_zeta(plan: &Plan, uav: Uav) -> Result<()> {
    if let Some(n) = plan.zeta.iter().position(|&z| !(0.0..1.0).contains(&z)) {
        return Err(Error::InfeasibleExpansion {
            block: uav.as_str(),
            detail: format!("power-splitting ratio {} at slot {n} leaves nothing to harvest", plan.zeta[n]),
        });
    }
    Ok(())
}

fn add_motion_constraints(
    p: &mut ConvexProgram,
    layout: &[SlotVars],
    start: Position2D,
    end: Position2D,
    cfg: &MissionConfig,
) {
    let d2 = cfg.d_step_max * cfg.d_step_max;
    let g = &cfg.geometry;
    let r2 = g.r_fly * g.r_fly;
    for (i, v) in layout.iter().enumerate() {
        let me = Pt::Var(v.x, v.x + 1);
        let prev = if i == 0 {
            Pt::Fixed(start)
        } else {
            Pt::Var(layout[i - 1].x, layout[i - 1].x + 1)
        };
        p.add_constraint(Sum::new(-1.0).with(SqDist::new(me, prev, 1.0 / d2)));
        p.add_constraint(Sum::new(-1.0).with(SqDist::new(me, Pt::Fixed(g.w_d), 1.0 / r2)));
    }
    if let Some(last) = layout.last() {
        p.add_constraint(Sum::new(-1.0).with(SqDist::new(Pt::Var(last.x, last.x + 1), Pt::Fixed(end), 1.0 / d2)));
    }
}

/// `D̃² − ‖q − q_other‖² ≤ 0`, with the concave part replaced by its upper
/// bound at the expansion point; scaled by `1/D̃²`.
fn add_collision(p: &mut ConvexProgram, v: &SlotVars, q_k: Position2D, other: Position2D, d_safe: f64) {
    let s = 1.0 / (d_safe * d_safe);
    let (g, c) = neg_sq_dist_upper(q_k, other);
    p.add_constraint(Affine::new(vec![v.x, v.x + 1], vec![s * g.x, s * g.y], s * c + 1.0));
}

/// Makes the expansion strictly feasible, refusing points that violate the
/// program beyond tolerance.
fn finish(mut tp: TrajectoryProgram) -> Result<TrajectoryProgram> {
    let (worst, idx) = tp.program.max_violation(&tp.expansion);
    if worst > EXPANSION_TOL {
        return Err(Error::InfeasibleExpansion {
            block: tp.uav.as_str(),
            detail: format!("current path violates constraint {idx:?} by {worst:.3e}"),
        });
    }
    tp.relaxation = tp.program.relax_to_strict(&tp.expansion, RELAX_MARGIN);
    tp.program.x0 = Some(tp.expansion.clone());
    Ok(tp)
}

/// Builds the source-path subproblem. Variables per free slot are
/// `(x, y, T, U)` with `T ≥` the squared distance to the destination and
/// `U ≤` the squared distance to the nearest possible eavesdropper.
pub fn build_source_subproblem(plan: &Plan, scheme: Scheme, cfg: &MissionConfig) -> Result<TrajectoryProgram> {
    check_zeta(plan, Uav::Source)?;
    let n = plan.len();
    let ch = &cfg.channel;
    let g = &cfg.geometry;
    let alpha = ch.alpha;
    let h2 = ch.altitude * ch.altitude;
    let ht2 = g.h_tilde_sq(ch);
    let g0 = ch.gamma0();
    let ceiling = slack_ceiling(cfg);

    let layout: Vec<SlotVars> = (1..n)
        .map(|slot| {
            let x = 4 * (slot - 1);
            SlotVars {
                slot,
                x,
                aux: [Some(x + 2), Some(x + 3)],
            }
        })
        .collect();
    let mut p = ConvexProgram::new(4 * layout.len());
    let mut x0 = vec![0.0; p.dim];

    for v in &layout {
        let k = v.slot;
        let (t, u) = (v.aux[0].unwrap(), v.aux[1].unwrap());
        let q_k = plan.q_s[k];
        let q_j = plan.q_j[k];
        let zeta = plan.zeta[k];
        let p_j = if scheme.has_jammer() { plan.p_j[k] } else { 0.0 };
        let gamma_s = g0 * plan.p_s[k];
        let gamma_j = g0 * p_j;
        let h_jd = path_gain(q_j, g.w_d, ch);
        let h_je = worst_jammer_eve_dist_sq(q_j, g, ch).powf(-0.5 * alpha);
        let a = if scheme.jams_destination() {
            zeta * gamma_s / (zeta * gamma_j * h_jd + 1.0)
        } else {
            zeta * gamma_s
        };
        let b = gamma_s / (gamma_j * h_je + 1.0);
        let split = cfg.eta * (1.0 - zeta);
        let c = split * ch.beta_bar * plan.p_s[k];
        let d = split * (p_j * ch.beta_bar * h_jd + ch.n0);

        let t_k = q_k.distance_sq(g.w_d) + h2;
        let u_k = worst_source_eve_dist_sq(q_k, g, ch);
        x0[v.x] = q_k.x;
        x0[v.x + 1] = q_k.y;
        x0[t] = t_k;
        x0[u] = u_k;
        p.set_bounds(t, 0.5 * h2, ceiling);
        p.set_bounds(u, 0.5 * h2, ceiling);

        let a_hat = rate_slope(a, t_k, alpha);
        if a_hat != 0.0 {
            p.add_objective(Affine::new(vec![t], vec![-a_hat], 0.0));
        }
        if b > 0.0 {
            p.add_objective(LogOnePlusPow::new(u, b, 0.5 * alpha, 1.0));
        }

        // harvesting: C·T^(−α/2) + D ≥ Ψ
        let deficit = cfg.psi_h - d;
        if deficit > 0.0 {
            if !(c > 0.0) {
                return Err(Error::InfeasibleExpansion {
                    block: Uav::Source.as_str(),
                    detail: format!("slot {k} cannot meet the harvesting target without source power"),
                });
            }
            p.add_constraint(Sum::new(-1.0).with(Pow1::new(t, 0.5 * alpha, deficit / c)));
        }
        // T ≥ ‖q − w_D‖² + H²
        p.add_constraint(
            Sum::new(h2)
                .with(SqDist::new(Pt::Var(v.x, v.x + 1), Pt::Fixed(g.w_d), 1.0))
                .with(Affine::new(vec![t], vec![-1.0], 0.0)),
        );
        // U ≤ ‖q − ŵ‖² − 2R_E‖q − ŵ‖ + R_E² + H²
        p.add_constraint(
            Sum::new(-ht2)
                .with(Affine::new(vec![u], vec![1.0], 0.0))
                .with(SmoothNorm::new(v.point(), g.w_e_hat, NORM_EPS, 2.0 * g.r_e))
                .with(upper_pt(q_k, g.w_e_hat, v.point(), 0.0)),
        );
        if scheme.has_jammer() {
            add_collision(&mut p, v, q_k, q_j, g.d_safe);
        }
    }
    add_motion_constraints(&mut p, &layout, cfg.endpoints.source_start, cfg.endpoints.source_end, cfg);
    finish(TrajectoryProgram {
        uav: Uav::Source,
        scheme,
        program: p,
        layout,
        expansion: x0,
        relaxation: 0.0,
    })
}

/// Source-path subproblem of the single-UAV benchmark.
pub fn build_woj_subproblem(plan: &Plan, cfg: &MissionConfig) -> Result<TrajectoryProgram> {
    build_source_subproblem(plan, Scheme::Woj, cfg)
}

/// Builds the jammer-path subproblem. Per free slot the variables are the
/// position, `S̃ = (α/2)·ln S` with `S ≤` the squared jammer-destination
/// distance (only when jamming reaches the destination) and `Ṽ` with `V ≥`
/// the squared distance to the farthest possible eavesdropper.
pub fn build_jammer_subproblem(plan: &Plan, scheme: Scheme, cfg: &MissionConfig) -> Result<TrajectoryProgram> {
    if !scheme.has_jammer() {
        return Err(Error::InvalidArgument(format!("scheme {scheme} has no jammer")));
    }
    check_zeta(plan, Uav::Jammer)?;
    let n = plan.len();
    let ch = &cfg.channel;
    let g = &cfg.geometry;
    let alpha = ch.alpha;
    let ea = 0.5 * alpha;
    let h2 = ch.altitude * ch.altitude;
    let ht2 = g.h_tilde_sq(ch);
    let g0 = ch.gamma0();
    let log_lo = ea * (0.5 * h2).ln();
    let log_hi = ea * slack_ceiling(cfg).ln();

    struct SlotK {
        a1: f64,
        b1: f64,
        a2: f64,
        b2: f64,
        harvest: Option<f64>,
    }
    let mut layout = Vec::new();
    let mut consts = Vec::new();
    let mut next = 0;
    for k in 1..n {
        let q_s = plan.q_s[k];
        let zeta = plan.zeta[k];
        let gamma_s = g0 * plan.p_s[k];
        let gamma_j = g0 * plan.p_j[k];
        let h_sd = path_gain(q_s, g.w_d, ch);
        let a = zeta * gamma_s * h_sd;
        let b = zeta * gamma_j;
        let c = gamma_s * worst_source_eve_dist_sq(q_s, g, ch).powf(-ea);
        let d = gamma_j;
        let split = cfg.eta * (1.0 - zeta);
        let e = split * (plan.p_s[k] * ch.beta_bar * h_sd + ch.n0);
        let f = split * ch.beta_bar * plan.p_j[k];
        let has_s = scheme.jams_destination() && a > 0.0 && b > 0.0;
        let has_v = c > 0.0 && d > 0.0;
        let x = next;
        next += 2;
        let s = has_s.then(|| {
            next += 1;
            next - 1
        });
        let v = has_v.then(|| {
            next += 1;
            next - 1
        });
        let deficit = cfg.psi_h - e;
        let harvest = if deficit > 0.0 {
            if !(f > 0.0) {
                return Err(Error::InfeasibleExpansion {
                    block: Uav::Jammer.as_str(),
                    detail: format!("slot {k} cannot meet the harvesting target without jammer power"),
                });
            }
            Some(deficit / f)
        } else {
            None
        };
        layout.push(SlotVars { slot: k, x, aux: [s, v] });
        consts.push(SlotK {
            a1: (1.0 + a) / b,
            b1: 1.0 / b,
            a2: 1.0 / d,
            b2: (1.0 + c) / d,
            harvest,
        });
    }

    let mut p = ConvexProgram::new(next);
    let mut x0 = vec![0.0; next];
    for (v, k) in layout.iter().zip(&consts) {
        let q_k = plan.q_j[v.slot];
        x0[v.x] = q_k.x;
        x0[v.x + 1] = q_k.y;
        if let Some(s) = v.aux[0] {
            let s_k = ea * (q_k.distance_sq(g.w_d) + h2).ln();
            x0[s] = s_k;
            p.set_bounds(s, log_lo, log_hi);
            // tangent under-estimator of ln(1 + a1·e^S̃), then the concave part
            p.add_objective(Affine::new(vec![s], vec![-sigmoid(k.a1.ln() + s_k)], 0.0));
            p.add_objective(Softplus::new(s, k.b1.ln(), 1.0));
            // e^{(2/α)S̃} ≤ ‖q − w_D‖² + H², right side bounded below by its tangent
            let (gr, c) = neg_sq_dist_upper(q_k, g.w_d);
            p.add_constraint(
                Sum::new(c - h2)
                    .with(ScaledExp::new(s, 1.0 / ea, 1.0))
                    .with(Affine::new(vec![v.x, v.x + 1], vec![gr.x, gr.y], 0.0)),
            );
        }
        if let Some(vv) = v.aux[1] {
            let v_k = ea * worst_jammer_eve_dist_sq(q_k, g, ch).ln();
            x0[vv] = v_k;
            p.set_bounds(vv, log_lo, log_hi);
            p.add_objective(Affine::new(vec![vv], vec![-sigmoid(k.a2.ln() + v_k)], 0.0));
            p.add_objective(Softplus::new(vv, k.b2.ln(), 1.0));
            // ‖q − ŵ‖² + 2R_E‖q − ŵ‖ + R_E² + H² ≤ e^{(2/α)Ṽ}, right side by its tangent
            let ek = (v_k / ea).exp();
            let i_n = (1.0 - v_k / ea) * ek;
            let j_n = ek / ea;
            p.add_constraint(
                Sum::new(ht2 - i_n)
                    .with(SqDist::new(Pt::Var(v.x, v.x + 1), Pt::Fixed(g.w_e_hat), 1.0))
                    .with(SmoothNorm::new(v.point(), g.w_e_hat, NORM_EPS, 2.0 * g.r_e))
                    .with(Affine::new(vec![vv], vec![-j_n], 0.0)),
            );
        }
        if let Some(ratio) = k.harvest {
            // (Ψ − E)·(‖q − w_D‖² + H²)^{α/2} ≤ F
            p.add_constraint(Sum::new(-1.0).with(DistPow::new(v.point(), g.w_d, h2, ea, ratio)));
        }
        add_collision(&mut p, v, q_k, plan.q_s[v.slot], g.d_safe);
    }
    add_motion_constraints(&mut p, &layout, cfg.endpoints.jammer_start, cfg.endpoints.jammer_end, cfg);
    finish(TrajectoryProgram {
        uav: Uav::Jammer,
        scheme,
        program: p,
        layout,
        expansion: x0,
        relaxation: 0.0,
    })
}

/// Exact value of the part of the objective a trajectory block can change:
/// `ln(1 + a1·e^x) − ln(1 + b1·e^x)`, used by tests of the jammer surrogate.
pub fn jammer_exact_term(a: f64, b: f64, x: f64) -> f64 {
    softplus(a.ln() + x) - softplus(b.ln() + x)
}

/// Solves a built subproblem and returns the new path. The exact average
/// secrecy rate is compared before and after; a decrease keeps the
/// expansion point.
pub fn solve_trajectory_block(tp: &TrajectoryProgram, plan: &Plan, cfg: &MissionConfig) -> Result<BlockOutcome> {
    let geo = &cfg.geometry;
    let ch = &cfg.channel;
    let before = average_secrecy_nats(plan, tp.scheme, geo, ch, false)?;
    let keep = |status, newton_iters| BlockOutcome {
        positions: tp.positions(plan, &tp.expansion),
        objective_before: before,
        objective_after: before,
        accepted: false,
        status,
        newton_iters,
    };
    if tp.program.dim == 0 {
        return Ok(keep(SolveStatus::Optimal, 0));
    }
    let r = minimize(&tp.program, &cfg.solver);
    if r.status == SolveStatus::Infeasible {
        return Err(Error::BlockFailure {
            block: tp.uav.as_str(),
            detail: format!("solver reported infeasible at constraint {:?}", r.violated),
        });
    }
    if r.x_star.iter().any(|v| !v.is_finite()) {
        return Err(Error::BlockFailure {
            block: tp.uav.as_str(),
            detail: "solver returned non-finite values".into(),
        });
    }
    let positions = tp.positions(plan, &r.x_star);
    let mut trial = plan.clone();
    match tp.uav {
        Uav::Source => trial.q_s = positions.clone(),
        Uav::Jammer => trial.q_j = positions.clone(),
    }
    let after = average_secrecy_nats(&trial, tp.scheme, geo, ch, false)?;
    if !(after >= before) {
        if before - after > 1e-9 {
            debug!(
                "{}: exact objective would drop by {:.3e}; keeping the current path",
                tp.uav.as_str(),
                before - after
            );
        }
        return Ok(keep(r.status, r.newton_iters));
    }
    Ok(BlockOutcome {
        positions,
        objective_before: before,
        objective_after: after,
        accepted: true,
        status: r.status,
        newton_iters: r.newton_iters,
    })
}

/// Builds and solves one block for the given UAV.
pub fn update_trajectory(uav: Uav, plan: &Plan, scheme: Scheme, cfg: &MissionConfig) -> Result<BlockOutcome> {
    let tp = match uav {
        Uav::Source => build_source_subproblem(plan, scheme, cfg)?,
        Uav::Jammer => build_jammer_subproblem(plan, scheme, cfg)?,
    };
    solve_trajectory_block(&tp, plan, cfg)
}
