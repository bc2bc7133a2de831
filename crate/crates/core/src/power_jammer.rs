//! Jammer power allocation by successive convex approximation.
//!
//! The block objective `Σ ln(1 + A/(Bp+1)) − ln(1 + C/(Dp+1))` is a
//! difference of convex decreasing functions of the jammer power. The first
//! term is replaced by its tangent at the current iterate, which leaves a
//! concave surrogate whose maximizer has a closed form per slot for a fixed
//! budget multiplier.

use crate::channel::{path_gain, ChannelParams};
use crate::error::{Error, Result};
use crate::planner::Plan;
use crate::power_source::{bisect_multiplier, harvest_floor, PowerBudget};
use crate::rates::{worst_jammer_eve_dist_sq, worst_source_eve_dist_sq, Geometry, Scheme, SlotState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JammerConstants {
    /// Main-link SNR `ζ γ_S h_SD`.
    pub a: f64,
    /// Jamming gain at the destination per watt, `γ0 ζ h_JD`.
    pub b: f64,
    /// Worst-case eavesdropper SNR.
    pub c: f64,
    /// Worst-case jamming gain at the eavesdropper per watt.
    pub d: f64,
    /// Harvested power without the jammer.
    pub e: f64,
    /// Harvested power per watt of jamming.
    pub f: f64,
}

/// Tangent of `ln(1 + A/(Bp+1))` at `p_k`: value `b_hat`, slope `a_hat ≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorPoint {
    pub p_k: f64,
    pub a_hat: f64,
    pub b_hat: f64,
}

impl TaylorPoint {
    pub fn eval(&self, p: f64) -> f64 {
        self.b_hat + self.a_hat * (p - self.p_k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JammerPowerSolution {
    pub powers: Vec<f64>,
    pub nu: f64,
    pub sca_iters: usize,
    pub converged: bool,
}

pub fn jammer_constants(slot: &SlotState, geo: &Geometry, ch: &ChannelParams, eta: f64) -> JammerConstants {
    let g0 = ch.gamma0();
    let gamma_s = g0 * slot.p_s;
    let h_sd = path_gain(slot.q_s, geo.w_d, ch);
    let h_jd = path_gain(slot.q_j, geo.w_d, ch);
    let split = eta * (1.0 - slot.zeta);
    JammerConstants {
        a: slot.zeta * gamma_s * h_sd,
        b: g0 * slot.zeta * h_jd,
        c: gamma_s * worst_source_eve_dist_sq(slot.q_s, geo, ch).powf(-0.5 * ch.alpha),
        d: g0 * worst_jammer_eve_dist_sq(slot.q_j, geo, ch).powf(-0.5 * ch.alpha),
        e: split * (slot.p_s * ch.beta_bar * h_sd + ch.n0),
        f: split * ch.beta_bar * h_jd,
    }
}

impl JammerConstants {
    pub fn harvest_floor(&self, psi_h: f64) -> f64 {
        harvest_floor(psi_h, self.f, self.e)
    }

    /// Main-link term `ln(1 + A/(Bp+1))`; zero for friendly jamming.
    pub fn main_term(&self, p: f64, scheme: Scheme) -> f64 {
        if scheme.jams_destination() {
            (self.a / (self.b * p + 1.0)).ln_1p()
        } else {
            self.a.ln_1p()
        }
    }

    pub fn eve_term(&self, p: f64) -> f64 {
        (self.c / (self.d * p + 1.0)).ln_1p()
    }

    /// Exact per-slot block objective in nats.
    pub fn objective(&self, p: f64, scheme: Scheme) -> f64 {
        self.main_term(p, scheme) - self.eve_term(p)
    }
}

pub fn linearize(k: &JammerConstants, p_j_k: f64) -> TaylorPoint {
    let bp = k.b * p_j_k;
    TaylorPoint {
        p_k: p_j_k,
        a_hat: -k.a * k.b / ((1.0 + k.a + bp) * (1.0 + bp)),
        b_hat: (k.a / (bp + 1.0)).ln_1p(),
    }
}

/// Per-slot maximizer of `â·p − ln(1 + C/(Dp+1)) − ν p` over the box
/// `[floor, P̂]`.
pub fn jammer_power_given_nu(
    k: &JammerConstants,
    a_hat: f64,
    nu: f64,
    budget: &PowerBudget,
    psi_h: f64,
) -> Result<f64> {
    let floor = k.harvest_floor(psi_h);
    if floor > budget.p_peak * (1.0 + 1e-9) {
        return Err(Error::InfeasibleHarvest {
            slot: 0,
            floor,
            peak: budget.p_peak,
        });
    }
    let floor = floor.min(budget.p_peak);
    let slope = nu - a_hat;
    if slope < 0.0 || (slope == 0.0 && a_hat != 0.0) || slope.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "multiplier {nu} must exceed the tangent slope {a_hat}"
        )));
    }
    if k.c <= 0.0 || k.d <= 0.0 {
        return Ok(floor);
    }
    let root = if slope == 0.0 {
        f64::INFINITY
    } else {
        ((k.c * k.c + 4.0 * k.c * k.d / slope).sqrt() - (2.0 + k.c)) / (2.0 * k.d)
    };
    Ok(root.max(floor).min(budget.p_peak))
}

fn surrogate_solve(
    consts: &[JammerConstants],
    a_hat: &[f64],
    budget: &PowerBudget,
    psi_h: f64,
    tol: f64,
) -> Result<(Vec<f64>, f64)> {
    let total = budget.total(consts.len());
    let alloc = |nu: f64| -> Result<Vec<f64>> {
        consts
            .iter()
            .zip(a_hat)
            .map(|(k, &ah)| jammer_power_given_nu(k, ah, nu, budget, psi_h))
            .collect()
    };
    let at_zero = alloc(0.0)?;
    if at_zero.iter().sum::<f64>() <= total {
        return Ok((at_zero, 0.0));
    }
    let sum = |nu: f64| alloc(nu).map(|v| v.iter().sum::<f64>()).unwrap_or(f64::INFINITY);
    let mut hi = 1.0 / total.max(f64::MIN_POSITIVE);
    for _ in 0..2000 {
        if sum(hi) <= total {
            break;
        }
        hi *= 2.0;
    }
    let nu = bisect_multiplier(0.0, hi, total, tol, sum);
    Ok((alloc(nu)?, nu))
}

fn check_jammer_floors(consts: &[JammerConstants], budget: &PowerBudget, psi_h: f64) -> Result<()> {
    let mut needed = 0.0;
    for (slot, k) in consts.iter().enumerate() {
        let floor = k.harvest_floor(psi_h);
        if floor > budget.p_peak * (1.0 + 1e-9) {
            return Err(Error::InfeasibleHarvest {
                slot,
                floor,
                peak: budget.p_peak,
            });
        }
        needed += floor.min(budget.p_peak);
    }
    let total = budget.total(consts.len());
    if needed > total * (1.0 + 1e-9) {
        return Err(Error::InfeasibleBudget { needed, budget: total });
    }
    Ok(())
}

pub fn jammer_objective(consts: &[JammerConstants], powers: &[f64], scheme: Scheme) -> f64 {
    consts.iter().zip(powers).map(|(k, &p)| k.objective(p, scheme)).sum()
}

/// SCA over the jammer powers, warm-started at `start`.
///
/// With Gaussian jamming the objective is not concave and SCA stops at a
/// stationary point, which from a warm start is often the one with a slot
/// stuck at a large power. A second pass from the harvesting floors is run
/// and the better of the two kept, so the result never falls below the
/// warm-start pass.
#[allow(clippy::too_many_arguments)]
pub fn solve_jammer_power_from(
    consts: &[JammerConstants],
    scheme: Scheme,
    start: &[f64],
    budget: &PowerBudget,
    psi_h: f64,
    sca_tol: f64,
    max_sca_iters: usize,
) -> Result<JammerPowerSolution> {
    if !scheme.has_jammer() {
        return Err(Error::InvalidArgument("the jammer-power block needs a jammer".into()));
    }
    if consts.is_empty() {
        return Err(Error::Empty("no slots to allocate"));
    }
    check_jammer_floors(consts, budget, psi_h)?;

    let warm = sca_pass(consts, scheme, start, budget, psi_h, sca_tol, max_sca_iters)?;
    if !scheme.jams_destination() {
        return Ok(warm);
    }
    let floors: Vec<f64> = consts.iter().map(|k| k.harvest_floor(psi_h)).collect();
    let cold = sca_pass(consts, scheme, &floors, budget, psi_h, sca_tol, max_sca_iters)?;
    let better = jammer_objective(consts, &cold.powers, scheme) > jammer_objective(consts, &warm.powers, scheme);
    Ok(if better { cold } else { warm })
}

#[allow(clippy::too_many_arguments)]
fn sca_pass(
    consts: &[JammerConstants],
    scheme: Scheme,
    start: &[f64],
    budget: &PowerBudget,
    psi_h: f64,
    sca_tol: f64,
    max_sca_iters: usize,
) -> Result<JammerPowerSolution> {
    let mut current: Vec<f64> = start
        .iter()
        .zip(consts)
        .map(|(&p, k)| p.clamp(k.harvest_floor(psi_h).min(budget.p_peak), budget.p_peak))
        .collect();
    // pull a start that overspends the budget back toward the floors
    let total = budget.total(consts.len());
    let spent: f64 = current.iter().sum();
    if spent > total {
        let floors: Vec<f64> = consts.iter().map(|k| k.harvest_floor(psi_h)).collect();
        let above: f64 = current.iter().zip(&floors).map(|(p, f)| p - f).sum();
        let keep = if above > 0.0 {
            ((total - floors.iter().sum::<f64>()) / above).clamp(0.0, 1.0)
        } else {
            0.0
        };
        for (p, f) in current.iter_mut().zip(&floors) {
            *p = f + (*p - f) * keep;
        }
    }
    let mut value = jammer_objective(consts, &current, scheme);
    let mut nu = 0.0;
    let mut iters = 0;
    let mut converged = false;
    while iters < max_sca_iters {
        iters += 1;
        let a_hat: Vec<f64> = if scheme.jams_destination() {
            consts.iter().zip(&current).map(|(k, &p)| linearize(k, p).a_hat).collect()
        } else {
            vec![0.0; consts.len()]
        };
        let (next, next_nu) = surrogate_solve(consts, &a_hat, budget, psi_h, 0.0)?;
        let next_value = jammer_objective(consts, &next, scheme);
        if next_value < value {
            // the surrogate step can only lose through rounding; keep the iterate
            converged = true;
            break;
        }
        let change = (next_value - value).abs() / value.abs().max(1e-12);
        current = next;
        value = next_value;
        nu = next_nu;
        // friendly jamming has an exact concave objective, one pass suffices
        if change < sca_tol || !scheme.jams_destination() {
            converged = true;
            break;
        }
    }
    Ok(JammerPowerSolution {
        powers: current,
        nu,
        sca_iters: iters,
        converged,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn solve_jammer_power(
    plan: &Plan,
    scheme: Scheme,
    geo: &Geometry,
    ch: &ChannelParams,
    eta: f64,
    budget: &PowerBudget,
    psi_h: f64,
    sca_tol: f64,
    max_sca_iters: usize,
) -> Result<JammerPowerSolution> {
    let consts: Vec<JammerConstants> = plan.slots().map(|s| jammer_constants(&s, geo, ch, eta)).collect();
    solve_jammer_power_from(&consts, scheme, &plan.p_j, budget, psi_h, sca_tol, max_sca_iters)
}
