//! Source power allocation for fixed trajectories and splitting ratios.
//!
//! Per slot the secrecy rate is `ln(1 + A p) − ln(1 + B p)`, concave in `p`
//! when `A ≥ B` and decreasing otherwise, so the budget-coupled problem is
//! solved exactly by a closed form per slot plus bisection on the budget
//! multiplier.

use crate::channel::{path_gain, ChannelParams};
use crate::error::{Error, Result};
use crate::planner::Plan;
use crate::rates::{worst_jammer_eve_dist_sq, worst_source_eve_dist_sq, Geometry, Scheme, SlotState};

/// Per-slot constants: `a`, `b` are the main-link and worst-case eavesdropper
/// SNR gains per watt, and harvested power is `c·p + d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBudget {
    pub p_avg: f64,
    pub p_peak: f64,
}

impl PowerBudget {
    pub fn from_total(total: f64, n: usize, papr: f64) -> Self {
        let p_avg = total / n as f64;
        Self {
            p_avg,
            p_peak: papr * p_avg,
        }
    }

    pub fn papr(&self) -> f64 {
        self.p_peak / self.p_avg
    }

    pub fn total(&self, n: usize) -> f64 {
        self.p_avg * n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourcePowerSolution {
    pub powers: Vec<f64>,
    pub lambda: f64,
}

pub fn source_constants(
    slot: &SlotState,
    scheme: Scheme,
    geo: &Geometry,
    ch: &ChannelParams,
    eta: f64,
) -> SourceConstants {
    let g0 = ch.gamma0();
    let p_j = if scheme.has_jammer() { slot.p_j } else { 0.0 };
    let gamma_j = g0 * p_j;
    let h_sd = path_gain(slot.q_s, geo.w_d, ch);
    let h_jd = path_gain(slot.q_j, geo.w_d, ch);
    let h_se = worst_source_eve_dist_sq(slot.q_s, geo, ch).powf(-0.5 * ch.alpha);
    let h_je = worst_jammer_eve_dist_sq(slot.q_j, geo, ch).powf(-0.5 * ch.alpha);
    let dest_interference = if scheme.jams_destination() {
        slot.zeta * gamma_j * h_jd
    } else {
        0.0
    };
    let split = eta * (1.0 - slot.zeta);
    SourceConstants {
        a: g0 * slot.zeta * h_sd / (dest_interference + 1.0),
        b: g0 * h_se / (gamma_j * h_je + 1.0),
        c: split * ch.beta_bar * h_sd,
        d: split * (p_j * ch.beta_bar * h_jd + ch.n0),
    }
}

impl SourceConstants {
    /// Minimum power meeting the harvesting target `c·p + d ≥ psi_h`.
    pub fn harvest_floor(&self, psi_h: f64) -> f64 {
        harvest_floor(psi_h, self.c, self.d)
    }

    /// Secrecy rate of the slot in nats at power `p`.
    pub fn objective(&self, p: f64) -> f64 {
        (self.a * p).ln_1p() - (self.b * p).ln_1p()
    }
}

/// `[(psi_h − d)/c]_+`, infinite when the target is unreachable.
pub(crate) fn harvest_floor(psi_h: f64, c: f64, d: f64) -> f64 {
    let need = psi_h - d;
    if need <= 0.0 {
        0.0
    } else if c > 0.0 {
        need / c
    } else {
        f64::INFINITY
    }
}

/// Stationary point of `ln(1+Ap) − ln(1+Bp) − λp`, or 0 when it is negative.
fn stationary_power(a: f64, b: f64, lambda: f64) -> f64 {
    // A·B·p² + (A+B)·p − K = 0 with K = (A−B)/λ − 1, written in the
    // cancellation-free form of the positive root.
    let k = (a - b) / lambda - 1.0;
    if k <= 0.0 {
        return 0.0;
    }
    let s = a + b;
    2.0 * k / (s + (s * s + 4.0 * a * b * k).sqrt())
}

/// Optimal power of one slot for a fixed multiplier.
pub fn source_power_given_lambda(
    k: &SourceConstants,
    lambda: f64,
    budget: &PowerBudget,
    psi_h: f64,
) -> Result<f64> {
    let floor = k.harvest_floor(psi_h);
    if k.a >= k.b && k.a > 0.0 {
        if lambda < 0.0 || lambda.is_nan() {
            return Err(Error::InvalidArgument(format!("multiplier must be non-negative, got {lambda}")));
        }
        let free = if lambda == 0.0 {
            if k.a > k.b {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            stationary_power(k.a, k.b, lambda)
        };
        Ok(floor.max(free).min(budget.p_peak))
    } else {
        Ok(floor.min(budget.p_peak))
    }
}

fn check_floors(floors: &[f64], budget: &PowerBudget, total: f64) -> Result<()> {
    for (slot, &f) in floors.iter().enumerate() {
        if f > budget.p_peak * (1.0 + 1e-9) {
            return Err(Error::InfeasibleHarvest {
                slot,
                floor: f,
                peak: budget.p_peak,
            });
        }
    }
    let needed: f64 = floors.iter().map(|f| f.min(budget.p_peak)).sum();
    if needed > total * (1.0 + 1e-9) {
        return Err(Error::InfeasibleBudget { needed, budget: total });
    }
    Ok(())
}

/// Bisects the budget multiplier of a separable allocation whose total is
/// nonincreasing in the multiplier, returning the smallest multiplier (to
/// machine precision) whose allocation fits the budget.
pub(crate) fn bisect_multiplier<F>(mut lo: f64, mut hi: f64, total: f64, tol: f64, alloc: F) -> f64
where
    F: Fn(f64) -> f64,
{
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        let used = alloc(mid);
        if used <= total {
            hi = mid;
            if total - used <= tol * total {
                break;
            }
        } else {
            lo = mid;
        }
    }
    hi
}

/// Exact solution of the source-power block.
#[allow(clippy::too_many_arguments)]
pub fn solve_source_power(
    plan: &Plan,
    scheme: Scheme,
    geo: &Geometry,
    ch: &ChannelParams,
    eta: f64,
    budget: &PowerBudget,
    psi_h: f64,
    tol: f64,
) -> Result<SourcePowerSolution> {
    let consts: Vec<SourceConstants> = plan.slots().map(|s| source_constants(&s, scheme, geo, ch, eta)).collect();
    solve_source_power_from(&consts, budget, psi_h, tol)
}

pub fn solve_source_power_from(
    consts: &[SourceConstants],
    budget: &PowerBudget,
    psi_h: f64,
    tol: f64,
) -> Result<SourcePowerSolution> {
    if consts.is_empty() {
        return Err(Error::Empty("no slots to allocate"));
    }
    let total = budget.total(consts.len());
    let floors: Vec<f64> = consts.iter().map(|k| k.harvest_floor(psi_h)).collect();
    check_floors(&floors, budget, total)?;

    let alloc = |lambda: f64| -> Vec<f64> {
        consts
            .iter()
            .map(|k| source_power_given_lambda(k, lambda, budget, psi_h).expect("lambda is non-negative"))
            .collect()
    };
    let sum = |lambda: f64| alloc(lambda).iter().sum::<f64>();

    if sum(0.0) <= total {
        return Ok(SourcePowerSolution {
            powers: alloc(0.0),
            lambda: 0.0,
        });
    }
    let hi = consts.iter().map(|k| k.a).fold(0.0, f64::max);
    let lambda = bisect_multiplier(0.0, hi, total, tol, sum);
    Ok(SourcePowerSolution {
        powers: alloc(lambda),
        lambda,
    })
}

/// Block objective, in nats summed over slots.
pub fn source_objective(consts: &[SourceConstants], powers: &[f64]) -> f64 {
    consts.iter().zip(powers).map(|(k, &p)| k.objective(p)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Position2D;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn budget(p_peak: f64, p_avg: f64) -> PowerBudget {
        PowerBudget { p_avg, p_peak }
    }

    fn slot() -> SlotState {
        SlotState {
            p_s: 5e-4,
            p_j: 4e-4,
            zeta: 0.6,
            q_s: Position2D::new(-0.4, 0.3),
            q_j: Position2D::new(1.2, 1.0),
        }
    }

    fn geo() -> Geometry {
        Geometry {
            w_d: Position2D::ORIGIN,
            w_e_hat: Position2D::new(1.875, 0.0),
            r_e: 0.3,
            r_fly: 3.75,
            d_safe: 0.15,
        }
    }

    #[test]
    fn constants_examples() {
        let c = ChannelParams::default();
        let g = geo();
        let s = slot();
        let woj = source_constants(&s, Scheme::Woj, &g, &c, 0.7);
        assert!((woj.d - 0.7 * 0.4 * c.n0).abs() < 1e-22);

        let mut silent = s;
        silent.p_j = 0.0;
        assert_eq!(
            source_constants(&silent, Scheme::Fuj, &g, &c, 0.7),
            source_constants(&silent, Scheme::Gjt, &g, &c, 0.7)
        );

        // direct substitution
        let g0 = 1e7;
        let h = |r2: f64| (r2 + 2.25f64).powf(-1.25);
        let h_sd = h(0.25);
        let h_jd = h(1.44 + 1.0);
        let dse: f64 = (2.275f64.hypot(0.3) - 0.3).powi(2);
        let dje: f64 = (0.675f64.hypot(1.0) + 0.3).powi(2);
        let gj = g0 * 4e-4;
        let a = g0 * 0.6 * h_sd / (0.6 * gj * h_jd + 1.0);
        let b = g0 * h(dse) / (gj * h(dje) + 1.0);
        let k = source_constants(&s, Scheme::Gjt, &g, &c, 0.7);
        assert!((k.a - a).abs() <= 1e-12 * a);
        assert!((k.b - b).abs() <= 1e-12 * b);
        assert!((k.c - 0.7 * 0.4 * h_sd).abs() <= 1e-12 * k.c);
        assert!((k.d - 0.7 * 0.4 * (4e-4 * h_jd + 1e-7)).abs() <= 1e-12 * k.d);
    }

    #[test]
    fn given_lambda_examples() {
        let b = budget(2e-3, 5e-4);
        // harvesting already met: A < B gives zero
        let k = SourceConstants { a: 1.0, b: 2.0, c: 1.0, d: 2e-5 };
        assert_eq!(source_power_given_lambda(&k, 0.3, &b, 1e-5).unwrap(), 0.0);
        // huge multiplier leaves only the floor
        let k = SourceConstants { a: 2e3, b: 1e3, c: 0.5, d: 0.0 };
        let p = source_power_given_lambda(&k, 1e12, &b, 1e-4).unwrap();
        assert!((p - 2e-4).abs() < 1e-18);

        // unit-scale instance checked against a fine 1-D grid
        let b1 = budget(10.0, 2.5);
        let k = SourceConstants { a: 2.0, b: 1.0, c: 1.0, d: 1.0 };
        let p = source_power_given_lambda(&k, 0.5, &b1, 0.0).unwrap();
        let f = |x: f64| (2.0 * x).ln_1p() - x.ln_1p() - 0.5 * x;
        let best = (0..=1_000_000)
            .map(|i| 10.0 * i as f64 / 1e6)
            .fold((0.0, f64::NEG_INFINITY), |acc, x| if f(x) > acc.1 { (x, f(x)) } else { acc });
        assert!((p - best.0).abs() < 1e-5, "{p} vs {}", best.0);
        assert!((f(p) - best.1).abs() < 1e-6);
        // closed form, half-sum expression
        let inv: f64 = 1.0 / 1.0 - 1.0 / 2.0;
        let tilde = 0.5 * ((inv * inv + 4.0 / 0.5 * inv).sqrt() - (1.0 + 0.5));
        assert!((p - tilde).abs() < 1e-14);

        assert!(source_power_given_lambda(&k, -1.0, &b1, 0.0).is_err());
    }

    #[test]
    fn solve_examples() {
        let b = budget(2e-3, 5e-4);
        let ks = vec![SourceConstants { a: 1.0, b: 2.0, c: 1.0, d: 1.0 }; 4];
        let sol = solve_source_power_from(&ks, &b, 0.5, 1e-12).unwrap();
        assert!(sol.powers.iter().all(|&p| p == 0.0));
        assert_eq!(sol.lambda, 0.0);

        // A = B ties never consume power
        let ks = vec![SourceConstants { a: 1.0, b: 1.0, c: 1.0, d: 1.0 }; 3];
        let sol = solve_source_power_from(&ks, &b, 0.5, 1e-12).unwrap();
        assert!(sol.powers.iter().all(|&p| p == 0.0));

        let ks = vec![SourceConstants { a: 1e4, b: 0.0, c: 1.0, d: 0.0 }; 2];
        let sol = solve_source_power_from(&ks, &b, 0.0, 1e-12).unwrap();
        let used: f64 = sol.powers.iter().sum();
        assert!((used - 1e-3).abs() < 1e-15);
        assert!(sol.lambda > 0.0);

        let ks = vec![SourceConstants { a: 1.0, b: 0.0, c: 1.0, d: 0.0 }];
        let err = solve_source_power_from(&ks, &b, 3e-3, 1e-12).unwrap_err();
        assert!(matches!(err, Error::InfeasibleHarvest { slot: 0, .. }));
        let ks = vec![SourceConstants { a: 1.0, b: 0.0, c: 1.0, d: 0.0 }; 2];
        let err = solve_source_power_from(&ks, &b, 1.5e-3, 1e-12).unwrap_err();
        assert!(matches!(err, Error::InfeasibleBudget { .. }));
    }

    fn random_constants(rng: &mut ChaCha8Rng, n: usize) -> Vec<SourceConstants> {
        (0..n)
            .map(|_| SourceConstants {
                a: rng.gen_range(0.0..10.0),
                b: rng.gen_range(0.0..6.0),
                c: rng.gen_range(0.5..2.0),
                d: rng.gen_range(0.0..0.5),
            })
            .collect()
    }

    #[test]
    fn allocation_is_monotone_in_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = budget(1.0, 0.25);
        for _ in 0..50 {
            let ks = random_constants(&mut rng, 8);
            let mut prev = f64::INFINITY;
            for i in 0..200 {
                let lambda = 1e-3 * 1.07f64.powi(i);
                let used: f64 = ks.iter().map(|k| source_power_given_lambda(k, lambda, &b, 0.3).unwrap()).sum();
                assert!(used <= prev + 1e-15);
                prev = used;
            }
        }
    }

    #[test]
    fn kkt_stationarity_on_interior_slots() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let b = budget(1.0, 0.2);
        for _ in 0..100 {
            let ks = random_constants(&mut rng, 6);
            let sol = solve_source_power_from(&ks, &b, 0.3, 0.0).unwrap();
            let used: f64 = sol.powers.iter().sum();
            if sol.lambda > 0.0 {
                assert!((used - b.total(6)).abs() <= 1e-9);
            }
            for (k, &p) in ks.iter().zip(&sol.powers) {
                let floor = k.harvest_floor(0.3);
                if k.a >= k.b && p > floor + 1e-9 && p < b.p_peak - 1e-9 {
                    let g = k.a / (1.0 + k.a * p) - k.b / (1.0 + k.b * p) - sol.lambda;
                    assert!(g.abs() < 1e-8, "stationarity residual {g}");
                }
            }
        }
    }
}
