//! Power-splitting ratio update.
//!
//! For fixed powers and positions the rate `ln(1 + aζ/(bζ+1))` increases in
//! `ζ`, so the optimal ratio is the largest one that still meets the
//! harvesting target.

use crate::channel::{path_gain, ChannelParams};
use crate::planner::Plan;
use crate::rates::{Geometry, Scheme, SlotState};

/// Upper cap keeping `ζ` inside the open interval `[0, 1)`.
pub const ZETA_CAP: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsrConstants {
    /// Source SNR at the destination before splitting.
    pub a: f64,
    /// Jamming SNR at the destination before splitting (Gaussian jamming only).
    pub b: f64,
    /// Received RF power credited to the harvester, watts.
    pub c: f64,
}

impl PsrConstants {
    pub fn rate(&self, zeta: f64) -> f64 {
        (self.a * zeta / (self.b * zeta + 1.0)).ln_1p()
    }
}

/// With friendly jamming and without a jammer the jamming power is left out
/// of `c` entirely, as is `b`.
pub fn psr_constants(slot: &SlotState, scheme: Scheme, geo: &Geometry, ch: &ChannelParams) -> PsrConstants {
    let g0 = ch.gamma0();
    let h_sd = path_gain(slot.q_s, geo.w_d, ch);
    let h_jd = path_gain(slot.q_j, geo.w_d, ch);
    let source_rf = slot.p_s * ch.beta_bar * h_sd;
    if scheme.jams_destination() {
        PsrConstants {
            a: g0 * slot.p_s * h_sd,
            b: g0 * slot.p_j * h_jd,
            c: source_rf + slot.p_j * ch.beta_bar * h_jd + ch.n0,
        }
    } else {
        PsrConstants {
            a: g0 * slot.p_s * h_sd,
            b: 0.0,
            c: source_rf + ch.n0,
        }
    }
}

/// `[1 − Ψ_H/(η c)]_+`, capped just below one.
pub fn optimal_psr(k: &PsrConstants, eta: f64, psi_h: f64) -> f64 {
    if k.c <= 0.0 {
        return 0.0;
    }
    (1.0 - psi_h / (eta * k.c)).clamp(0.0, ZETA_CAP)
}

pub fn solve_psr(plan: &Plan, scheme: Scheme, geo: &Geometry, ch: &ChannelParams, eta: f64, psi_h: f64) -> Vec<f64> {
    plan.slots()
        .map(|s| optimal_psr(&psr_constants(&s, scheme, geo, ch), eta, psi_h))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Position2D;
    use crate::rates::harvested_power;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn geo() -> Geometry {
        Geometry {
            w_d: Position2D::ORIGIN,
            w_e_hat: Position2D::new(1.875, 0.0),
            r_e: 0.3,
            r_fly: 3.75,
            d_safe: 0.15,
        }
    }

    fn slot(p_s: f64, p_j: f64) -> SlotState {
        SlotState {
            p_s,
            p_j,
            zeta: 0.5,
            q_s: Position2D::new(0.3, -0.2),
            q_j: Position2D::new(1.0, 1.0),
        }
    }

    #[test]
    fn constants_examples() {
        let c = ChannelParams::default();
        let g = geo();
        let k = psr_constants(&slot(0.0, 0.0), Scheme::Gjt, &g, &c);
        assert_eq!((k.a, k.b, k.c), (0.0, 0.0, c.n0));
        assert_eq!(
            psr_constants(&slot(1e-3, 0.0), Scheme::Gjt, &g, &c),
            psr_constants(&slot(1e-3, 0.0), Scheme::Fuj, &g, &c)
        );
        let k = psr_constants(&slot(1e-3, 5e-4), Scheme::Gjt, &g, &c);
        let h_sd = (0.13f64 + 2.25).powf(-1.25);
        let h_jd = (2.0f64 + 2.25).powf(-1.25);
        assert!((k.a - 1e7 * 1e-3 * h_sd).abs() < 1e-9 * k.a);
        assert!((k.b - 1e7 * 5e-4 * h_jd).abs() < 1e-9 * k.b);
        assert!((k.c - (1e-3 * h_sd + 5e-4 * h_jd + 1e-7)).abs() < 1e-12 * k.c);
    }

    #[test]
    fn optimal_examples() {
        let k = PsrConstants { a: 1.0, b: 0.0, c: 1e-5 };
        assert_eq!(optimal_psr(&k, 0.7, 1e-5), 0.0);
        assert_eq!(optimal_psr(&k, 0.7, 0.0), ZETA_CAP);
        let k = PsrConstants { a: 1.0, b: 0.5, c: 2.0 * 1e-5 / 0.7 };
        assert!((optimal_psr(&k, 0.7, 1e-5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn update_meets_harvest_target_exactly() {
        let c = ChannelParams::default();
        let g = geo();
        let psi = 1e-5;
        for scheme in Scheme::ALL {
            for (ps, pj) in [(5e-4, 5e-4), (2e-3, 0.0), (1e-4, 2e-3)] {
                let mut s = slot(ps, pj);
                if !scheme.has_jammer() {
                    s.p_j = 0.0;
                }
                s.zeta = optimal_psr(&psr_constants(&s, scheme, &g, &c), 0.7, psi);
                let h = harvested_power(&s, &g, &c, 0.7);
                assert!(h >= psi - 1e-12);
                if scheme != Scheme::Fuj && s.zeta > 0.0 {
                    assert!((h - psi).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn rate_increasing_and_concave_in_zeta() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let a = rng.gen_range(1e-3..1e4);
            let b = rng.gen_range(0.0..1e4);
            let z = rng.gen_range(1e-3..0.999);
            // closed-form derivatives of ln(1 + a z/(b z + 1))
            let u = b * z + 1.0;
            let w = (a + b) * z + 1.0;
            let d1 = a / (u * w);
            let d2 = -a * (b * w + (a + b) * u) / (u * u * w * w);
            assert!(d1 > 0.0 && d2 < 0.0);
        }
    }
}
