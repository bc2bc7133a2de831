//! Per-slot rates, harvested power and derived efficiency metrics.
//!
//! Everything here works in nats; the `*_bits` wrappers convert at the
//! reporting boundary.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{path_gain, ChannelParams, Position2D};
use crate::error::{Error, Result};
use crate::planner::Plan;

pub const LN_2: f64 = std::f64::consts::LN_2;

pub fn nats_to_bits(x: f64) -> f64 {
    x / LN_2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Friendly jamming, cancelled at the destination.
    Fuj,
    /// Gaussian jamming, unknown at the destination.
    Gjt,
    /// Single UAV, no jammer.
    Woj,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Fuj, Scheme::Gjt, Scheme::Woj];

    pub fn has_jammer(self) -> bool {
        self != Scheme::Woj
    }

    /// Whether the jamming signal reaches the destination's decoder.
    pub fn jams_destination(self) -> bool {
        self == Scheme::Gjt
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Fuj => "fuj",
            Scheme::Gjt => "gjt",
            Scheme::Woj => "woj",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fuj" => Ok(Scheme::Fuj),
            "gjt" => Ok(Scheme::Gjt),
            "woj" => Ok(Scheme::Woj),
            other => Err(Error::InvalidArgument(format!(
                "unknown scheme '{other}' (expected fuj, gjt or woj)"
            ))),
        }
    }
}

/// Decision variables of one time slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotState {
    pub p_s: f64,
    pub p_j: f64,
    pub zeta: f64,
    pub q_s: Position2D,
    pub q_j: Position2D,
}

/// Ground-node layout and flight-safety distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub w_d: Position2D,
    /// Most likely eavesdropper location.
    pub w_e_hat: Position2D,
    /// Radius of the eavesdropper uncertainty disk.
    pub r_e: f64,
    /// Flying-zone radius around the destination.
    pub r_fly: f64,
    /// Minimum separation between the two UAVs.
    pub d_safe: f64,
}

impl Geometry {
    /// `R_E² + H²`.
    pub fn h_tilde_sq(&self, ch: &ChannelParams) -> f64 {
        self.r_e * self.r_e + ch.altitude * ch.altitude
    }
}

/// Squared 3-D distance from the source to the closest point of the
/// uncertainty disk, `[‖q − ŵ‖ − R_E]_+² + H²`. Above the disk the closest
/// possible eavesdropper sits straight below the UAV.
pub fn worst_source_eve_dist_sq(q: Position2D, geo: &Geometry, ch: &ChannelParams) -> f64 {
    let r = (q.distance(geo.w_e_hat) - geo.r_e).max(0.0);
    r * r + ch.altitude * ch.altitude
}

/// Squared 3-D distance from the jammer to the farthest point of the
/// uncertainty disk, `(‖q − ŵ‖ + R_E)² + H²`.
pub fn worst_jammer_eve_dist_sq(q: Position2D, geo: &Geometry, ch: &ChannelParams) -> f64 {
    let r = q.distance(geo.w_e_hat) + geo.r_e;
    r * r + ch.altitude * ch.altitude
}

fn dist_gain(d_sq: f64, ch: &ChannelParams) -> f64 {
    d_sq.powf(-0.5 * ch.alpha)
}

fn jammer_power(slot: &SlotState, scheme: Scheme) -> f64 {
    if scheme.has_jammer() {
        slot.p_j
    } else {
        0.0
    }
}

/// Main-link rate in nats/s/Hz.
pub fn main_rate_nats(slot: &SlotState, scheme: Scheme, geo: &Geometry, ch: &ChannelParams) -> f64 {
    let g0 = ch.gamma0();
    let signal = g0 * slot.p_s * slot.zeta * path_gain(slot.q_s, geo.w_d, ch);
    let interference = if scheme.jams_destination() {
        g0 * slot.p_j * slot.zeta * path_gain(slot.q_j, geo.w_d, ch)
    } else {
        0.0
    };
    (signal / (interference + 1.0)).ln_1p()
}

pub fn main_rate(slot: &SlotState, scheme: Scheme, geo: &Geometry, ch: &ChannelParams) -> f64 {
    nats_to_bits(main_rate_nats(slot, scheme, geo, ch))
}

/// Eavesdropper rate at a known position `w_e`, in nats/s/Hz.
pub fn exact_eve_rate_nats(
    slot: &SlotState,
    scheme: Scheme,
    w_e: Position2D,
    ch: &ChannelParams,
) -> f64 {
    let g0 = ch.gamma0();
    let signal = g0 * slot.p_s * path_gain(slot.q_s, w_e, ch);
    let jam = g0 * jammer_power(slot, scheme) * path_gain(slot.q_j, w_e, ch);
    (signal / (jam + 1.0)).ln_1p()
}

pub fn exact_eve_rate(slot: &SlotState, scheme: Scheme, w_e: Position2D, ch: &ChannelParams) -> f64 {
    nats_to_bits(exact_eve_rate_nats(slot, scheme, w_e, ch))
}

/// Upper bound of the eavesdropper rate over the whole uncertainty disk.
pub fn worstcase_eve_rate_nats(
    slot: &SlotState,
    scheme: Scheme,
    geo: &Geometry,
    ch: &ChannelParams,
) -> f64 {
    let g0 = ch.gamma0();
    let signal = g0 * slot.p_s * dist_gain(worst_source_eve_dist_sq(slot.q_s, geo, ch), ch);
    let jam = g0 * jammer_power(slot, scheme) * dist_gain(worst_jammer_eve_dist_sq(slot.q_j, geo, ch), ch);
    (signal / (jam + 1.0)).ln_1p()
}

pub fn worstcase_eve_rate(slot: &SlotState, scheme: Scheme, geo: &Geometry, ch: &ChannelParams) -> f64 {
    nats_to_bits(worstcase_eve_rate_nats(slot, scheme, geo, ch))
}

/// Signed (unclamped) secrecy rate of one slot in nats/s/Hz.
pub fn slot_secrecy_nats(slot: &SlotState, scheme: Scheme, geo: &Geometry, ch: &ChannelParams) -> f64 {
    main_rate_nats(slot, scheme, geo, ch) - worstcase_eve_rate_nats(slot, scheme, geo, ch)
}

pub fn slot_secrecy(slot: &SlotState, scheme: Scheme, geo: &Geometry, ch: &ChannelParams) -> f64 {
    nats_to_bits(slot_secrecy_nats(slot, scheme, geo, ch))
}

/// Mean secrecy rate over the plan in nats; `clamp` applies `[·]_+` per slot.
pub fn average_secrecy_nats(
    plan: &Plan,
    scheme: Scheme,
    geo: &Geometry,
    ch: &ChannelParams,
    clamp: bool,
) -> Result<f64> {
    if plan.is_empty() {
        return Err(Error::Empty("plan has no slots"));
    }
    let sum: f64 = plan
        .slots()
        .map(|s| {
            let r = slot_secrecy_nats(&s, scheme, geo, ch);
            if clamp {
                r.max(0.0)
            } else {
                r
            }
        })
        .sum();
    Ok(sum / plan.len() as f64)
}

pub fn average_secrecy(
    plan: &Plan,
    scheme: Scheme,
    geo: &Geometry,
    ch: &ChannelParams,
    clamp: bool,
) -> Result<f64> {
    average_secrecy_nats(plan, scheme, geo, ch, clamp).map(nats_to_bits)
}

/// Received RF power at the destination before splitting (signal, jamming
/// and noise), in watts.
pub fn received_power(slot: &SlotState, geo: &Geometry, ch: &ChannelParams) -> f64 {
    ch.beta_bar * (slot.p_s * path_gain(slot.q_s, geo.w_d, ch) + slot.p_j * path_gain(slot.q_j, geo.w_d, ch))
        + ch.n0
}

/// Power routed to the harvester, `η(1 − ζ)·received`.
pub fn harvested_power(slot: &SlotState, geo: &Geometry, ch: &ChannelParams, eta: f64) -> f64 {
    eta * (1.0 - slot.zeta) * received_power(slot, geo, ch)
}

/// Per-slot report values. Ratios over zero transmit power are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotMetrics {
    /// Signed secrecy rate, bits/s/Hz.
    pub isr: f64,
    pub harvested_w: f64,
    /// Clamped secrecy rate per watt of transmit power, bits/s/Hz/W.
    pub isee: Option<f64>,
    /// Harvested power over transmit power.
    pub harvest_efficiency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub slots: Vec<SlotMetrics>,
    pub asr: f64,
    pub asr_unclamped: f64,
    /// Mean harvested power, watts.
    pub ahe: f64,
    /// Total harvested over total transmitted power.
    pub harvest_ratio: Option<f64>,
}

impl Metrics {
    pub fn mean_isee(&self) -> Option<f64> {
        let v: Vec<f64> = self.slots.iter().filter_map(|s| s.isee).collect();
        if v.is_empty() {
            None
        } else {
            Some(v.iter().sum::<f64>() / v.len() as f64)
        }
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

pub fn metrics(plan: &Plan, scheme: Scheme, geo: &Geometry, ch: &ChannelParams, eta: f64) -> Result<Metrics> {
    if plan.is_empty() {
        return Err(Error::Empty("plan has no slots"));
    }
    let mut rows = Vec::with_capacity(plan.len());
    let (mut harvested, mut transmitted) = (0.0, 0.0);
    for s in plan.slots() {
        let isr = slot_secrecy(&s, scheme, geo, ch);
        let h = harvested_power(&s, geo, ch, eta);
        let p = s.p_s + jammer_power(&s, scheme);
        harvested += h;
        transmitted += p;
        rows.push(SlotMetrics {
            isr,
            harvested_w: h,
            isee: ratio(isr.max(0.0), p),
            harvest_efficiency: ratio(h, p),
        });
    }
    let n = rows.len() as f64;
    Ok(Metrics {
        asr: rows.iter().map(|r| r.isr.max(0.0)).sum::<f64>() / n,
        asr_unclamped: rows.iter().map(|r| r.isr).sum::<f64>() / n,
        ahe: harvested / n,
        harvest_ratio: ratio(harvested, transmitted),
        slots: rows,
    })
}
