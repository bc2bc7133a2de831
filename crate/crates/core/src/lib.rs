//! Joint trajectory design and communications resource allocation for a
//! two-UAV physical-layer-security link with a SWIPT-enabled ground receiver.
//!
//! A UAV source sends confidential data to a ground destination while a UAV
//! jammer degrades a passive ground eavesdropper whose position is known only
//! up to a disk. The destination splits its received power between decoding
//! and energy harvesting. The planner maximizes the average secrecy rate by
//! block coordinate descent over five blocks (source power, jammer power,
//! power-splitting ratio, source path, jammer path), each solved exactly or by
//! successive convex approximation.
//!
//! Three transmission schemes are supported: friendly jamming known at the
//! destination ([`Scheme::Fuj`]), Gaussian jamming unknown at the destination
//! ([`Scheme::Gjt`]) and a single-UAV benchmark without jamming
//! ([`Scheme::Woj`]).
//!
//! Internal quantities are linear: powers in watts, distances in normalized
//! distance units, rates in nats inside optimizers and bits/s/Hz at reporting
//! boundaries.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod channel;
pub mod config;
pub mod error;
pub mod par;
pub mod planner;
pub mod power_jammer;
pub mod power_source;
pub mod psr;
pub mod rates;
pub mod report;
pub mod solver;
pub mod sweep;
pub mod trajectory;

pub use channel::{ChannelParams, Position2D};
pub use config::MissionConfig;
pub use error::{Error, Result};
pub use planner::{optimize, ConvergenceTrace, Plan};
pub use rates::{Geometry, Scheme, SlotState};
pub use report::RunReport;
