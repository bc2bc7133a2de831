//! Initial trajectories: fly at full speed toward a hover point, hover as
//! long as the mission allows, then fly at full speed to the final point.

use crate::channel::Position2D;
use crate::config::MissionConfig;
use crate::error::{Error, Result};

/// Slack allowed when checking kinematic feasibility.
const KIN_TOL: f64 = 1e-9;

/// Samples the go-hover-return path at the slot starts. `q[0]` is `start`
/// and `end` is reached at the end of the last slot. When there is no time
/// to reach `target`, the UAV turns toward `end` partway.
pub fn hover_path(start: Position2D, target: Position2D, end: Position2D, n: usize, d: f64) -> Result<Vec<Position2D>> {
    if n == 0 {
        return Err(Error::Empty("mission has no slots"));
    }
    let reach = n as f64 * d;
    let direct = start.distance(end);
    if direct > reach * (1.0 + KIN_TOL) {
        return Err(Error::InfeasibleMission(format!(
            "endpoints are {direct:.4} apart but at most {reach:.4} can be covered in {n} slots"
        )));
    }
    let l1 = start.distance(target);
    let l2 = target.distance(end);
    let (turn, l1, l2) = if l1 + l2 <= reach {
        (target, l1, l2)
    } else {
        // s + ‖start + s·u − end‖ grows with s; find where it equals the reach
        let u = (target - start) * (1.0 / l1);
        let f = |s: f64| s + (start + u * s).distance(end);
        let (mut lo, mut hi) = (0.0, l1);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) <= reach {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let p = start + u * lo;
        (p, lo, p.distance(end))
    };
    let hover = (reach - l1 - l2).max(0.0);
    let along = |a: Position2D, b: Position2D, len: f64, s: f64| {
        if len <= 0.0 {
            b
        } else {
            a + (b - a) * (s / len).min(1.0)
        }
    };
    Ok((0..n)
        .map(|k| {
            let s = k as f64 * d;
            if s <= l1 {
                along(start, turn, l1, s)
            } else if s <= l1 + hover {
                turn
            } else {
                along(turn, end, l2, s - l1 - hover)
            }
        })
        .collect())
}

fn clamp_to_zone(p: Position2D, center: Position2D, r: f64) -> Position2D {
    let d = p.distance(center);
    if d <= r {
        p
    } else {
        center + (p - center) * (r / d)
    }
}

fn min_separation(a: &[Position2D], b: &[Position2D]) -> (f64, usize) {
    a.iter()
        .zip(b)
        .map(|(p, q)| p.distance(*q))
        .enumerate()
        .fold((f64::INFINITY, 0), |acc, (i, d)| if d < acc.0 { (d, i) } else { acc })
}

/// Baseline source and jammer paths. The source hovers above the
/// destination and the jammer above the estimated eavesdropper; if the two
/// would come closer than the safety distance, the jammer's hover point is
/// shifted sideways in steps of twice that distance. The jammer path is
/// empty-equivalent (a copy of its start) for schemes without a jammer.
pub fn baseline_trajectory(cfg: &MissionConfig) -> Result<(Vec<Position2D>, Vec<Position2D>)> {
    let g = &cfg.geometry;
    let e = &cfg.endpoints;
    let n = cfg.n_slots;
    let d = cfg.d_step_max;
    let q_s = hover_path(e.source_start, g.w_d, e.source_end, n, d)?;
    if !cfg.scheme.has_jammer() {
        return Ok((q_s, vec![e.jammer_start; n]));
    }
    let hover = clamp_to_zone(g.w_e_hat, g.w_d, g.r_fly);
    let axis = hover - g.w_d;
    let perp = if axis.norm() > 0.0 {
        Position2D::new(-axis.y, axis.x) * (1.0 / axis.norm())
    } else {
        Position2D::new(0.0, 1.0)
    };
    let mut worst = (0.0, 0);
    for k in 0..=20i32 {
        // 0, +1, −1, +2, −2, ...
        let m = if k % 2 == 1 { (k + 1) / 2 } else { -(k / 2) };
        let target = clamp_to_zone(hover + perp * (2.0 * g.d_safe * m as f64), g.w_d, g.r_fly);
        let q_j = hover_path(e.jammer_start, target, e.jammer_end, n, d)?;
        let sep = min_separation(&q_s, &q_j);
        if sep.0 >= g.d_safe {
            return Ok((q_s, q_j));
        }
        if k == 0 {
            worst = sep;
        }
    }
    Err(Error::InfeasibleMission(format!(
        "baseline paths violate the safety distance at slot {} (separation {:.4} < {:.4})",
        worst.1, worst.0, g.d_safe
    )))
}
