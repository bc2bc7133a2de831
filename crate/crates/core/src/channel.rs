//! Air-to-ground channel model.
//!
//! The expected power gain of a UAV-ground link is `β̂(θ)·d^(−α)` where the
//! regularized attenuation `β̂` mixes LoS and NLoS propagation through an
//! elevation-dependent LoS probability. The optimizers use the homogeneous
//! simplification `β̂ ≈ β̄`; [`estimate_beta_bar`] is kept for validating a
//! chosen `β̄` against the full model.

use std::ops::{Add, Mul, Sub};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Exec;

/// Horizontal coordinates in normalized distance units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position2D {
    pub x: f64,
    pub y: f64,
}

impl Position2D {
    pub const ORIGIN: Position2D = Position2D { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Position2D) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn distance(self, other: Position2D) -> f64 {
        (self - other).norm()
    }

    pub fn distance_sq(self, other: Position2D) -> f64 {
        (self - other).norm_sq()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Moves from `self` toward `target` by at most `step`.
    pub fn step_toward(self, target: Position2D, step: f64) -> Position2D {
        let delta = target - self;
        let len = delta.norm();
        if len <= step || len == 0.0 {
            target
        } else {
            self + delta * (step / len)
        }
    }
}

impl Add for Position2D {
    type Output = Position2D;
    fn add(self, rhs: Position2D) -> Position2D {
        Position2D::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Position2D {
    type Output = Position2D;
    fn sub(self, rhs: Position2D) -> Position2D {
        Position2D::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Position2D {
    type Output = Position2D;
    fn mul(self, k: f64) -> Position2D {
        Position2D::new(self.x * k, self.y * k)
    }
}

/// Propagation parameters.
///
/// `beta0`, `kappa`, `k1` and `k2` only feed the full probabilistic-LoS model
/// used by [`estimate_beta_bar`]; the optimizers read `beta_bar`, `alpha`,
/// `n0` and `altitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// LoS power gain at the reference distance (linear).
    pub beta0: f64,
    /// Extra NLoS attenuation, in (0, 1].
    pub kappa: f64,
    pub k1: f64,
    pub k2: f64,
    /// Path-loss exponent, in [2, 4].
    pub alpha: f64,
    /// Homogeneous mean attenuation (linear, dimensionless).
    pub beta_bar: f64,
    /// Receiver noise power in watts.
    pub n0: f64,
    /// Common UAV flying altitude.
    pub altitude: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            beta0: 1.0,
            kappa: 0.2,
            k1: 10.0,
            k2: 0.6,
            alpha: 2.5,
            beta_bar: 1.0,
            n0: dbm_to_watts(-40.0),
            altitude: 1.5,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(2.0..=4.0).contains(&self.alpha) {
            return bad("path-loss exponent alpha must lie in [2, 4]");
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return bad("kappa must lie in (0, 1]");
        }
        if !(self.beta0 > 0.0 && self.beta_bar > 0.0 && self.n0 > 0.0) {
            return bad("beta0, beta_bar and n0 must be strictly positive");
        }
        if !(self.k1 > 0.0 && self.k2 > 0.0) {
            return bad("LoS constants k1, k2 must be strictly positive");
        }
        if !(self.altitude >= 0.0 && self.altitude.is_finite()) {
            return bad("altitude must be finite and non-negative");
        }
        Ok(())
    }

    /// Reference SNR `β̄ / N0` in 1/W.
    pub fn gamma0(&self) -> f64 {
        self.beta_bar / self.n0
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_milliwatts(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    dbm_to_milliwatts(dbm) * 1e-3
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w * 1e3)
}

pub fn distance3d(q: Position2D, w: Position2D, altitude: f64) -> f64 {
    (q.distance_sq(w) + altitude * altitude).sqrt()
}

/// Elevation angle `atan(H / d)` with `d` the 3-D link distance.
pub fn elevation(q: Position2D, w: Position2D, altitude: f64) -> f64 {
    let d = distance3d(q, w, altitude);
    (altitude / d).atan()
}

pub fn p_los(theta: f64, params: &ChannelParams) -> f64 {
    1.0 / (1.0 + params.k1 * (-params.k2 * (theta - params.k1)).exp())
}

pub fn regularized_attenuation(theta: f64, params: &ChannelParams) -> f64 {
    let p = p_los(theta, params);
    params.beta0 * (p + params.kappa * (1.0 - p))
}

/// Distance-only part of the link gain, `(‖q − w‖² + H²)^(−α/2)`.
pub fn path_gain(q: Position2D, w: Position2D, params: &ChannelParams) -> f64 {
    path_gain_sq(q.distance_sq(w), params)
}

/// `(r² + H²)^(−α/2)` for a horizontal squared distance `r²`.
pub fn path_gain_sq(horizontal_sq: f64, params: &ChannelParams) -> f64 {
    (horizontal_sq + params.altitude * params.altitude).powf(-0.5 * params.alpha)
}

/// Expected channel power `β̄·d^(−α)` under the homogeneous simplification.
pub fn expected_channel_power(q: Position2D, w: Position2D, params: &ChannelParams) -> Result<f64> {
    let d = distance3d(q, w, params.altitude);
    if !(d > 0.0) {
        return Err(Error::DegenerateGeometry(
            "zero link distance between aerial and ground node".into(),
        ));
    }
    Ok(params.beta_bar * d.powf(-params.alpha))
}

/// Axis-aligned sampling region for [`estimate_beta_bar`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub min: Position2D,
    pub max: Position2D,
}

impl Region {
    pub fn new(min: Position2D, max: Position2D) -> Self {
        Self { min, max }
    }

    /// Square of half-width `r` centered on `c`.
    pub fn around(c: Position2D, r: f64) -> Self {
        Self::new(c - Position2D::new(r, r), c + Position2D::new(r, r))
    }

    fn is_empty(&self) -> bool {
        !(self.max.x > self.min.x && self.max.y > self.min.y)
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Position2D {
        Position2D::new(
            rng.gen_range(self.min.x..self.max.x),
            rng.gen_range(self.min.y..self.max.y),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaBarEstimate {
    pub mean: f64,
    /// Standard error of the mean (zero for a single sample).
    pub std_error: f64,
    pub samples: usize,
}

const BETA_CHUNK: usize = 4096;

/// One attenuation draw: a UAV and a ground node placed uniformly in `region`.
pub fn draw_attenuation<R: Rng>(rng: &mut R, region: &Region, params: &ChannelParams) -> f64 {
    let q = region.sample(rng);
    let w = region.sample(rng);
    regularized_attenuation(elevation(q, w, params.altitude), params)
}

/// RNG used for chunk `chunk` of a Monte-Carlo run seeded with `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Monte-Carlo mean of the regularized attenuation over elevation angles
/// induced by uniformly placed nodes. Deterministic for a given seed
/// regardless of `Exec`.
pub fn estimate_beta_bar(
    region: &Region,
    samples: usize,
    params: &ChannelParams,
    seed: u64,
) -> Result<BetaBarEstimate> {
    estimate_beta_bar_with(Exec::default(), region, samples, params, seed)
}

pub fn estimate_beta_bar_with(
    exec: Exec,
    region: &Region,
    samples: usize,
    params: &ChannelParams,
    seed: u64,
) -> Result<BetaBarEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    if region.is_empty() {
        return Err(Error::InvalidArgument("sampling region is empty".into()));
    }
    let chunks = samples.div_ceil(BETA_CHUNK);
    let partial = exec.map_range(chunks, |c| {
        let mut rng = chunk_rng(seed, c as u64);
        let len = BETA_CHUNK.min(samples - c * BETA_CHUNK);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..len {
            let v = draw_attenuation(&mut rng, region, params);
            sum += v;
            sum_sq += v * v;
        }
        (sum, sum_sq)
    });
    let (sum, sum_sq) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), (s, q)| (a + s, b + q));
    let n = samples as f64;
    let mean = sum / n;
    let std_error = if samples > 1 {
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(BetaBarEstimate {
        mean,
        std_error,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance3d(Position2D::ORIGIN, Position2D::ORIGIN, 1.5), 1.5);
        assert_eq!(distance3d(Position2D::new(3.0, 4.0), Position2D::ORIGIN, 0.0), 5.0);
        let d = distance3d(Position2D::new(1.0, 1.0), Position2D::ORIGIN, 1.5);
        assert!(close(d, 4.25f64.sqrt(), 1e-15));
    }

    #[test]
    fn los_probability_examples() {
        let p = ChannelParams::default();
        assert!(close(p_los(p.k1, &p), 1.0 / (1.0 + p.k1), 1e-15));
        assert!(close(p_los(1e6, &p), 1.0, 1e-12));
        // direct evaluation with k1 = 10, k2 = 0.6 at 60 degrees
        let theta = PI / 3.0;
        let expected = 1.0 / (1.0 + 10.0 * (-0.6f64 * (theta - 10.0)).exp());
        assert!(close(p_los(theta, &p), expected, 1e-15));
        assert!(expected > 0.0 && expected < 1e-3);
    }

    #[test]
    fn attenuation_examples() {
        let mut p = ChannelParams::default();
        p.kappa = 1.0;
        for theta in [0.0, 0.3, 1.0, PI / 2.0] {
            assert!(close(regularized_attenuation(theta, &p), p.beta0, 1e-15));
        }
        // P_LoS = 0.5 happens at theta = k1 + ln(k1)/k2
        let mut p = ChannelParams {
            beta0: 1e-3,
            kappa: 0.2,
            ..ChannelParams::default()
        };
        p.k1 = 1.0;
        p.k2 = 1.0;
        let theta = 1.0;
        assert!(close(p_los(theta, &p), 0.5, 1e-15));
        assert!(close(regularized_attenuation(theta, &p), 6e-4, 1e-12));
        // very low elevation pushes P_LoS to zero, leaving kappa * beta0
        let low = ChannelParams::default();
        assert!(close(regularized_attenuation(0.0, &low), low.kappa * low.beta0, 1e-3));
    }

    #[test]
    fn expected_power_examples() {
        let mut p = ChannelParams {
            beta_bar: 1.0,
            alpha: 2.0,
            altitude: 0.0,
            ..ChannelParams::default()
        };
        let v = expected_channel_power(Position2D::new(2.0, 0.0), Position2D::ORIGIN, &p).unwrap();
        assert!(close(v, 0.25, 1e-15));
        p.alpha = 3.7;
        let v = expected_channel_power(Position2D::new(0.0, 1.0), Position2D::ORIGIN, &p).unwrap();
        assert!(close(v, 1.0, 1e-15));
        assert!(expected_channel_power(Position2D::ORIGIN, Position2D::ORIGIN, &p).is_err());

        let p = ChannelParams {
            beta_bar: 1e-3,
            alpha: 2.5,
            altitude: 1.5,
            ..ChannelParams::default()
        };
        let d2: f64 = 0.9375 * 0.9375 + 2.25;
        let expected = 1e-3 * d2.sqrt().powf(-2.5);
        let v = expected_channel_power(Position2D::new(0.9375, 0.0), Position2D::ORIGIN, &p).unwrap();
        assert!(close(v, expected, 1e-14));
    }

    #[test]
    fn expected_power_decreases_with_offset() {
        let p = ChannelParams::default();
        let mut rng = chunk_rng(7, 0);
        for _ in 0..1000 {
            let w = Position2D::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let dir = rng.gen_range(0.0..2.0 * PI);
            let r1 = rng.gen_range(0.0..5.0);
            let r2 = r1 + rng.gen_range(1e-3..5.0);
            let u = Position2D::new(dir.cos(), dir.sin());
            let a = expected_channel_power(w + u * r1, w, &p).unwrap();
            let b = expected_channel_power(w + u * r2, w, &p).unwrap();
            assert!(b < a);
        }
    }

    #[test]
    fn attenuation_bounded_and_los_monotone() {
        let p = ChannelParams {
            k1: 0.5,
            k2: 8.0,
            ..ChannelParams::default()
        };
        let mut prev = 0.0;
        for i in 0..=2000 {
            let theta = PI / 2.0 * i as f64 / 2000.0;
            let pl = p_los(theta, &p);
            assert!(pl > 0.0 && pl < 1.0);
            assert!(pl >= prev);
            prev = pl;
            let b = regularized_attenuation(theta, &p);
            assert!(b >= p.kappa * p.beta0 - 1e-15 && b <= p.beta0 + 1e-15);
        }
    }

    #[test]
    fn beta_bar_estimates() {
        let region = Region::around(Position2D::ORIGIN, 3.75);
        let mut p = ChannelParams {
            k1: 0.5,
            k2: 8.0,
            ..ChannelParams::default()
        };
        p.kappa = 1.0;
        let e = estimate_beta_bar(&region, 1000, &p, 3).unwrap();
        assert!(close(e.mean, p.beta0, 1e-12));

        p.kappa = 0.2;
        let one = estimate_beta_bar(&region, 1, &p, 11).unwrap();
        let mut rng = chunk_rng(11, 0);
        assert_eq!(one.mean, draw_attenuation(&mut rng, &region, &p));
        assert_eq!(one.std_error, 0.0);

        let a = estimate_beta_bar(&region, 100_000, &p, 1).unwrap();
        let b = estimate_beta_bar(&region, 100_000, &p, 2).unwrap();
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.mean - b.mean).abs() <= 3.0 * se, "{a:?} vs {b:?}");
        assert!(a.mean > p.kappa * p.beta0 && a.mean < p.beta0);

        let seq = estimate_beta_bar_with(Exec::Sequential, &region, 20_000, &p, 5).unwrap();
        let par = estimate_beta_bar_with(Exec::Parallel, &region, 20_000, &p, 5).unwrap();
        assert_eq!(seq, par);

        assert!(estimate_beta_bar(&region, 0, &p, 1).is_err());
        let empty = Region::new(Position2D::ORIGIN, Position2D::ORIGIN);
        assert!(estimate_beta_bar(&empty, 10, &p, 1).is_err());
    }

    #[test]
    fn unit_conversions() {
        assert!(close(dbm_to_milliwatts(-20.0), 0.01, 1e-15));
        assert!(close(dbm_to_watts(-40.0), 1e-7, 1e-15));
        assert!(close(watts_to_dbm(0.1), 20.0, 1e-12));
        assert!(close(db_to_linear(40.0), 1e4, 1e-15));
    }
}
