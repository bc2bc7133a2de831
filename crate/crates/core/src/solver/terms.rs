//! Smooth scalar functions used to assemble convex programs.
//!
//! Each term declares the global variable indices it reads; gradients and
//! Hessians are written in that local ordering.

use crate::channel::Position2D;

pub trait SmoothFn: Send + Sync {
    /// Global indices of the variables this term depends on.
    fn vars(&self) -> &[usize];
    fn value(&self, x: &[f64]) -> f64;
    /// Local gradient, `g.len() == vars().len()`.
    fn gradient(&self, x: &[f64], g: &mut [f64]);
    /// Local dense Hessian, row-major. Forward differences of the gradient
    /// unless overridden.
    fn hessian(&self, x: &[f64], h: &mut [f64]) {
        fd_hessian(self, x, h);
    }
}

pub fn fd_hessian<F: SmoothFn + ?Sized>(f: &F, x: &[f64], h: &mut [f64]) {
    let vars = f.vars();
    let k = vars.len();
    let mut xp = x.to_vec();
    let mut g0 = vec![0.0; k];
    let mut g1 = vec![0.0; k];
    f.gradient(x, &mut g0);
    for (a, &va) in vars.iter().enumerate() {
        let step = 1e-6 * (1.0 + x[va].abs());
        xp[va] = x[va] + step;
        f.gradient(&xp, &mut g1);
        xp[va] = x[va];
        for b in 0..k {
            h[b * k + a] = (g1[b] - g0[b]) / step;
        }
    }
    for a in 0..k {
        for b in 0..a {
            let m = 0.5 * (h[a * k + b] + h[b * k + a]);
            h[a * k + b] = m;
            h[b * k + a] = m;
        }
    }
}

/// `c + Σ aᵢ x_{vᵢ}`.
pub struct Affine {
    vars: Vec<usize>,
    coefs: Vec<f64>,
    constant: f64,
}

impl Affine {
    pub fn new(vars: Vec<usize>, coefs: Vec<f64>, constant: f64) -> Self {
        assert_eq!(vars.len(), coefs.len());
        Self { vars, coefs, constant }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(Vec::new(), Vec::new(), c)
    }
}

impl SmoothFn for Affine {
    fn vars(&self) -> &[usize] {
        &self.vars
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.constant + self.vars.iter().zip(&self.coefs).map(|(&v, a)| a * x[v]).sum::<f64>()
    }
    fn gradient(&self, _x: &[f64], g: &mut [f64]) {
        g.copy_from_slice(&self.coefs);
    }
    fn hessian(&self, _x: &[f64], h: &mut [f64]) {
        h.fill(0.0);
    }
}

/// A planar point that is either a pair of variables or a constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pt {
    Var(usize, usize),
    Fixed(Position2D),
}

impl Pt {
    fn at(&self, x: &[f64]) -> Position2D {
        match *self {
            Pt::Var(i, j) => Position2D::new(x[i], x[j]),
            Pt::Fixed(p) => p,
        }
    }
}

/// `s·‖a − b‖²`.
pub struct SqDist {
    a: Pt,
    b: Pt,
    scale: f64,
    vars: Vec<usize>,
}

impl SqDist {
    pub fn new(a: Pt, b: Pt, scale: f64) -> Self {
        let mut vars = Vec::new();
        for p in [a, b] {
            if let Pt::Var(i, j) = p {
                vars.extend([i, j]);
            }
        }
        Self { a, b, scale, vars }
    }
}

impl SmoothFn for SqDist {
    fn vars(&self) -> &[usize] {
        &self.vars
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.scale * self.a.at(x).distance_sq(self.b.at(x))
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let d = self.a.at(x) - self.b.at(x);
        let mut k = 0;
        for (p, sign) in [(self.a, 1.0), (self.b, -1.0)] {
            if let Pt::Var(..) = p {
                g[k] = 2.0 * self.scale * sign * d.x;
                g[k + 1] = 2.0 * self.scale * sign * d.y;
                k += 2;
            }
        }
    }
    fn hessian(&self, _x: &[f64], h: &mut [f64]) {
        let k = self.vars.len();
        h.fill(0.0);
        let signs: Vec<f64> = [(self.a, 1.0), (self.b, -1.0)]
            .iter()
            .filter(|(p, _)| matches!(p, Pt::Var(..)))
            .flat_map(|&(_, s)| [s, s])
            .collect();
        for r in 0..k {
            for c in 0..k {
                // only matching coordinates (x with x, y with y) couple
                if r % 2 == c % 2 {
                    h[r * k + c] = 2.0 * self.scale * signs[r] * signs[c];
                }
            }
        }
    }
}

fn point_vars(p: (usize, usize)) -> Vec<usize> {
    vec![p.0, p.1]
}

/// `s·sqrt(‖p − c‖² + ε²)`, a smoothed Euclidean norm.
pub struct SmoothNorm {
    vars: Vec<usize>,
    center: Position2D,
    eps: f64,
    scale: f64,
}

impl SmoothNorm {
    pub fn new(p: (usize, usize), center: Position2D, eps: f64, scale: f64) -> Self {
        Self {
            vars: point_vars(p),
            center,
            eps,
            scale,
        }
    }

    fn delta(&self, x: &[f64]) -> Position2D {
        Position2D::new(x[self.vars[0]], x[self.vars[1]]) - self.center
    }
}

pub fn smooth_norm(d: Position2D, eps: f64) -> f64 {
    (d.norm_sq() + eps * eps).sqrt()
}

impl SmoothFn for SmoothNorm {
    fn vars(&self) -> &[usize] {
        &self.vars
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.scale * smooth_norm(self.delta(x), self.eps)
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let d = self.delta(x);
        let r = smooth_norm(d, self.eps);
        g[0] = self.scale * d.x / r;
        g[1] = self.scale * d.y / r;
    }
    fn hessian(&self, x: &[f64], h: &mut [f64]) {
        let d = self.delta(x);
        let r = smooth_norm(d, self.eps);
        let r3 = r * r * r;
        h[0] = self.scale * (1.0 / r - d.x * d.x / r3);
        h[1] = -self.scale * d.x * d.y / r3;
        h[2] = h[1];
        h[3] = self.scale * (1.0 / r - d.y * d.y / r3);
    }
}

/// `s·(‖p − c‖² + h²)^e`, convex for `e ≥ 1`.
pub struct DistPow {
    vars: Vec<usize>,
    center: Position2D,
    h2: f64,
    e: f64,
    scale: f64,
}

impl DistPow {
    pub fn new(p: (usize, usize), center: Position2D, h2: f64, e: f64, scale: f64) -> Self {
        Self {
            vars: point_vars(p),
            center,
            h2,
            e,
            scale,
        }
    }

    fn delta(&self, x: &[f64]) -> Position2D {
        Position2D::new(x[self.vars[0]], x[self.vars[1]]) - self.center
    }
}

impl SmoothFn for DistPow {
    fn vars(&self) -> &[usize] {
        &self.vars
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.scale * (self.delta(x).norm_sq() + self.h2).powf(self.e)
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let d = self.delta(x);
        let u = d.norm_sq() + self.h2;
        let k = 2.0 * self.scale * self.e * u.powf(self.e - 1.0);
        g[0] = k * d.x;
        g[1] = k * d.y;
    }
    fn hessian(&self, x: &[f64], h: &mut [f64]) {
        let d = self.delta(x);
        let u = d.norm_sq() + self.h2;
        let a = 2.0 * self.scale * self.e * u.powf(self.e - 1.0);
        let b = 4.0 * self.scale * self.e * (self.e - 1.0) * u.powf(self.e - 2.0);
        h[0] = a + b * d.x * d.x;
        h[1] = b * d.x * d.y;
        h[2] = h[1];
        h[3] = a + b * d.y * d.y;
    }
}

/// `s·x^e` on `x > 0`.
pub struct Pow1 {
    vars: [usize; 1],
    e: f64,
    scale: f64,
}

impl Pow1 {
    pub fn new(var: usize, e: f64, scale: f64) -> Self {
        Self { vars: [var], e, scale }
    }
}

impl SmoothFn for Pow1 {
    fn vars(&self) -> &[usize] {
        &self.vars
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.scale * x[self.vars[0]].powf(self.e)
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        g[0] = self.scale * self.e * x[self.vars[0]].powf(self.e - 1.0);
    }
    fn hessian(&self, x: &[f64], h: &mut [f64]) {
        h[0] = self.scale * self.e * (self.e - 1.0) * x[self.vars[0]].powf(self.e - 2.0);
    }
}

/// `s·ln(1 + b·x^(−e))` on `x > 0`; convex for `b, e ≥ 0`.
pub struct LogOnePlusPow {
    vars: [usize; 1],
    b: f64,
    e: f64,
    scale: f64,
}

impl LogOnePlusPow {
    pub fn new(var: usize, b: f64, e: f64, scale: f64) -> Self {
        Self { vars: [var], b, e, scale }
    }
}

impl SmoothFn for LogOnePlusPow {
    fn vars(&self) -> &[usize] {
        &self.vars
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.scale * (self.b * x[self.vars[0]].powf(-self.e)).ln_1p()
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let t = x[self.vars[0]];
        let r = self.b * t.powf(-self.e);
        g[0] = -self.scale * self.e * r / (t * (1.0 + r));
    }
    fn hessian(&self, x: &[f64], h: &mut [f64]) {
        let t = x[self.vars[0]];
        let r = self.b * t.powf(-self.e);
        h[0] = self.scale * self.e * r * (self.e + 1.0 + r) / (t * t * (1.0 + r) * (1.0 + r));
    }
}

/// Numerically stable `ln(1 + e^z)`.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `s·ln(1 + exp(c + x))`.
pub struct Softplus {
    vars: [usize; 1],
    shift: f64,
    scale: f64,
}

impl Softplus {
    pub fn new(var: usize, shift: f64, scale: f64) -> Self {
        Self {
            vars: [var],
            shift,
            scale,
        }
    }
}

impl SmoothFn for Softplus {
    fn vars(&self) -> &[usize] {
        &self.vars
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.scale * softplus(self.shift + x[self.vars[0]])
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        g[0] = self.scale * sigmoid(self.shift + x[self.vars[0]]);
    }
    fn hessian(&self, x: &[f64], h: &mut [f64]) {
        let s = sigmoid(self.shift + x[self.vars[0]]);
        h[0] = self.scale * s * (1.0 - s);
    }
}

/// `s·exp(k·x)`.
pub struct ScaledExp {
    vars: [usize; 1],
    k: f64,
    scale: f64,
}

impl ScaledExp {
    pub fn new(var: usize, k: f64, scale: f64) -> Self {
        Self { vars: [var], k, scale }
    }
}

impl SmoothFn for ScaledExp {
    fn vars(&self) -> &[usize] {
        &self.vars
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.scale * (self.k * x[self.vars[0]]).exp()
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        g[0] = self.scale * self.k * (self.k * x[self.vars[0]]).exp();
    }
    fn hessian(&self, x: &[f64], h: &mut [f64]) {
        h[0] = self.scale * self.k * self.k * (self.k * x[self.vars[0]]).exp();
    }
}

type LocalFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type LocalGrad = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Term defined by closures over the local variable values; the Hessian
/// falls back to finite differences.
pub struct FnTerm {
    vars: Vec<usize>,
    f: LocalFn,
    g: LocalGrad,
}

impl FnTerm {
    pub fn new(
        vars: Vec<usize>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        g: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            vars,
            f: Box::new(f),
            g: Box::new(g),
        }
    }

    fn local(&self, x: &[f64]) -> Vec<f64> {
        self.vars.iter().map(|&v| x[v]).collect()
    }
}

impl SmoothFn for FnTerm {
    fn vars(&self) -> &[usize] {
        &self.vars
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(&self.local(x))
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        (self.g)(&self.local(x), g)
    }
}

/// Sum of terms plus a constant, exposed as a single term over the union
/// of their variables.
pub struct Sum {
    vars: Vec<usize>,
    parts: Vec<(Box<dyn SmoothFn>, Vec<usize>)>,
    constant: f64,
}

impl Default for Sum {
    fn default() -> Self {
        Self::new(0.0)
    }
}

impl Sum {
    pub fn new(constant: f64) -> Self {
        Self {
            vars: Vec::new(),
            parts: Vec::new(),
            constant,
        }
    }

    pub fn with(mut self, term: impl SmoothFn + 'static) -> Self {
        self.push(Box::new(term));
        self
    }

    pub fn push(&mut self, term: Box<dyn SmoothFn>) {
        let mut merged = self.vars.clone();
        merged.extend_from_slice(term.vars());
        merged.sort_unstable();
        merged.dedup();
        if merged != self.vars {
            self.vars = merged;
            for (t, pos) in &mut self.parts {
                *pos = local_positions(&self.vars, t.vars());
            }
        }
        let pos = local_positions(&self.vars, term.vars());
        self.parts.push((term, pos));
    }
}

fn local_positions(all: &[usize], sub: &[usize]) -> Vec<usize> {
    sub.iter()
        .map(|v| all.binary_search(v).expect("variable registered"))
        .collect()
}

impl SmoothFn for Sum {
    fn vars(&self) -> &[usize] {
        &self.vars
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.constant + self.parts.iter().map(|(t, _)| t.value(x)).sum::<f64>()
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        g.fill(0.0);
        let mut buf = Vec::new();
        for (t, pos) in &self.parts {
            buf.clear();
            buf.resize(pos.len(), 0.0);
            t.gradient(x, &mut buf);
            for (&p, v) in pos.iter().zip(&buf) {
                g[p] += v;
            }
        }
    }
    fn hessian(&self, x: &[f64], h: &mut [f64]) {
        let k = self.vars.len();
        h.fill(0.0);
        let mut buf = Vec::new();
        for (t, pos) in &self.parts {
            let m = pos.len();
            buf.clear();
            buf.resize(m * m, 0.0);
            t.hessian(x, &mut buf);
            for a in 0..m {
                for b in 0..m {
                    h[pos[a] * k + pos[b]] += buf[a * m + b];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check(term: &dyn SmoothFn, x: &[f64]) {
        let k = term.vars().len();
        let mut g = vec![0.0; k];
        term.gradient(x, &mut g);
        let mut h = vec![0.0; k * k];
        term.hessian(x, &mut h);
        let mut fd = vec![0.0; k * k];
        fd_hessian(term, x, &mut fd);
        let mut xp = x.to_vec();
        for (a, &v) in term.vars().iter().enumerate() {
            let s = 1e-6;
            xp[v] = x[v] + s;
            let fp = term.value(&xp);
            xp[v] = x[v] - s;
            let fm = term.value(&xp);
            xp[v] = x[v];
            let num = (fp - fm) / (2.0 * s);
            assert!((num - g[a]).abs() <= 1e-5 * (1.0 + g[a].abs()), "grad {a}: {num} vs {}", g[a]);
        }
        for i in 0..k * k {
            assert!((h[i] - fd[i]).abs() <= 1e-4 * (1.0 + h[i].abs()), "hess {i}: {} vs {}", h[i], fd[i]);
        }
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = Position2D::new(0.4, -0.3);
        for _ in 0..50 {
            let x: Vec<f64> = (0..6).map(|_| rng.gen_range(0.5..2.0)).collect();
            check(&Affine::new(vec![0, 3], vec![1.5, -2.0], 0.3), &x);
            check(&SqDist::new(Pt::Var(0, 1), Pt::Var(2, 3), 0.7), &x);
            check(&SqDist::new(Pt::Fixed(c), Pt::Var(4, 5), -1.0), &x);
            check(&SmoothNorm::new((1, 2), c, 1e-9, 2.0), &x);
            check(&DistPow::new((0, 1), c, 2.25, 1.25, 0.3), &x);
            check(&Pow1::new(2, 1.25, 1.7), &x);
            check(&LogOnePlusPow::new(3, 4.0, 1.25, 1.0), &x);
            check(&Softplus::new(4, -0.5, 1.0), &x);
            check(&ScaledExp::new(5, 0.8, 2.0), &x);
            let sum = Sum::new(1.0)
                .with(SqDist::new(Pt::Var(0, 1), Pt::Fixed(c), 1.0))
                .with(Pow1::new(5, 2.0, 1.0))
                .with(SmoothNorm::new((1, 2), c, 1e-9, 0.5));
            assert_eq!(sum.vars(), &[0, 1, 2, 5]);
            check(&sum, &x);
        }
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0);
        assert!((sigmoid(1.0) + sigmoid(-1.0) - 1.0).abs() < 1e-15);
    }
}
