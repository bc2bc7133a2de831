//! Smooth convex programs solved by a log-barrier interior-point method.
//!
//! Problems have the form `minimize Σ fᵢ(x)` subject to `g_j(x) ≤ 0` and box
//! bounds. Newton systems are banded (the bandwidth is read off the
//! variables each term touches), so programs whose terms couple only nearby
//! variables solve in time linear in their size.

pub mod linalg;
pub mod terms;

use linalg::BorderedBand;
pub use terms::SmoothFn;

pub struct ConvexProgram {
    pub dim: usize,
    pub objective: Vec<Box<dyn SmoothFn>>,
    pub constraints: Vec<Box<dyn SmoothFn>>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub x0: Option<Vec<f64>>,
}

impl ConvexProgram {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            objective: Vec::new(),
            constraints: Vec::new(),
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
            x0: None,
        }
    }

    pub fn add_objective(&mut self, term: impl SmoothFn + 'static) {
        self.objective.push(Box::new(term));
    }

    /// Adds the constraint `term(x) ≤ 0`.
    pub fn add_constraint(&mut self, term: impl SmoothFn + 'static) {
        self.constraints.push(Box::new(term));
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) {
        self.lower[var] = lo;
        self.upper[var] = hi;
    }

    pub fn with_start(mut self, x0: Vec<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|t| t.value(x)).sum()
    }

    /// Largest constraint value (box bounds included as `lo − x`, `x − hi`)
    /// and the index of the worst general constraint, if one is the maximum.
    pub fn max_violation(&self, x: &[f64]) -> (f64, Option<usize>) {
        let mut worst = f64::NEG_INFINITY;
        let mut idx = None;
        for (j, c) in self.constraints.iter().enumerate() {
            let v = c.value(x);
            let v = if v.is_nan() { f64::INFINITY } else { v };
            if v > worst {
                worst = v;
                idx = Some(j);
            }
        }
        for i in 0..self.dim {
            let v = (self.lower[i] - x[i]).max(x[i] - self.upper[i]);
            if v > worst {
                worst = v;
                idx = None;
            }
        }
        (worst, idx)
    }

    pub fn is_strictly_feasible(&self, x: &[f64]) -> bool {
        x.len() == self.dim
            && x.iter().all(|v| v.is_finite())
            && (0..self.dim).all(|i| x[i] > self.lower[i] && x[i] < self.upper[i])
            && self.constraints.iter().all(|c| c.value(x) < 0.0)
    }

    /// Loosens every constraint that `x` does not satisfy strictly, by its
    /// value plus `margin`, so that `x` becomes strictly feasible. Bounds
    /// touched by `x` are widened the same way. Returns the largest shift.
    pub fn relax_to_strict(&mut self, x: &[f64], margin: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &mut self.constraints {
            let v = c.value(x);
            if v >= 0.0 {
                let shift = v + margin;
                let old = std::mem::replace(c, Box::new(terms::Affine::constant(0.0)));
                let mut s = terms::Sum::new(-shift);
                s.push(old);
                *c = Box::new(s);
                worst = worst.max(shift);
            }
        }
        for i in 0..self.dim {
            if x[i] <= self.lower[i] {
                let shift = self.lower[i] - x[i] + margin;
                self.lower[i] -= shift;
                worst = worst.max(shift);
            }
            if x[i] >= self.upper[i] {
                let shift = x[i] - self.upper[i] + margin;
                self.upper[i] += shift;
                worst = worst.max(shift);
            }
        }
        worst
    }

    /// Number of barrier terms (constraints plus finite bounds).
    pub fn barrier_count(&self) -> usize {
        self.constraints.len()
            + self.lower.iter().filter(|v| v.is_finite()).count()
            + self.upper.iter().filter(|v| v.is_finite()).count()
    }

    fn default_start(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                let (lo, hi) = (self.lower[i], self.upper[i]);
                match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => 0.5 * (lo + hi),
                    (true, false) => lo + 1.0,
                    (false, true) => hi - 1.0,
                    (false, false) => 0.0,
                }
            })
            .collect()
    }

    fn interior_clamp(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                let (lo, hi) = (self.lower[i], self.upper[i]);
                let width = hi - lo;
                let margin = if width.is_finite() { 1e-6 * width } else { 1e-6 * (1.0 + x[i].abs()) };
                let mut v = x[i];
                if lo.is_finite() && v <= lo + margin {
                    v = lo + margin;
                }
                if hi.is_finite() && v >= hi - margin {
                    v = hi - margin;
                }
                v
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Duality-gap bound `m/t` at exit.
    pub tol: f64,
    pub max_outer: usize,
    pub t0: f64,
    pub mu: f64,
    /// Stop centering once half the squared Newton decrement is below this.
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_outer: 50,
            t0: 1.0,
            mu: 10.0,
            newton_tol: 1e-9,
            max_newton: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIters,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x_star: Vec<f64>,
    pub objective_value: f64,
    /// Duality-gap bound `m/t` of the returned point.
    pub kkt_residual: f64,
    pub status: SolveStatus,
    pub outer_iters: usize,
    pub newton_iters: usize,
    /// Objective after each outer (centering) iteration.
    pub objective_trace: Vec<f64>,
    /// For infeasible programs, the general constraint that stayed violated.
    pub violated: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Infeasible {
    pub constraint: Option<usize>,
    pub max_violation: f64,
}

/// Barrier view of a program, optionally in phase-I form where every
/// constraint is shifted by an extra trailing variable `s` that is also the
/// objective.
struct Barrier<'a> {
    p: &'a ConvexProgram,
    phase1: bool,
    n: usize,
    bw: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl<'a> Barrier<'a> {
    fn new(p: &'a ConvexProgram, phase1: bool, s_lower: f64) -> Self {
        let mut lower = p.lower.clone();
        let mut upper = p.upper.clone();
        if phase1 {
            lower.push(s_lower);
            upper.push(f64::INFINITY);
        }
        let bw = p
            .objective
            .iter()
            .chain(p.constraints.iter())
            .map(|t| {
                let v = t.vars();
                match (v.iter().min(), v.iter().max()) {
                    (Some(a), Some(b)) => b - a,
                    _ => 0,
                }
            })
            .max()
            .unwrap_or(0);
        Self {
            p,
            phase1,
            n: p.dim + phase1 as usize,
            bw,
            lower,
            upper,
        }
    }

    fn s(&self, x: &[f64]) -> f64 {
        if self.phase1 {
            x[self.p.dim]
        } else {
            0.0
        }
    }

    fn objective(&self, x: &[f64]) -> f64 {
        if self.phase1 {
            self.s(x)
        } else {
            self.p.objective_value(x)
        }
    }

    fn in_box(&self, x: &[f64]) -> bool {
        (0..self.n).all(|i| x[i].is_finite() && x[i] > self.lower[i] && x[i] < self.upper[i])
    }

    /// Barrier-weighted merit `t·f − Σ log(−g) − Σ log(box slack)`, or
    /// `None` outside the strict interior.
    fn merit(&self, x: &[f64], t: f64) -> Option<f64> {
        if !self.in_box(x) {
            return None;
        }
        let s = self.s(x);
        let mut m = t * self.objective(x);
        for c in &self.p.constraints {
            let g = c.value(x) - s;
            if !(g < 0.0) {
                return None;
            }
            m -= (-g).ln();
        }
        for i in 0..self.n {
            if self.lower[i].is_finite() {
                m -= (x[i] - self.lower[i]).ln();
            }
            if self.upper[i].is_finite() {
                m -= (self.upper[i] - x[i]).ln();
            }
        }
        m.is_finite().then_some(m)
    }

    fn grad_hess(&self, x: &[f64], t: f64, grad: &mut [f64], h: &mut BorderedBand) {
        grad.fill(0.0);
        h.clear();
        let mut lg = Vec::new();
        let mut lh = Vec::new();
        let load = |term: &dyn SmoothFn, lg: &mut Vec<f64>, lh: &mut Vec<f64>| {
            let k = term.vars().len();
            lg.clear();
            lg.resize(k, 0.0);
            lh.clear();
            lh.resize(k * k, 0.0);
            term.gradient(x, lg);
            term.hessian(x, lh);
        };
        if self.phase1 {
            grad[self.p.dim] += t;
        } else {
            for term in &self.p.objective {
                load(term.as_ref(), &mut lg, &mut lh);
                let vars = term.vars();
                let k = vars.len();
                for a in 0..k {
                    grad[vars[a]] += t * lg[a];
                    for b in 0..k {
                        h.add(vars[a], vars[b], t * lh[a * k + b]);
                    }
                }
            }
        }
        let s = self.s(x);
        let sv = self.p.dim;
        for c in &self.p.constraints {
            load(c.as_ref(), &mut lg, &mut lh);
            let vars = c.vars();
            let k = vars.len();
            let r = -(c.value(x) - s);
            let inv = 1.0 / r;
            let inv2 = inv * inv;
            for a in 0..k {
                grad[vars[a]] += lg[a] * inv;
                for b in 0..k {
                    h.add(vars[a], vars[b], lg[a] * lg[b] * inv2 + lh[a * k + b] * inv);
                }
            }
            if self.phase1 {
                // constraint is g(x) − s: ∂/∂s = −1
                grad[sv] -= inv;
                h.add(sv, sv, inv2);
                for a in 0..k {
                    h.add(sv, vars[a], -lg[a] * inv2);
                }
            }
        }
        for i in 0..self.n {
            if self.lower[i].is_finite() {
                let d = x[i] - self.lower[i];
                grad[i] -= 1.0 / d;
                h.add(i, i, 1.0 / (d * d));
            }
            if self.upper[i].is_finite() {
                let d = self.upper[i] - x[i];
                grad[i] += 1.0 / d;
                h.add(i, i, 1.0 / (d * d));
            }
        }
    }

    /// Damped Newton centering at weight `t`. Stops early when `stop` holds.
    fn center(
        &self,
        x: &mut Vec<f64>,
        t: f64,
        opts: &SolverOptions,
        newton_iters: &mut usize,
        stop: &dyn Fn(&[f64]) -> bool,
    ) -> bool {
        let mut grad = vec![0.0; self.n];
        let mut h = BorderedBand::new(self.n, self.phase1 as usize, self.bw);
        let mut merit = match self.merit(x, t) {
            Some(m) => m,
            None => return false,
        };
        for _ in 0..opts.max_newton {
            self.grad_hess(x, t, &mut grad, &mut h);
            let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            let Some(dx) = h.solve_regularized(&rhs) else {
                return false;
            };
            let slope: f64 = grad.iter().zip(&dx).map(|(g, d)| g * d).sum();
            if -slope / 2.0 <= opts.newton_tol || slope >= 0.0 {
                return false;
            }
            *newton_iters += 1;
            let mut step = 1.0;
            let mut accepted = None;
            let mut trial = x.clone();
            while step > 1e-20 {
                for i in 0..self.n {
                    trial[i] = x[i] + step * dx[i];
                }
                if let Some(m) = self.merit(&trial, t) {
                    if m <= merit + 0.25 * step * slope {
                        accepted = Some(m);
                        break;
                    }
                }
                step *= 0.5;
            }
            let Some(m) = accepted else {
                return false;
            };
            std::mem::swap(x, &mut trial);
            merit = m;
            if stop(x) {
                return true;
            }
        }
        false
    }
}

/// Finds a strictly feasible point, starting from the program's warm start
/// when present.
pub fn phase1_feasible(p: &ConvexProgram, opts: &SolverOptions) -> Result<Vec<f64>, Infeasible> {
    let start = p.x0.clone().unwrap_or_else(|| p.default_start());
    if p.is_strictly_feasible(&start) {
        return Ok(start);
    }
    let x = p.interior_clamp(&start);
    if p.is_strictly_feasible(&x) {
        return Ok(x);
    }
    let (worst, _) = p.max_violation(&x);
    if !worst.is_finite() {
        let (v, c) = p.max_violation(&x);
        return Err(Infeasible {
            constraint: c,
            max_violation: v,
        });
    }
    let s0 = worst.max(0.0) + 1.0;
    let s_lower = -1.0;
    let b = Barrier::new(p, true, s_lower);
    let mut z = x;
    z.push(s0);
    let done = |z: &[f64]| p.constraints.iter().all(|c| c.value(z) < 0.0);
    let m = (p.barrier_count() + 1) as f64;
    let mut t = opts.t0;
    let mut newton = 0;
    for _ in 0..opts.max_outer {
        if b.center(&mut z, t, opts, &mut newton, &done) {
            break;
        }
        if z[p.dim] < 0.0 && done(&z) {
            break;
        }
        if m / t <= opts.tol * 1e-3 {
            break;
        }
        t *= opts.mu;
    }
    z.truncate(p.dim);
    if p.is_strictly_feasible(&z) {
        Ok(z)
    } else {
        let (v, c) = p.max_violation(&z);
        Err(Infeasible {
            constraint: c,
            max_violation: v,
        })
    }
}

/// Barrier path following from a strictly feasible start (phase I is run
/// when the warm start is not strictly feasible).
pub fn minimize(p: &ConvexProgram, opts: &SolverOptions) -> SolveResult {
    let mut x = match phase1_feasible(p, opts) {
        Ok(x) => x,
        Err(inf) => {
            let x = p.x0.clone().unwrap_or_else(|| p.default_start());
            return SolveResult {
                objective_value: p.objective_value(&x),
                x_star: x,
                kkt_residual: f64::INFINITY,
                status: SolveStatus::Infeasible,
                outer_iters: 0,
                newton_iters: 0,
                objective_trace: Vec::new(),
                violated: inf.constraint,
            };
        }
    };
    let b = Barrier::new(p, false, 0.0);
    let m = p.barrier_count() as f64;
    let never = |_: &[f64]| false;
    let mut t = opts.t0;
    let mut newton = 0;
    let mut trace = Vec::new();
    let mut status = SolveStatus::MaxIters;
    let mut outer = 0;
    while outer < opts.max_outer {
        outer += 1;
        b.center(&mut x, t, opts, &mut newton, &never);
        trace.push(p.objective_value(&x));
        if m / t <= opts.tol {
            status = SolveStatus::Optimal;
            break;
        }
        t *= opts.mu;
    }
    SolveResult {
        objective_value: p.objective_value(&x),
        x_star: x,
        kkt_residual: if m == 0.0 { 0.0 } else { m / t },
        status,
        outer_iters: outer,
        newton_iters: newton,
        objective_trace: trace,
        violated: None,
    }
}

#[cfg(test)]
mod tests {
    use super::terms::*;
    use super::*;
    use crate::channel::Position2D;

    #[test]
    fn box_projection_optimum() {
        let a = [0.3, -0.7, 1.2];
        let mut p = ConvexProgram::new(3);
        for (i, &ai) in a.iter().enumerate() {
            p.add_objective(FnTerm::new(vec![i], move |x| (x[0] - ai).powi(2), move |x, g| g[0] = 2.0 * (x[0] - ai)));
            p.set_bounds(i, -2.0, 2.0);
        }
        let r = minimize(&p, &SolverOptions::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        for i in 0..3 {
            assert!((r.x_star[i] - a[i]).abs() < 1e-6);
        }
        assert!(r.objective_value < 1e-10);
    }

    #[test]
    fn linear_over_unit_disk() {
        let c = Position2D::new(1.0, -2.0);
        let mut p = ConvexProgram::new(2);
        p.add_objective(Affine::new(vec![0, 1], vec![c.x, c.y], 0.0));
        p.add_constraint(Sum::new(-1.0).with(SqDist::new(Pt::Var(0, 1), Pt::Fixed(Position2D::ORIGIN), 1.0)));
        let r = minimize(&p, &SolverOptions::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        let want = c * (-1.0 / c.norm());
        assert!((r.x_star[0] - want.x).abs() < 1e-6 && (r.x_star[1] - want.y).abs() < 1e-6);
        assert!(r.objective_value - (-c.norm()) <= 1e-6);
        for w in r.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn phase_one_examples() {
        let mut p = ConvexProgram::new(2);
        p.add_constraint(Sum::new(-1.0).with(SqDist::new(Pt::Var(0, 1), Pt::Fixed(Position2D::ORIGIN), 1.0)));
        let p = p.with_start(vec![5.0, 5.0]);
        let x = phase1_feasible(&p, &SolverOptions::default()).unwrap();
        assert!(x[0] * x[0] + x[1] * x[1] < 1.0);

        let mut q = ConvexProgram::new(1);
        q.set_bounds(0, 1.0, 2.0);
        q.add_constraint(Affine::new(vec![0], vec![1.0], 0.0));
        let err = phase1_feasible(&q, &SolverOptions::default()).unwrap_err();
        assert!(err.max_violation > 0.0);
        assert_eq!(minimize(&q, &SolverOptions::default()).status, SolveStatus::Infeasible);
    }

    #[test]
    fn relaxation_makes_point_strictly_feasible() {
        let mut p = ConvexProgram::new(2);
        p.add_constraint(Sum::new(-1.0).with(SqDist::new(Pt::Var(0, 1), Pt::Fixed(Position2D::ORIGIN), 1.0)));
        p.add_constraint(Affine::new(vec![0], vec![1.0], -0.5));
        p.set_bounds(1, 0.0, 1.0);
        let x = [1.0, 0.0];
        assert!(!p.is_strictly_feasible(&x));
        let shift = p.relax_to_strict(&x, 1e-12);
        assert!(p.is_strictly_feasible(&x));
        assert!((shift - 0.5).abs() < 1e-9);
        // untouched constraints keep their values
        assert!((p.constraints[0].value(&[0.0, 0.0]) + 1.0).abs() < 1e-9);
    }

    #[test]
    fn warm_start_kept_when_feasible() {
        let mut p = ConvexProgram::new(1);
        p.set_bounds(0, -1.0, 1.0);
        let p = p.with_start(vec![0.25]);
        assert_eq!(phase1_feasible(&p, &SolverOptions::default()).unwrap(), vec![0.25]);
    }

    #[test]
    fn identical_inputs_identical_results() {
        let build = || {
            let mut p = ConvexProgram::new(4);
            for i in 0..4 {
                p.add_objective(LogOnePlusPow::new(i, 3.0, 1.25, 1.0));
                p.add_objective(Affine::new(vec![i], vec![0.1 * (i + 1) as f64], 0.0));
                p.set_bounds(i, 0.5, 20.0);
            }
            for i in 0..3 {
                p.add_constraint(Affine::new(vec![i, i + 1], vec![1.0, 1.0], -10.0));
            }
            p
        };
        let a = minimize(&build(), &SolverOptions::default());
        let b = minimize(&build(), &SolverOptions::default());
        assert_eq!(a, b);
        assert_eq!(a.status, SolveStatus::Optimal);
    }
}
