//! Small dense second-order cone programs.
//!
//! Programs are in the form
//!
//! ```text
//! minimize    c0^T x
//! subject to  || A_i x + b_i || <= c_i^T x + d_i,   i = 1..m
//! ```
//!
//! A cone with zero rows is the linear inequality `c_i^T x + d_i >= 0`.
//! [`BarrierSolver`] is a log-barrier interior-point method with Newton
//! centering and backtracking line search, preceded by a phase-I search for
//! a strictly feasible point.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::error::{Error, Result};

/// One constraint `||a x + b|| <= c^T x + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocCone {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: f64,
    /// Hard cones are kept strictly satisfied during phase I; soft cones are
    /// relaxed by the phase-I slack.
    pub hard: bool,
}

impl SocCone {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>, d: f64) -> Self {
        Self { a, b, c, d, hard: false }
    }

    /// `c^T x + d >= 0`.
    pub fn linear(c: DVector<f64>, d: f64) -> Self {
        let n = c.len();
        Self { a: DMatrix::zeros(0, n), b: DVector::zeros(0), c, d, hard: false }
    }

    pub fn into_hard(mut self) -> Self {
        self.hard = true;
        self
    }

    /// `c^T x + d - ||a x + b||`; positive in the interior.
    pub fn margin(&self, x: &DVector<f64>) -> f64 {
        self.c.dot(x) + self.d - (&self.a * x + &self.b).norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SocProgram {
    pub objective: DVector<f64>,
    pub cones: Vec<SocCone>,
}

impl SocProgram {
    pub fn dim(&self) -> usize {
        self.objective.len()
    }

    /// Smallest cone margin at `x` (`+inf` without cones).
    pub fn min_margin(&self, x: &DVector<f64>) -> f64 {
        self.cones.iter().map(|c| c.margin(x)).fold(f64::INFINITY, f64::min)
    }

    fn check(&self) -> Result<()> {
        let n = self.dim();
        for (i, c) in self.cones.iter().enumerate() {
            if c.a.ncols() != n || c.c.len() != n || c.a.nrows() != c.b.len() {
                return Err(Error::InvalidArgument(format!("cone {i} has inconsistent dimensions")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SocSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// Certified bound on `objective - optimum`.
    pub gap: f64,
    pub newton_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    /// A strictly feasible point.
    Feasible(DVector<f64>),
    /// No strictly feasible point exists (within the phase-I search ball).
    /// `violation` is a certified lower bound on the smallest achievable
    /// worst-case soft-cone violation.
    Infeasible { x: DVector<f64>, violation: f64 },
}

/// Contract for pluggable cone solvers.
pub trait ConeSolver {
    /// Minimises the program starting from a strictly feasible `x0`. The
    /// returned gap must not exceed the solver's tolerance.
    fn minimize(&self, prog: &SocProgram, x0: &DVector<f64>) -> Result<SocSolution>;

    /// Searches for a strictly feasible point. `x0` must strictly satisfy
    /// every hard cone.
    fn find_feasible(&self, prog: &SocProgram, x0: &DVector<f64>) -> Result<Feasibility>;
}

/// Log-barrier interior-point method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSolver {
    /// Relative duality-gap tolerance.
    pub tol: f64,
    /// Barrier weight growth factor per outer iteration.
    pub mu: f64,
    pub t0: f64,
    pub max_outer: usize,
    pub max_newton: usize,
    /// Phase I stays within `||x|| <= ball_radius * max(1, ||x0||)`.
    pub ball_radius: f64,
}

impl Default for BarrierSolver {
    fn default() -> Self {
        Self { tol: 1e-6, mu: 20.0, t0: 1.0, max_outer: 60, max_newton: 100, ball_radius: 1e6 }
    }
}

struct Prepared {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    d: f64,
    /// `a^T a - c c^T`
    m: DMatrix<f64>,
}

impl Prepared {
    fn from_cone(cone: &SocCone) -> Self {
        let mut m = cone.a.tr_mul(&cone.a);
        m.ger(-1.0, &cone.c, &cone.c, 1.0);
        Self { a: cone.a.clone(), b: cone.b.clone(), c: cone.c.clone(), d: cone.d, m }
    }

    /// `(s, u, w)` with `w = s^2 - |u|^2`, or `None` outside the cone interior.
    fn eval(&self, x: &DVector<f64>) -> Option<(f64, DVector<f64>, f64)> {
        let s = self.c.dot(x) + self.d;
        if !(s > 0.0) {
            return None;
        }
        let u = &self.a * x + &self.b;
        let w = s * s - u.norm_squared();
        if w > 0.0 && w.is_finite() {
            Some((s, u, w))
        } else {
            None
        }
    }
}

struct Barrier {
    cones: Vec<Prepared>,
    objective: DVector<f64>,
}

impl Barrier {
    fn new(objective: DVector<f64>, cones: &[SocCone]) -> Self {
        Self { cones: cones.iter().map(Prepared::from_cone).collect(), objective }
    }

    fn degree(&self) -> f64 {
        2.0 * self.cones.len() as f64
    }

    fn value(&self, t: f64, x: &DVector<f64>) -> Option<f64> {
        let mut v = t * self.objective.dot(x);
        for cone in &self.cones {
            let (_, _, w) = cone.eval(x)?;
            v -= Float::ln(w);
        }
        Some(v)
    }

    fn in_domain(&self, x: &DVector<f64>) -> bool {
        self.cones.iter().all(|c| c.eval(x).is_some())
    }

    fn gradient_hessian(&self, t: f64, x: &DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let n = x.len();
        let mut g = &self.objective * t;
        let mut h = DMatrix::zeros(n, n);
        for cone in &self.cones {
            let (s, u, w) = cone.eval(x)?;
            let mut q = &cone.c * s;
            q.gemv_tr(-1.0, &cone.a, &u, 1.0);
            g.axpy(-2.0 / w, &q, 1.0);
            let coef = 2.0 / w;
            h.zip_apply(&cone.m, |hij, mij| *hij += coef * mij);
            h.ger(4.0 / (w * w), &q, &q, 1.0);
        }
        Some((g, h))
    }

    /// Newton direction, regularising the Hessian if it is numerically
    /// indefinite.
    fn newton_direction(g: &DVector<f64>, mut h: DMatrix<f64>) -> Option<DVector<f64>> {
        let n = g.len();
        let scale = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
        let mut ridge = 0.0;
        for _ in 0..8 {
            if let Some(ch) = h.clone().cholesky() {
                return Some(-ch.solve(g));
            }
            ridge = if ridge == 0.0 { 1e-14 * scale } else { ridge * 100.0 };
            for i in 0..n {
                h[(i, i)] += ridge;
            }
        }
        None
    }

    /// Newton centering at barrier weight `t`. Stops early as soon as `stop`
    /// holds for an iterate; the flag reports whether that happened.
    fn center(
        &self,
        t: f64,
        x: &mut DVector<f64>,
        max_newton: usize,
        stop: &dyn Fn(&DVector<f64>) -> bool,
    ) -> Result<(usize, bool)> {
        const ARMIJO: f64 = 0.1;
        for step in 0..max_newton {
            let (g, h) = self
                .gradient_hessian(t, x)
                .ok_or_else(|| Error::SolverFailure("iterate left the cone interior".into()))?;
            let dx = Self::newton_direction(&g, h)
                .ok_or_else(|| Error::SolverFailure("singular Newton system".into()))?;
            let slope = g.dot(&dx);
            if -slope * 0.5 <= 1e-10 {
                return Ok((step, false));
            }
            let mut alpha = 1.0;
            let mut trial = &*x + &dx;
            while !self.in_domain(&trial) {
                alpha *= 0.5;
                if alpha < 1e-16 {
                    return Ok((step, false));
                }
                trial = &*x + &dx * alpha;
            }
            let f0 = self.value(t, x).unwrap_or(f64::INFINITY);
            loop {
                match self.value(t, &trial) {
                    Some(f) if f <= f0 + ARMIJO * alpha * slope => break,
                    _ => {}
                }
                alpha *= 0.5;
                if alpha < 1e-16 {
                    // No further decrease representable.
                    return Ok((step, false));
                }
                trial = &*x + &dx * alpha;
            }
            *x = trial;
            if stop(x) {
                return Ok((step + 1, true));
            }
        }
        Ok((max_newton, false))
    }
}

impl ConeSolver for BarrierSolver {
    fn minimize(&self, prog: &SocProgram, x0: &DVector<f64>) -> Result<SocSolution> {
        prog.check()?;
        if x0.len() != prog.dim() {
            return Err(Error::InvalidArgument("starting point has the wrong dimension".into()));
        }
        if !(prog.min_margin(x0) > 0.0) {
            return Err(Error::InvalidArgument("starting point is not strictly feasible".into()));
        }
        let barrier = Barrier::new(prog.objective.clone(), &prog.cones);
        let mut x = x0.clone();
        let mut t = self.t0;
        let mut steps = 0;
        for _ in 0..self.max_outer {
            let (s, _) = barrier.center(t, &mut x, self.max_newton, &|_| false)?;
            steps += s;
            let objective = prog.objective.dot(&x);
            let gap = barrier.degree() / t;
            if gap <= self.tol * objective.abs().max(1.0) {
                return Ok(SocSolution { x, objective, gap, newton_steps: steps });
            }
            t *= self.mu;
        }
        Err(Error::SolverFailure(format!("no convergence after {} barrier iterations", self.max_outer)))
    }

    fn find_feasible(&self, prog: &SocProgram, x0: &DVector<f64>) -> Result<Feasibility> {
        prog.check()?;
        let n = prog.dim();
        if x0.len() != n {
            return Err(Error::InvalidArgument("starting point has the wrong dimension".into()));
        }
        if prog.min_margin(x0) > 0.0 {
            return Ok(Feasibility::Feasible(x0.clone()));
        }
        if prog.cones.iter().any(|c| c.hard && !(c.margin(x0) > 0.0)) {
            return Err(Error::InvalidArgument("starting point violates a hard cone".into()));
        }
        // Variables (x, z); soft cones are relaxed by z, which is minimised.
        let radius = self.ball_radius * x0.norm().max(1.0);
        let mut cones: Vec<SocCone> = prog
            .cones
            .iter()
            .map(|cone| {
                let a = cone.a.clone().insert_column(n, 0.0);
                let c = cone.c.clone().insert_row(n, if cone.hard { 0.0 } else { 1.0 });
                SocCone { a, b: cone.b.clone(), c, d: cone.d, hard: cone.hard }
            })
            .collect();
        let mut ball = DMatrix::zeros(n, n + 1);
        ball.view_mut((0, 0), (n, n)).fill_with_identity();
        cones.push(SocCone::new(ball, DVector::zeros(n), DVector::zeros(n + 1), radius).into_hard());

        let worst = prog.cones.iter().filter(|c| !c.hard).map(|c| -c.margin(x0)).fold(f64::NEG_INFINITY, f64::max);
        let z0 = worst + worst.abs().max(1.0);
        let mut x = x0.clone().insert_row(n, z0);
        let mut objective = DVector::zeros(n + 1);
        objective[n] = 1.0;
        let barrier = Barrier::new(objective, &cones);
        let mut t = self.t0;
        let feasible = |y: &DVector<f64>| y[n] < 0.0;
        for _ in 0..self.max_outer {
            let (_, hit) = barrier.center(t, &mut x, self.max_newton, &feasible)?;
            if hit {
                let point = x.rows(0, n).into_owned();
                // The slack guarantees strict feasibility up to rounding.
                if prog.min_margin(&point) > 0.0 {
                    return Ok(Feasibility::Feasible(point));
                }
            }
            let z = x[n];
            let gap = barrier.degree() / t;
            if z - gap > 0.0 || (gap <= self.tol * z.abs().max(1.0) && z >= 0.0) {
                let violation = (z - gap).max(0.0);
                return Ok(Feasibility::Infeasible { x: x.rows(0, n).into_owned(), violation });
            }
            t *= self.mu;
        }
        Err(Error::SolverFailure("phase I did not converge".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn unit_ball(n: usize) -> SocCone {
        SocCone::new(DMatrix::identity(n, n), DVector::zeros(n), DVector::zeros(n), 1.0)
    }

    #[test]
    fn linear_objective_over_ball() {
        let prog = SocProgram { objective: v(&[3.0, -4.0]), cones: alloc::vec![unit_ball(2)] };
        let sol = BarrierSolver { tol: 1e-9, ..Default::default() }.minimize(&prog, &v(&[0.0, 0.0])).unwrap();
        assert!((sol.objective + 5.0).abs() < 1e-7);
        assert!((sol.x[0] + 0.6).abs() < 1e-3 && (sol.x[1] - 0.8).abs() < 1e-3);
    }

    #[test]
    fn epigraph_of_distance() {
        // minimize t s.t. ||x - (1,2)|| <= t, plus x_1 >= 3.
        let mut a = DMatrix::zeros(2, 3);
        a[(0, 0)] = 1.0;
        a[(1, 1)] = 1.0;
        let cone = SocCone::new(a, v(&[-1.0, -2.0]), v(&[0.0, 0.0, 1.0]), 0.0);
        let lin = SocCone::linear(v(&[1.0, 0.0, 0.0]), -3.0);
        let prog = SocProgram { objective: v(&[0.0, 0.0, 1.0]), cones: alloc::vec![cone, lin] };
        let sol = BarrierSolver { tol: 1e-10, ..Default::default() }.minimize(&prog, &v(&[4.0, 0.0, 10.0])).unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-8, "{}", sol.objective);
    }

    #[test]
    fn rejects_infeasible_start() {
        let prog = SocProgram { objective: v(&[1.0, 0.0]), cones: alloc::vec![unit_ball(2)] };
        assert!(BarrierSolver::default().minimize(&prog, &v(&[2.0, 0.0])).is_err());
    }

    #[test]
    fn phase_one_finds_point() {
        // ||x|| <= 1 and x_0 >= 0.9, start outside both.
        let prog = SocProgram {
            objective: v(&[0.0, 0.0]),
            cones: alloc::vec![unit_ball(2), SocCone::linear(v(&[1.0, 0.0]), -0.9)],
        };
        match BarrierSolver::default().find_feasible(&prog, &v(&[-3.0, 2.0])).unwrap() {
            Feasibility::Feasible(x) => assert!(prog.min_margin(&x) > 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn phase_one_detects_infeasibility() {
        let prog = SocProgram {
            objective: v(&[0.0, 0.0]),
            cones: alloc::vec![unit_ball(2), SocCone::linear(v(&[1.0, 0.0]), -2.0)],
        };
        match BarrierSolver::default().find_feasible(&prog, &v(&[0.0, 0.0])).unwrap() {
            Feasibility::Infeasible { violation, .. } => assert!(violation > 0.0 && violation <= 0.5 + 1e-6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hard_cones_must_hold_at_start() {
        let prog = SocProgram { objective: v(&[0.0, 0.0]), cones: alloc::vec![unit_ball(2).into_hard()] };
        assert!(BarrierSolver::default().find_feasible(&prog, &v(&[2.0, 0.0])).is_err());
    }
}
