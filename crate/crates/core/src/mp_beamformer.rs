//! Minimum-power (MP) relay beamformer.
//!
//! Minimises `sum_k ||B h~_k||^2 p_k + Tr(B B^H) sigma^2 = ||L b||^2` subject
//! to `gamma_k >= gamma_k*`. Each SINR constraint reads
//!
//! ```text
//! |f_k^T b| / sqrt(gamma_k*) >= || [ d_kj^T b ]_j ; sigma G_k b ; sigma ||
//! ```
//!
//! which is a second-order cone once the phase of `f_k^T b` is fixed:
//! replacing `|f_k^T b|` by `Re(e^{-i phi_k} f_k^T b)` gives an inner
//! approximation that is exact when `phi_k = arg(f_k^T b)`. The solver
//! alternates between the cone program for fixed phases and re-aligning the
//! phases to the current solution; every step keeps the previous point
//! feasible, so the relay power never increases.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{ComplexField, DMatrix, DVector};
use num_traits::Float;

use crate::channel::PairingMap;
use crate::error::{Error, Result};
use crate::reduction::{build_couplings, column_mixer, unvec, CouplingSet, ReducedChannels, RelayBeamformer, Scheme};
use crate::socp::{ConeSolver, Feasibility, SocCone, SocProgram};
use crate::{CMatrix, CVector, C64};

/// Power cap used by [`solve_mp`] when none is given.
pub const DEFAULT_POWER_CAP: f64 = 1e8;

/// SINR constraint data for one destination.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrCone {
    /// `f_k`, the desired-signal coupling.
    pub signal: CVector,
    /// Rows `d_kj^T`, one per interfering source.
    pub interference: CMatrix,
    /// `sigma G_k`.
    pub noise: CMatrix,
    /// `sigma`, the destination noise term.
    pub constant: f64,
}

/// The MP problem in vectorised form.
#[derive(Debug, Clone, PartialEq)]
pub struct SocpProblem {
    /// `L` with `||L b||^2` equal to the relay power.
    pub objective_factor: CMatrix,
    pub cones: Vec<SinrCone>,
    /// `gamma_k*`; a zero target drops the constraint.
    pub targets: Vec<f64>,
    /// Reduced dimension `r`.
    pub dim: usize,
}

fn embed(m: &CMatrix) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    let mut out = DMatrix::zeros(2 * rows, 2 * cols);
    for i in 0..rows {
        for j in 0..cols {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i, cols + j)] = -z.im;
            out[(rows + i, j)] = z.im;
            out[(rows + i, cols + j)] = z.re;
        }
    }
    out
}

/// Coefficients of `x -> Re(a^T b)` for `x = [Re b; Im b]`.
fn embed_real_part(a: &CVector) -> DVector<f64> {
    let n = a.len();
    DVector::from_fn(2 * n, |i, _| if i < n { a[i].re } else { -a[i - n].im })
}

/// `[Re b; Im b]`.
pub fn to_real(b: &CVector) -> DVector<f64> {
    let n = b.len();
    DVector::from_fn(2 * n, |i, _| if i < n { b[i].re } else { b[i - n].im })
}

/// Inverse of [`to_real`] for a length-`n` vector.
pub fn to_complex(x: &DVector<f64>, n: usize) -> CVector {
    CVector::from_fn(n, |i, _| C64::new(x[i], x[n + i]))
}

/// Assembles the MP problem from the coupling vectors.
///
/// `targets` holds one SINR target per source; zero drops the constraint.
pub fn assemble_socp(
    couplings: &CouplingSet,
    red: &ReducedChannels,
    powers: &[f64],
    sigma2: f64,
    targets: &[f64],
) -> Result<SocpProblem> {
    let k_n = couplings.num_sources();
    if targets.len() != k_n || targets.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidArgument(format!("need {k_n} finite nonnegative SINR targets")));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidArgument("MP beamforming needs sigma2 > 0".into()));
    }
    let r = red.dim();
    let n = r * r;
    // Psi = sum_k p_k (h~_k^T kron I)^H (h~_k^T kron I) + sigma^2 I
    let mut psi = CMatrix::identity(n, n) * C64::from(sigma2);
    for k in 0..k_n {
        let mixer = column_mixer(&red.effective(k));
        psi += mixer.adjoint() * mixer * C64::from(powers[k]);
    }
    let psi = (&psi + psi.adjoint()) * C64::from(0.5);
    let chol = psi
        .cholesky()
        .ok_or_else(|| Error::SolverFailure("relay power form is not positive definite".into()))?;
    let objective_factor = chol.l().adjoint();
    let sigma = Float::sqrt(sigma2);
    let cones = (0..k_n)
        .map(|k| {
            let rows: Vec<_> = couplings.d[k].iter().map(|(_, d)| d.transpose()).collect();
            let interference = if rows.is_empty() { CMatrix::zeros(0, n) } else { CMatrix::from_rows(&rows) };
            SinrCone {
                signal: couplings.f[k].clone(),
                interference,
                noise: &couplings.g_mats[k] * C64::from(sigma),
                constant: sigma,
            }
        })
        .collect();
    Ok(SocpProblem { objective_factor, cones, targets: targets.to_vec(), dim: r })
}

impl SocpProblem {
    pub fn num_sources(&self) -> usize {
        self.cones.len()
    }

    /// Smallest `alpha` with `alpha b` meeting every target, or `None` if no
    /// scaling of `b` does.
    pub fn min_feasible_scale(&self, b: &CVector) -> Option<f64> {
        let mut alpha2: f64 = 0.0;
        for (cone, &t) in self.cones.iter().zip(&self.targets) {
            if t <= 0.0 {
                continue;
            }
            let desired = (cone.signal.transpose() * b)[(0, 0)].modulus_squared();
            let rest = (&cone.interference * b).norm_squared() + (&cone.noise * b).norm_squared();
            let margin = desired - t * rest;
            if !(margin > 0.0) {
                return None;
            }
            alpha2 = alpha2.max(t * cone.constant * cone.constant / margin);
        }
        Some(Float::sqrt(alpha2))
    }

    /// Length of `b`.
    pub fn vector_len(&self) -> usize {
        self.dim * self.dim
    }

    /// Relay power `||L b||^2`.
    pub fn power(&self, b: &CVector) -> f64 {
        (&self.objective_factor * b).norm_squared()
    }

    /// `f_k / sqrt(gamma_k*)`, or `None` for a dropped constraint.
    pub fn signal_row(&self, k: usize) -> Option<CVector> {
        let t = self.targets[k];
        (t > 0.0).then(|| &self.cones[k].signal / C64::from(Float::sqrt(t)))
    }

    /// Complex entries stacked on the right-hand side of cone `k`.
    pub fn cone_len(&self, k: usize) -> usize {
        self.cones[k].interference.nrows() + self.cones[k].noise.nrows() + 1
    }

    /// SINR of every destination, evaluated from the coupling vectors.
    pub fn sinr(&self, b: &CVector) -> Vec<f64> {
        self.cones
            .iter()
            .map(|c| {
                let desired = (c.signal.transpose() * b)[(0, 0)].norm_sqr();
                let denom = (&c.interference * b).norm_squared()
                    + (&c.noise * b).norm_squared()
                    + c.constant * c.constant;
                desired / denom
            })
            .collect()
    }

    /// Phases `arg(f_k^T b)`.
    pub fn phases_of(&self, b: &CVector) -> Vec<f64> {
        self.cones.iter().map(|c| ComplexField::argument((c.signal.transpose() * b)[(0, 0)])).collect()
    }

    pub fn with_targets(&self, targets: Vec<f64>) -> Self {
        Self { targets, ..self.clone() }
    }

    /// Real cones for the SINR constraints at the given phases, padded with
    /// `extra` trailing zero columns.
    fn sinr_cones(&self, phases: &[f64], extra: usize) -> Vec<SocCone> {
        let n2 = 2 * self.vector_len();
        let mut out = Vec::new();
        for (k, cone) in self.cones.iter().enumerate() {
            let Some(row) = self.signal_row(k) else { continue };
            let rot = C64::new(Float::cos(phases[k]), -Float::sin(phases[k]));
            let c = embed_real_part(&(row * rot)).insert_rows(n2, extra, 0.0);
            let interference = embed(&cone.interference);
            let noise = embed(&cone.noise);
            let rows = interference.nrows() + noise.nrows() + 1;
            let mut a = DMatrix::zeros(rows, n2 + extra);
            a.view_mut((0, 0), (interference.nrows(), n2)).copy_from(&interference);
            a.view_mut((interference.nrows(), 0), (noise.nrows(), n2)).copy_from(&noise);
            let mut b = DVector::zeros(rows);
            b[rows - 1] = cone.constant;
            out.push(SocCone::new(a, b, c, 0.0));
        }
        out
    }

    /// SINR cones plus the hard cap `||L b||^2 <= cap`, over `x = [Re b; Im b]`.
    pub fn feasibility_program(&self, phases: &[f64], cap: f64) -> SocProgram {
        let n2 = 2 * self.vector_len();
        let mut cones = self.sinr_cones(phases, 0);
        let l = embed(&self.objective_factor);
        cones.push(SocCone::new(l, DVector::zeros(n2), DVector::zeros(n2), Float::sqrt(cap)).into_hard());
        SocProgram { objective: DVector::zeros(n2), cones }
    }

    /// Minimise `tau` over `(x, tau)` with `||L b|| <= tau <= sqrt(cap)` and the SINR cones.
    pub fn power_program(&self, phases: &[f64], cap: f64) -> SocProgram {
        let n2 = 2 * self.vector_len();
        let mut cones = self.sinr_cones(phases, 1);
        let l = embed(&self.objective_factor).insert_column(n2, 0.0);
        let mut tau = DVector::zeros(n2 + 1);
        tau[n2] = 1.0;
        cones.push(SocCone::new(l, DVector::zeros(n2), tau.clone(), 0.0));
        cones.push(SocCone::linear(-tau.clone(), Float::sqrt(cap)));
        SocProgram { objective: tau, cones }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpOptions {
    /// Relative tolerance for the phase alternation and the SINR post-check.
    pub tol: f64,
    pub power_cap: Option<f64>,
    pub max_phase_iters: usize,
    /// Attempts to re-align phases before declaring a target infeasible.
    pub infeasible_retries: usize,
    pub initial_phases: Option<Vec<f64>>,
}

impl Default for MpOptions {
    fn default() -> Self {
        Self { tol: 1e-6, power_cap: None, max_phase_iters: 20, infeasible_retries: 3, initial_phases: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpSolution {
    pub b: CVector,
    pub power: f64,
    pub sinr: Vec<f64>,
    pub phases: Vec<f64>,
    pub phase_iterations: usize,
}

/// Phase change (radians) below which a failed phase I is not retried.
const PHASE_RETRY_TOL: f64 = 1e-3;

/// Distance between two angles on the circle.
fn phase_gap(a: f64, b: f64) -> f64 {
    let tau = 2.0 * core::f64::consts::PI;
    let d = (a - b) % tau;
    let d = if d < 0.0 { d + tau } else { d };
    d.min(tau - d)
}

/// Moves `x` strictly inside the hard power cap if it sits on it.
fn inside_cap(problem: &SocpProblem, x: &DVector<f64>, cap: f64) -> DVector<f64> {
    let p = problem.power(&to_complex(x, problem.vector_len()));
    if p < cap * (1.0 - 1e-12) {
        x.clone()
    } else {
        x * Float::sqrt(cap / p) * (1.0 - 1e-6)
    }
}

/// Finds a point meeting `problem`'s targets under `cap`, re-aligning phases
/// on failure. Returns the point and the phases it was found with.
fn feasible_point<S: ConeSolver + ?Sized>(
    problem: &SocpProblem,
    solver: &S,
    mut phases: Vec<f64>,
    start: &DVector<f64>,
    cap: f64,
    retries: usize,
) -> Result<Option<(DVector<f64>, Vec<f64>)>> {
    let n = problem.vector_len();
    let mut x = inside_cap(problem, start, cap);
    for _ in 0..=retries {
        let prog = problem.feasibility_program(&phases, cap);
        match solver.find_feasible(&prog, &x)? {
            Feasibility::Feasible(p) => return Ok(Some((p, phases))),
            Feasibility::Infeasible { x: xi, .. } => {
                let b = to_complex(&xi, n);
                let aligned = problem.phases_of(&b);
                let moved = aligned.iter().zip(&phases).any(|(a, p)| phase_gap(*a, *p) > PHASE_RETRY_TOL);
                if !moved || b.norm() == 0.0 {
                    break;
                }
                phases = aligned;
                x = inside_cap(problem, &xi, cap);
            }
        }
    }
    Ok(None)
}

/// Solves the MP problem. Returns [`Error::Infeasible`] when the targets
/// cannot be met under the power cap.
pub fn solve_mp<S: ConeSolver + ?Sized>(problem: &SocpProblem, solver: &S, opts: &MpOptions) -> Result<MpSolution> {
    let n = problem.vector_len();
    let k_n = problem.num_sources();
    let cap = opts.power_cap.unwrap_or(DEFAULT_POWER_CAP);
    if !(cap > 0.0) {
        return Err(Error::InvalidArgument("power cap must be positive".into()));
    }
    let mut phases = opts.initial_phases.clone().unwrap_or_else(|| vec![0.0; k_n]);
    if phases.len() != k_n {
        return Err(Error::InvalidArgument(format!("need {k_n} initial phases")));
    }
    let mut start = DVector::zeros(2 * n);
    let mut best: Option<(CVector, f64)> = None;
    let mut iterations = 0;
    for _ in 0..opts.max_phase_iters.max(1) {
        iterations += 1;
        let Some((xf, ph)) = feasible_point(problem, solver, phases.clone(), &start, cap, opts.infeasible_retries)?
        else {
            if best.is_some() {
                break;
            }
            return Err(Error::Infeasible);
        };
        phases = ph;
        let prog = problem.power_program(&phases, cap);
        let level = Float::sqrt(problem.power(&to_complex(&xf, n)));
        let room = Float::sqrt(cap) - level;
        let tau0 = level + (0.5 * room).min(1e-3 * level + 1e-9);
        let sol = solver.minimize(&prog, &xf.clone().insert_row(2 * n, tau0))?;
        let x = sol.x.rows(0, 2 * n).into_owned();
        let b = to_complex(&x, n);
        let power = problem.power(&b);
        let improved = match &best {
            Some((_, p)) => *p - power > opts.tol * *p,
            None => true,
        };
        if best.as_ref().is_none_or(|(_, p)| power < *p) {
            best = Some((b.clone(), power));
        }
        if !improved {
            break;
        }
        phases = problem.phases_of(&b);
        start = x;
    }
    let (mut b, mut power) = best.expect("at least one feasible iterate");
    // The interior-point iterate sits strictly inside; shrink onto the
    // tightest constraint.
    if let Some(alpha) = problem.min_feasible_scale(&b) {
        if alpha < 1.0 && alpha > 0.0 {
            b *= C64::from(alpha);
            power = problem.power(&b);
        }
    }
    let sinr = problem.sinr(&b);
    for (k, (&g, &t)) in sinr.iter().zip(&problem.targets).enumerate() {
        if g < t * (1.0 - 10.0 * opts.tol) {
            return Err(Error::SolverFailure(format!("SINR {g} of source {k} below target {t}")));
        }
    }
    Ok(MpSolution { phases: problem.phases_of(&b), b, power, sinr, phase_iterations: iterations })
}

/// MP beamformer for per-source SINR targets.
#[allow(clippy::too_many_arguments)]
pub fn mp_beamformer<S: ConeSolver + ?Sized>(
    red: &ReducedChannels,
    pairing: &PairingMap,
    powers: &[f64],
    sigma2: f64,
    targets: &[f64],
    solver: &S,
    opts: &MpOptions,
) -> Result<RelayBeamformer> {
    let beta = vec![1.0; red.num_sources()];
    let cs = build_couplings(red, powers, pairing, sigma2, &beta)?;
    let problem = assemble_socp(&cs, red, powers, sigma2, targets)?;
    let sol = solve_mp(&problem, solver, opts)?;
    Ok(RelayBeamformer { b: unvec(&sol.b, red.dim())?, alpha: 1.0, scheme: Scheme::Mp, regularized: false })
}

/// Largest feasible point along a ray of SINR targets.
#[derive(Debug, Clone, PartialEq)]
pub struct RayPoint {
    /// Largest scale `s` found feasible; targets are `s * direction`.
    pub scale: f64,
    /// A beamformer meeting `s * direction` under the cap.
    pub b: CVector,
}

/// Bisection on `s` for the largest SINR targets `s * direction` that fit
/// within the relay power cap. `guess` seeds the bracket search; `rel_tol`
/// is the final relative bracket width.
pub fn max_ray_scale<S: ConeSolver + ?Sized>(
    problem: &SocpProblem,
    direction: &[f64],
    cap: f64,
    solver: &S,
    guess: f64,
    rel_tol: f64,
    opts: &MpOptions,
) -> Result<RayPoint> {
    let k_n = problem.num_sources();
    let n = problem.vector_len();
    if direction.len() != k_n || direction.iter().any(|d| !(*d >= 0.0)) || direction.iter().all(|d| *d == 0.0) {
        return Err(Error::InvalidArgument("ray direction must be nonnegative and nonzero".into()));
    }
    let at = |s: f64| problem.with_targets(direction.iter().map(|d| d * s).collect());
    let mut phases = opts.initial_phases.clone().unwrap_or_else(|| vec![0.0; k_n]);
    let mut lo = (0.0, DVector::zeros(2 * n));
    let mut hi = f64::INFINITY;
    let mut s = if guess > 0.0 { guess } else { 1.0 };
    let probe = |s: f64, lo: &(f64, DVector<f64>), phases: &mut Vec<f64>| -> Result<Option<DVector<f64>>> {
        // Once a feasible point exists its phases are carried, and retries rarely pay off.
        let retries = if lo.0 > 0.0 { 0 } else { opts.infeasible_retries };
        let found = feasible_point(&at(s), solver, phases.clone(), &lo.1, cap, retries)?;
        Ok(found.map(|(x, ph)| {
            *phases = problem.phases_of(&to_complex(&x, n));
            if phases.iter().any(|p| !p.is_finite()) {
                *phases = ph;
            }
            x
        }))
    };
    // Bracket.
    for _ in 0..64 {
        match probe(s, &lo, &mut phases)? {
            Some(x) => {
                lo = (s, x);
                if hi.is_finite() {
                    break;
                }
                s *= 2.0;
            }
            None => {
                hi = s;
                if lo.0 > 0.0 {
                    break;
                }
                s *= 0.25;
            }
        }
    }
    if !hi.is_finite() {
        return Err(Error::SolverFailure("SINR ray has no finite upper bound".into()));
    }
    if lo.0 == 0.0 {
        return Ok(RayPoint { scale: 0.0, b: CVector::zeros(n) });
    }
    while hi - lo.0 > rel_tol * hi {
        let mid = 0.5 * (lo.0 + hi);
        match probe(mid, &lo, &mut phases)? {
            Some(x) => lo = (mid, x),
            None => hi = mid,
        }
    }
    Ok(RayPoint { scale: lo.0, b: to_complex(&lo.1, n) })
}
