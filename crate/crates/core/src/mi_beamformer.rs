//! Minimum-interference (MI) relay beamformer.
//!
//! The MI beamformer minimises inter-pair interference plus forwarded relay
//! noise, `b^H Phi b`, subject to fixed desired-signal gains `C^H b = g`.
//! This is a linearly-constrained minimum-variance problem with the closed
//! form `b = Phi^-1 C (C^H Phi^-1 C)^-1 g`. The result is then scaled by a
//! real `alpha` to spend exactly the relay power budget.

use alloc::format;

use nalgebra::{Cholesky, Dyn};
use num_traits::Float;

use crate::channel::PairingMap;
use crate::error::{Error, Result};
use crate::metrics::relay_power;
use crate::reduction::{build_couplings, unvec, CouplingSet, ReducedChannels, RelayBeamformer, Scheme};
use crate::{CMatrix, CVector, C64};

/// Relative tolerance on the relay power reached by [`mi_beamformer`].
pub const POWER_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiOptions {
    /// Bisection stopping width on `alpha`. [`mi_beamformer`] tightens it
    /// further if needed to keep the power error below [`POWER_REL_TOL`].
    pub delta_alpha: f64,
    /// Upper end of the bisection bracket; defaults to twice the
    /// closed-form scale.
    pub alpha_max: Option<f64>,
}

impl Default for MiOptions {
    fn default() -> Self {
        Self { delta_alpha: 1e-6, alpha_max: None }
    }
}

/// Unscaled MI weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MiSolution {
    pub b: CVector,
    /// A ridge was added because `Phi` was singular (only possible for
    /// `sigma^2 = 0`).
    pub regularized: bool,
}

/// Squared Cholesky pivot ratio below which a matrix counts as singular.
const SINGULAR_PIVOT_RATIO: f64 = 1e-12;

/// Cholesky factor of a Hermitian matrix, adding a small ridge when it is
/// numerically singular.
pub(crate) fn hermitian_factor(m: &CMatrix) -> Result<(Cholesky<C64, Dyn>, bool)> {
    if let Some(ch) = m.clone().cholesky() {
        // Rounding can let a singular matrix through with tiny pivots.
        let pivots = ch.l_dirty().diagonal().map(|x| x.re * x.re);
        if pivots.min() > SINGULAR_PIVOT_RATIO * pivots.max() {
            return Ok((ch, false));
        }
    }
    let n = m.nrows();
    let trace: f64 = (0..n).map(|i| m[(i, i)].re).sum();
    let ridge = if trace > 0.0 { 1e-12 * trace / n as f64 } else { 1e-12 };
    let mut loaded = m.clone();
    for i in 0..n {
        loaded[(i, i)] += C64::from(ridge);
    }
    loaded
        .cholesky()
        .map(|ch| (ch, true))
        .ok_or_else(|| Error::DegenerateChannel("interference matrix is not positive semidefinite".into()))
}

/// Closed-form minimiser of `b^H Phi b` subject to `C^H b = g`.
pub fn solve_mi(cs: &CouplingSet) -> Result<MiSolution> {
    let (phi_chol, regularized) = hermitian_factor(&cs.phi)?;
    let phi_inv_c = phi_chol.solve(&cs.c);
    let s = cs.c.adjoint() * &phi_inv_c;
    let s = (&s + s.adjoint()) * C64::from(0.5);
    let s_chol = s
        .cholesky()
        .ok_or_else(|| Error::DegenerateChannel("constraint matrix C is rank deficient".into()))?;
    let g = cs.g.map(C64::from);
    let b = phi_inv_c * s_chol.solve(&g);
    let residual = (cs.c.adjoint() * &b - &g).norm();
    if residual > 1e-6 * g.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateChannel(format!("MI constraint residual {residual:.3e}")));
    }
    Ok(MiSolution { b, regularized })
}

/// Bisection on the power scale `alpha` so that `p_R(alpha B)` meets
/// `target` from below. Returns the lower end of the final bracket.
pub fn scale_bisection(
    b: &CMatrix,
    red: &ReducedChannels,
    powers: &[f64],
    sigma2: f64,
    target: f64,
    delta_alpha: f64,
    alpha_max: f64,
) -> Result<f64> {
    if !(target > 0.0) || !(delta_alpha > 0.0) {
        return Err(Error::InvalidArgument("power target and delta_alpha must be positive".into()));
    }
    let unit = relay_power(b, red, powers, sigma2);
    if !(unit > 0.0) {
        return Err(Error::InvalidArgument("cannot scale a zero beamformer".into()));
    }
    let power_at = |alpha: f64| relay_power(&(b * C64::from(alpha)), red, powers, sigma2);
    if power_at(alpha_max) < target {
        return Err(Error::InvalidArgument(format!(
            "alpha_max = {alpha_max} does not reach the power target; use at least {}",
            2.0 * Float::sqrt(target / unit)
        )));
    }
    let (mut lower, mut upper) = (0.0, alpha_max);
    while upper - lower > delta_alpha {
        let alpha = 0.5 * (lower + upper);
        if power_at(alpha) < target {
            lower = alpha;
        } else {
            upper = alpha;
        }
    }
    Ok(lower)
}

/// MI beamformer scaled to the relay power budget `power_target`.
///
/// `beta` holds one desired-gain value per source.
pub fn mi_beamformer(
    red: &ReducedChannels,
    pairing: &PairingMap,
    powers: &[f64],
    sigma2: f64,
    power_target: f64,
    beta: &[f64],
    opts: &MiOptions,
) -> Result<RelayBeamformer> {
    let cs = build_couplings(red, powers, pairing, sigma2, beta)?;
    let sol = solve_mi(&cs)?;
    let b0 = unvec(&sol.b, red.dim())?;
    let unit = relay_power(&b0, red, powers, sigma2);
    if !(unit > 0.0) {
        return Err(Error::InvalidArgument("all desired-gain constraints are zero".into()));
    }
    let alpha_cf = Float::sqrt(power_target / unit);
    let delta = opts.delta_alpha.min(0.25 * POWER_REL_TOL * alpha_cf);
    let alpha_max = opts.alpha_max.unwrap_or(2.0 * alpha_cf);
    let alpha = scale_bisection(&b0, red, powers, sigma2, power_target, delta, alpha_max)?;
    if (alpha - alpha_cf).abs() > delta {
        return Err(Error::Consistency(format!(
            "bisection alpha {alpha} vs closed form {alpha_cf} (delta {delta})"
        )));
    }
    Ok(RelayBeamformer { b: b0 * C64::from(alpha), alpha, scheme: Scheme::Mi, regularized: sol.regularized })
}

/// Smallest `alpha` for which `alpha B` meets every SINR target, or `None`
/// when some target exceeds the high-power SINR limit of `B`.
pub fn scale_to_targets(
    b: &CMatrix,
    red: &ReducedChannels,
    powers: &[f64],
    sigma2: f64,
    pairing: &PairingMap,
    targets: &[f64],
) -> Option<f64> {
    let mut alpha2: f64 = 0.0;
    for k in 0..red.num_sources() {
        let kp = pairing.partner(k);
        let row = red.effective(k).transpose() * b;
        let gain = |j: usize| (&row * red.effective(j))[(0, 0)].norm_sqr() * powers[j];
        let desired = gain(kp);
        let scaled_noise: f64 = (0..red.num_sources())
            .filter(|&j| j != k && j != kp)
            .map(gain)
            .sum::<f64>()
            + row.norm_squared() * sigma2;
        let margin = desired - targets[k] * scaled_noise;
        if targets[k] <= 0.0 {
            continue;
        }
        if margin <= 0.0 {
            return None;
        }
        alpha2 = alpha2.max(targets[k] * sigma2 / margin);
    }
    Some(Float::sqrt(alpha2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::ComplexField;
    use crate::channel::{draw_channels, trial_rng};
    use crate::metrics::sinr;
    use crate::reduction::reduce;

    fn instance(k: usize, m: usize, seed: u64) -> (crate::ChannelSet, ReducedChannels) {
        let set = draw_channels(k, m, 0.0, &mut trial_rng(seed, 0))
            .unwrap()
            .with_powers(alloc::vec![10.0; k])
            .unwrap();
        let red = reduce(&set).unwrap();
        (set, red)
    }

    #[test]
    fn single_pair_meets_both_constraints() {
        let (set, red) = instance(2, 4, 1);
        let cs = build_couplings(&red, &set.powers, &set.pairing, 1.0, &[1.0, 2.0]).unwrap();
        let sol = solve_mi(&cs).unwrap();
        assert!(!sol.regularized);
        let gains = cs.c.adjoint() * &sol.b;
        assert!((gains[0] - C64::from(1.0)).modulus() < 1e-10);
        assert!((gains[1] - C64::from(2.0)).modulus() < 1e-10);
    }

    #[test]
    fn solution_is_linear_in_gains() {
        let (set, red) = instance(4, 8, 2);
        let cs1 = build_couplings(&red, &set.powers, &set.pairing, 1.0, &[1.0, 0.5, 2.0, 1.5]).unwrap();
        let cs3 = build_couplings(&red, &set.powers, &set.pairing, 1.0, &[3.0, 1.5, 6.0, 4.5]).unwrap();
        let b1 = solve_mi(&cs1).unwrap().b;
        let b3 = solve_mi(&cs3).unwrap().b;
        assert!((b1 * C64::from(3.0) - &b3).norm() < 1e-10 * b3.norm());
    }

    #[test]
    fn zero_noise_single_pair_takes_ridge_path() {
        let (set, red) = instance(2, 2, 3);
        let cs = build_couplings(&red, &set.powers, &set.pairing, 0.0, &[1.0, 1.0]).unwrap();
        let sol = solve_mi(&cs).unwrap();
        assert!(sol.regularized);
        let gains = cs.c.adjoint() * &sol.b;
        assert!((gains[0] - C64::from(1.0)).modulus() < 1e-8);
    }

    #[test]
    fn bisection_examples() {
        // p_R(B) = 4 with a single unit channel: 2|b|^2 + ... pick B so power is 4.
        let red = ReducedChannels::from_effective(CMatrix::identity(2, 2));
        let b = CMatrix::identity(2, 2); // power = 1 + 1 + 2 = 4
        assert!((relay_power(&b, &red, &[1.0, 1.0], 1.0) - 4.0).abs() < 1e-15);
        let a = scale_bisection(&b, &red, &[1.0, 1.0], 1.0, 1.0, 1e-9, 1.0).unwrap();
        assert!((a - 0.5).abs() <= 1e-9);
        let a = scale_bisection(&b, &red, &[1.0, 1.0], 1.0, 4.0, 1e-9, 2.0).unwrap();
        assert!((a - 1.0).abs() <= 1e-9);
        let err = scale_bisection(&b, &red, &[1.0, 1.0], 1.0, 16.0, 1e-9, 1.0);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
        assert!(scale_bisection(&CMatrix::zeros(2, 2), &red, &[1.0, 1.0], 1.0, 1.0, 1e-6, 1.0).is_err());
    }

    #[test]
    fn mi_meets_power_budget() {
        let (set, red) = instance(4, 8, 4);
        let bf = mi_beamformer(&red, &set.pairing, &set.powers, 1.0, 10.0, &[1.0; 4], &MiOptions::default())
            .unwrap();
        let p = relay_power(&bf.b, &red, &set.powers, 1.0);
        assert!((p - 10.0).abs() <= 1e-6 * 10.0);
        assert!(p <= 10.0);
        let g = sinr(&bf.b, &red, &set.powers, 1.0, &set.pairing);
        assert!(g.iter().all(|x| x.is_finite() && *x > 0.0));
    }

    #[test]
    fn target_scaling_matches_sinr() {
        let (set, red) = instance(4, 8, 5);
        let bf = mi_beamformer(&red, &set.pairing, &set.powers, 1.0, 10.0, &[1.0; 4], &MiOptions::default())
            .unwrap();
        let g = sinr(&bf.b, &red, &set.powers, 1.0, &set.pairing);
        let targets: alloc::vec::Vec<f64> = g.iter().map(|x| 0.5 * x).collect();
        let alpha = scale_to_targets(&bf.b, &red, &set.powers, 1.0, &set.pairing, &targets).unwrap();
        assert!(alpha < 1.0);
        let scaled = &bf.b * C64::from(alpha);
        let g2 = sinr(&scaled, &red, &set.powers, 1.0, &set.pairing);
        let worst = g2.iter().zip(&targets).map(|(a, t)| a / t).fold(f64::INFINITY, f64::min);
        assert!((worst - 1.0).abs() < 1e-9);
        let huge = alloc::vec![1e9; 4];
        assert!(scale_to_targets(&bf.b, &red, &set.powers, 1.0, &set.pairing, &huge).is_none());
    }
}
