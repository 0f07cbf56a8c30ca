//! Per-realisation rate-region points for two source pairs.
//!
//! The MI boundary is traced by sweeping the desired-gain split
//! `(beta_pair1, beta_pair2) = (t, 1 - t)`; the MP boundary by sweeping SINR
//! target rays `s (cos theta, sin theta)` and finding the largest `s` that
//! fits in the relay power budget. A pair's rate is the smaller of its two
//! directions.

use alloc::vec::Vec;

use num_traits::Float;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::metrics::{pair_rates, rates, sinr};
use crate::mi_beamformer::{mi_beamformer, MiOptions};
use crate::mp_beamformer::{assemble_socp, max_ray_scale, MpOptions, SocpProblem};
use crate::reduction::{build_couplings, reduce, ReducedChannels};
use crate::socp::ConeSolver;

/// Sweep grids for both schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSweep {
    /// MI gain splits `t` in `[0, 1]`.
    pub splits: Vec<f64>,
    /// MP ray angles in `[0, pi/2]`.
    pub angles: Vec<f64>,
}

impl RegionSweep {
    /// `points` evenly spaced values per scheme, endpoints included.
    pub fn uniform(points: usize) -> Self {
        let points = points.max(2);
        let last = (points - 1) as f64;
        Self {
            splits: (0..points).map(|i| i as f64 / last).collect(),
            angles: (0..points).map(|i| core::f64::consts::FRAC_PI_2 * i as f64 / last).collect(),
        }
    }
}

/// `(cos theta, sin theta)` with exact zeros at the endpoints.
fn ray(theta: f64) -> (f64, f64) {
    let half_pi = core::f64::consts::FRAC_PI_2;
    if theta <= 0.0 {
        (1.0, 0.0)
    } else if theta >= half_pi {
        (0.0, 1.0)
    } else {
        (Float::cos(theta), Float::sin(theta))
    }
}

fn require_two_pairs(channels: &ChannelSet) -> Result<()> {
    if channels.num_sources() != 4 {
        return Err(Error::InvalidArgument("rate regions are defined for two source pairs (K = 4)".into()));
    }
    Ok(())
}

fn pair_of(channels: &ChannelSet, k: usize) -> usize {
    let pairs = channels.pairing.pairs();
    pairs.iter().position(|&(a, b)| a == k || b == k).expect("paired source")
}

/// Pair rates of the MI beamformer with gain split `t`.
pub fn mi_region_point(
    channels: &ChannelSet,
    red: &ReducedChannels,
    t: f64,
    sigma2: f64,
    power: f64,
    opts: &MiOptions,
) -> Result<(f64, f64)> {
    require_two_pairs(channels)?;
    let beta: Vec<f64> = (0..4).map(|k| if pair_of(channels, k) == 0 { t } else { 1.0 - t }).collect();
    let bf = mi_beamformer(red, &channels.pairing, &channels.powers, sigma2, power, &beta, opts)?;
    let g = sinr(&bf.b, red, &channels.powers, sigma2, &channels.pairing);
    let pr = pair_rates(&rates(&g, 1), &channels.pairing);
    Ok((pr[0], pr[1]))
}

/// Largest MP target scale along the ray at angle `theta`, and the pair
/// rates of those targets.
#[allow(clippy::too_many_arguments)]
pub fn mp_region_point<S: ConeSolver + ?Sized>(
    channels: &ChannelSet,
    problem: &SocpProblem,
    theta: f64,
    power: f64,
    solver: &S,
    guess: f64,
    rel_tol: f64,
    opts: &MpOptions,
) -> Result<((f64, f64), f64)> {
    require_two_pairs(channels)?;
    let (c, s) = ray(theta);
    let direction: Vec<f64> = (0..4).map(|k| if pair_of(channels, k) == 0 { c } else { s }).collect();
    let point = max_ray_scale(problem, &direction, power, solver, guess, rel_tol, opts)?;
    let r = |g: f64| 0.5 * Float::log2(1.0 + g);
    Ok(((r(point.scale * c), r(point.scale * s)), point.scale))
}

/// Both boundaries for one channel realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionTrial {
    pub mi: Vec<(f64, f64)>,
    pub mp: Vec<(f64, f64)>,
}

/// Evaluates every sweep point of both schemes on one realisation. An empty
/// grid skips that scheme.
#[allow(clippy::too_many_arguments)]
pub fn region_trial<S: ConeSolver + ?Sized>(
    channels: &ChannelSet,
    sweep: &RegionSweep,
    sigma2: f64,
    power: f64,
    solver: &S,
    rel_tol: f64,
    mi_opts: &MiOptions,
    mp_opts: &MpOptions,
) -> Result<RegionTrial> {
    require_two_pairs(channels)?;
    let red = reduce(channels)?;
    let mi = sweep
        .splits
        .iter()
        .map(|&t| mi_region_point(channels, &red, t, sigma2, power, mi_opts))
        .collect::<Result<Vec<_>>>()?;
    if sweep.angles.is_empty() {
        return Ok(RegionTrial { mi, mp: Vec::new() });
    }
    let cs = build_couplings(&red, &channels.powers, &channels.pairing, sigma2, &[1.0; 4])?;
    let problem = assemble_socp(&cs, &red, &channels.powers, sigma2, &[0.0; 4])?;
    // Seed the first bracket with the MI single-pair SINR.
    let mut guess = {
        let (r1, _) = *mi.last().unwrap_or(&(0.5, 0.0));
        Float::powf(2.0, 2.0 * r1) - 1.0
    };
    let mut mp = Vec::with_capacity(sweep.angles.len());
    for &theta in &sweep.angles {
        let (point, scale) = mp_region_point(channels, &problem, theta, power, solver, guess, rel_tol, mp_opts)?;
        if scale > 0.0 {
            guess = scale;
        }
        mp.push(point);
    }
    Ok(RegionTrial { mi, mp })
}
