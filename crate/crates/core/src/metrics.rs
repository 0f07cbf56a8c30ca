//! SINR, relay power, rates and rate-region helpers.

use alloc::vec::Vec;

use num_traits::Float;

use crate::channel::{ChannelSet, PairingMap};
use crate::reduction::{ReducedChannels, Scheme};
use crate::{CMatrix, CVector, C64};

/// Per-realisation performance of one beamforming scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceReport {
    pub sinr: Vec<f64>,
    /// Bits per channel use, including the two-slot and time-division prelogs.
    pub rates: Vec<f64>,
    /// Relay power per transmission slot.
    pub relay_power: f64,
    pub sum_rate: f64,
    pub scheme: Scheme,
    /// Number of time-division subgroups `N`.
    pub subgroups: usize,
}

impl PerformanceReport {
    pub fn new(sinr: Vec<f64>, relay_power: f64, scheme: Scheme, subgroups: usize) -> Self {
        let rates = rates(&sinr, subgroups);
        let sum_rate = rates.iter().sum();
        Self { sinr, rates, relay_power, sum_rate, scheme, subgroups }
    }
}

fn sinr_from_rows(
    rows: &[nalgebra::RowDVector<C64>],
    cols: &[CVector],
    powers: &[f64],
    sigma2: f64,
    pairing: &PairingMap,
) -> Vec<f64> {
    (0..cols.len())
        .map(|k| {
            let kp = pairing.partner(k);
            let row = &rows[k];
            let gain = |j: usize| row.dot(&cols[j].transpose()).norm_sqr() * powers[j];
            let desired = gain(kp);
            let interference: f64 = (0..cols.len()).filter(|&j| j != k && j != kp).map(gain).sum();
            let denom = interference + (row.norm_squared() + 1.0) * sigma2;
            if denom > 0.0 {
                desired / denom
            } else if desired > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .collect()
}

/// Per-destination SINR for reduced beamformer `B` and effective channels.
///
/// Source `k` cancels its own contribution; its partner's signal is the
/// desired term and every other source interferes.
pub fn sinr(b: &CMatrix, red: &ReducedChannels, powers: &[f64], sigma2: f64, pairing: &PairingMap) -> Vec<f64> {
    let cols: Vec<CVector> = (0..red.num_sources()).map(|k| red.effective(k)).collect();
    let rows: Vec<_> = cols.iter().map(|h| h.transpose() * b).collect();
    sinr_from_rows(&rows, &cols, powers, sigma2, pairing)
}

/// Per-destination SINR for a full `M x M` relay matrix on the raw channels.
pub fn sinr_relay(a: &CMatrix, channels: &ChannelSet, sigma2: f64) -> Vec<f64> {
    let cols: Vec<CVector> = (0..channels.num_sources()).map(|k| channels.channel(k)).collect();
    let rows: Vec<_> = cols.iter().map(|h| h.transpose() * a).collect();
    sinr_from_rows(&rows, &cols, &channels.powers, sigma2, &channels.pairing)
}

/// Relay transmit power `sum_k ||B h~_k||^2 p_k + Tr(B B^H) sigma^2`.
pub fn relay_power(b: &CMatrix, red: &ReducedChannels, powers: &[f64], sigma2: f64) -> f64 {
    let signal: f64 = (0..red.num_sources())
        .map(|k| (b * red.effective(k)).norm_squared() * powers[k])
        .sum();
    signal + b.norm_squared() * sigma2
}

/// Relay transmit power of a full relay matrix on the raw channels.
pub fn relay_power_relay(a: &CMatrix, channels: &ChannelSet, sigma2: f64) -> f64 {
    let signal: f64 = (0..channels.num_sources())
        .map(|k| (a * channels.channel(k)).norm_squared() * channels.powers[k])
        .sum();
    signal + a.norm_squared() * sigma2
}

/// `r_k = log2(1 + gamma_k) / (2N)`.
pub fn rates(sinr: &[f64], subgroups: usize) -> Vec<f64> {
    let prelog = 1.0 / (2.0 * subgroups as f64);
    sinr.iter().map(|&g| prelog * Float::log2(1.0 + g)).collect()
}

/// Rate of each pair, taken as the smaller of its two directions. Pairs are
/// ordered by their lower index.
pub fn pair_rates(rates: &[f64], pairing: &PairingMap) -> Vec<f64> {
    pairing.pairs().into_iter().map(|(a, b)| rates[a].min(rates[b])).collect()
}

/// True when no point is strictly dominated (>= in every coordinate and >
/// in one, beyond `tol`) by another.
pub fn is_pareto_front(points: &[(f64, f64)], tol: f64) -> bool {
    points.iter().enumerate().all(|(i, p)| {
        !points.iter().enumerate().any(|(j, q)| {
            i != j && q.0 >= p.0 - tol && q.1 >= p.1 - tol && (q.0 > p.0 + tol || q.1 > p.1 + tol)
        })
    })
}
