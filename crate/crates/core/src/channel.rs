//! Scenario parameters, source pairing and random channel realisations.

use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::{CMatrix, CVector, C64};

/// Converts a power ratio in dB to linear scale.
pub fn db_to_linear(x_db: f64) -> f64 {
    Float::powf(10.0, x_db / 10.0)
}

/// Per-trial random generator.
pub type TrialRng = ChaCha8Rng;

/// Generator for Monte-Carlo trial `trial` of a run seeded with `seed`.
///
/// Degenerate draws are resampled on the same generator after switching to
/// stream `attempt` via [`ChaCha8Rng::set_stream`].
pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed ^ trial)
}

/// All parameters of one experiment.
///
/// Powers are in dB relative to the noise floor `noise_power`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Total number of sources `K_T` (even).
    pub num_sources: usize,
    /// Relay antennas `M`.
    pub antennas: usize,
    /// One entry per source.
    pub source_powers_db: Vec<f64>,
    pub relay_power_db: f64,
    /// Noise power `sigma^2`.
    pub noise_power: f64,
    /// Pairwise channel correlation knob, in `[0, 1)`.
    pub correlation: f64,
    pub seed: u64,
    pub trials: usize,
    /// Per-pair SINR targets in dB.
    pub sinr_targets_db: Option<Vec<f64>>,
    /// Per-pair desired-gain constraints for the MI beamformer.
    pub response_gains: Option<Vec<f64>>,
    /// Candidate subgroup counts `N`.
    pub subgroups: Option<Vec<usize>>,
    /// Relay SNR grid (dB) for sum-rate sweeps.
    pub snr_db: Option<Vec<f64>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_sources: 4,
            antennas: 8,
            source_powers_db: alloc::vec![10.0; 4],
            relay_power_db: 10.0,
            noise_power: 1.0,
            correlation: 0.0,
            seed: 0,
            trials: 1000,
            sinr_targets_db: None,
            response_gains: None,
            subgroups: None,
            snr_db: None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let k_t = self.num_sources;
        if k_t < 2 || !k_t.is_multiple_of(2) {
            return Err(invalid(format!("K_T must be an even integer >= 2, got {k_t}")));
        }
        if self.antennas == 0 {
            return Err(invalid("M must be positive".into()));
        }
        if self.source_powers_db.len() != k_t {
            return Err(invalid(format!(
                "p_source_db needs {k_t} entries, got {}",
                self.source_powers_db.len()
            )));
        }
        if self.source_powers_db.iter().any(|p| !p.is_finite()) || !self.relay_power_db.is_finite()
        {
            return Err(invalid("powers must be finite".into()));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(invalid("sigma2 must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.correlation) {
            return Err(invalid(format!("rho must lie in [0, 1), got {}", self.correlation)));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be positive".into()));
        }
        let pairs = k_t / 2;
        if let Some(t) = &self.sinr_targets_db {
            if t.len() != pairs || t.iter().any(|x| !x.is_finite()) {
                return Err(invalid(format!("sinr_targets_db needs {pairs} finite entries")));
            }
        }
        if let Some(b) = &self.response_gains {
            if b.len() != pairs || b.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(invalid(format!("beta needs {pairs} positive entries")));
            }
        }
        for n in self.subgroup_candidates() {
            if n == 0 || !k_t.is_multiple_of(n) || !(k_t / n).is_multiple_of(2) {
                return Err(invalid(format!("subgroups: {n} does not split {k_t} sources into even groups")));
            }
            if self.antennas + 1 < k_t / n {
                return Err(invalid(format!(
                    "subgroups: group size {} needs at least {} antennas",
                    k_t / n,
                    k_t / n - 1
                )));
            }
        }
        Ok(())
    }

    /// Configured subgroup counts, or `[1]` when none were given.
    pub fn subgroup_candidates(&self) -> Vec<usize> {
        self.subgroups.clone().unwrap_or_else(|| alloc::vec![1])
    }

    /// Linear source powers, `sigma^2 10^(p/10)`.
    pub fn source_powers(&self) -> Vec<f64> {
        self.source_powers_db.iter().map(|&p| self.noise_power * db_to_linear(p)).collect()
    }

    /// Linear relay power budget, `sigma^2 10^(p_R/10)`.
    pub fn relay_power(&self) -> f64 {
        self.noise_power * db_to_linear(self.relay_power_db)
    }

    /// Per-source gain constraints (both members of a pair share the pair's value).
    pub fn response_gains_per_source(&self) -> Vec<f64> {
        match &self.response_gains {
            Some(b) => (0..self.num_sources).map(|k| b[k / 2]).collect(),
            None => alloc::vec![1.0; self.num_sources],
        }
    }
}

fn invalid(msg: alloc::string::String) -> Error {
    Error::InvalidArgument(msg)
}

/// Fixed-point-free involution `k <-> partner(k)` describing who exchanges
/// information with whom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairingMap {
    partner: Vec<usize>,
}

impl PairingMap {
    pub fn new(partner: Vec<usize>) -> Result<Self> {
        let k = partner.len();
        for (i, &p) in partner.iter().enumerate() {
            if p >= k || p == i || partner[p] != i {
                return Err(invalid(format!("pairing is not a fixed-point-free involution at {i}")));
            }
        }
        Ok(Self { partner })
    }

    #[inline]
    pub fn partner(&self, k: usize) -> usize {
        self.partner[k]
    }

    pub fn len(&self) -> usize {
        self.partner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partner.is_empty()
    }

    /// Pairs `(k, partner(k))` with `k < partner(k)`, ordered by `k`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .filter(|&k| k < self.partner[k])
            .map(|k| (k, self.partner[k]))
            .collect()
    }
}

/// Adjacency pairing `(0,1), (2,3), ...`.
pub fn make_pairing(k: usize) -> Result<PairingMap> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(invalid(format!("pairing needs an even number of sources >= 2, got {k}")));
    }
    Ok(PairingMap { partner: (0..k).map(|i| i ^ 1).collect() })
}

/// Uplink channels of one realisation. Column `k` of `uplink` is `h_k`; the
/// downlink to source `k` is `h_k^T` by reciprocity.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub uplink: CMatrix,
    pub pairing: PairingMap,
    /// Linear transmit power per source.
    pub powers: Vec<f64>,
}

impl ChannelSet {
    pub fn new(uplink: CMatrix, pairing: PairingMap, powers: Vec<f64>) -> Result<Self> {
        let k = uplink.ncols();
        if !k.is_multiple_of(2) || pairing.len() != k || powers.len() != k {
            return Err(invalid(format!(
                "channel set: {k} columns, {} pairing entries, {} powers",
                pairing.len(),
                powers.len()
            )));
        }
        if powers.iter().any(|p| !(*p > 0.0)) {
            return Err(invalid("source powers must be positive".into()));
        }
        Ok(Self { uplink, pairing, powers })
    }

    pub fn with_powers(mut self, powers: Vec<f64>) -> Result<Self> {
        if powers.len() != self.num_sources() || powers.iter().any(|p| !(*p > 0.0)) {
            return Err(invalid(format!("need {} positive powers", self.num_sources())));
        }
        self.powers = powers;
        Ok(self)
    }

    pub fn num_sources(&self) -> usize {
        self.uplink.ncols()
    }

    pub fn antennas(&self) -> usize {
        self.uplink.nrows()
    }

    pub fn channel(&self, k: usize) -> CVector {
        self.uplink.column(k).into_owned()
    }

    /// Channels of the sources in `indices`, re-indexed from zero. Every
    /// selected source's partner must also be selected.
    pub fn subset(&self, indices: &[usize]) -> Result<ChannelSet> {
        let mut local = alloc::vec![usize::MAX; self.num_sources()];
        for (i, &k) in indices.iter().enumerate() {
            if k >= self.num_sources() || local[k] != usize::MAX {
                return Err(invalid(format!("bad source index {k} in subset")));
            }
            local[k] = i;
        }
        let mut partner = Vec::with_capacity(indices.len());
        for &k in indices {
            let p = local[self.pairing.partner(k)];
            if p == usize::MAX {
                return Err(invalid(format!("partner of source {k} missing from subset")));
            }
            partner.push(p);
        }
        let uplink = self.uplink.select_columns(indices.iter());
        let powers = indices.iter().map(|&k| self.powers[k]).collect();
        ChannelSet::new(uplink, PairingMap::new(partner)?, powers)
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let scale = core::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * scale, im * scale)
}

/// Draws `K` uplink channels at an `M`-antenna relay.
///
/// Entries are marginally CN(0,1). For `rho > 0` each channel is
/// `sqrt(1-r) g_k + sqrt(r) g_0` with a shared `g_0` and `r = sqrt(rho)`,
/// so any two sources have per-component cross-correlation `sqrt(rho)` and
/// normalised `|h_j^H h_k|^2 / M^2` tends to `rho`. Antenna rows stay
/// independent. Source powers default to 1; see
/// [`ChannelSet::with_powers`].
pub fn draw_channels<R: Rng + ?Sized>(k: usize, m: usize, rho: f64, rng: &mut R) -> Result<ChannelSet> {
    let pairing = make_pairing(k)?;
    if m == 0 || m + 1 < k {
        return Err(invalid(format!("M={m} antennas cannot serve K={k} sources (need M >= K-1)")));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(invalid(format!("rho must lie in [0, 1), got {rho}")));
    }
    let mut uplink = CMatrix::zeros(m, k);
    for col in 0..k {
        for row in 0..m {
            uplink[(row, col)] = complex_gaussian(rng);
        }
    }
    if rho > 0.0 {
        let r = Float::sqrt(rho);
        let own = Float::sqrt(1.0 - r);
        let common_w = Float::sqrt(r);
        for row in 0..m {
            let common = complex_gaussian(rng);
            for col in 0..k {
                uplink[(row, col)] = uplink[(row, col)] * own + common * common_w;
            }
        }
    }
    ChannelSet::new(uplink, pairing, alloc::vec![1.0; k])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_conversion() {
        assert_eq!(db_to_linear(0.0), 1.0);
        assert!((db_to_linear(10.0) - 10.0).abs() < 1e-12);
        assert!((db_to_linear(20.0) - 100.0).abs() < 1e-10);
    }

    #[test]
    fn adjacency_pairing() {
        let p = make_pairing(2).unwrap();
        assert_eq!(p.partner(0), 1);
        assert_eq!(p.partner(1), 0);
        let p = make_pairing(6).unwrap();
        assert_eq!(p.pairs(), alloc::vec![(0, 1), (2, 3), (4, 5)]);
        assert!(make_pairing(3).is_err());
        assert!(make_pairing(0).is_err());
    }

    #[test]
    fn pairing_rejects_non_involutions() {
        assert!(PairingMap::new(alloc::vec![1, 2, 0]).is_err());
        assert!(PairingMap::new(alloc::vec![0, 1]).is_err());
        assert!(PairingMap::new(alloc::vec![3, 2, 1, 0]).is_ok());
    }

    #[test]
    fn draw_rejects_bad_arguments() {
        let mut rng = trial_rng(1, 0);
        assert!(draw_channels(4, 2, 0.0, &mut rng).is_err());
        assert!(draw_channels(4, 3, 0.0, &mut rng).is_ok());
        assert!(draw_channels(4, 8, 1.0, &mut rng).is_err());
        assert!(draw_channels(4, 8, -0.1, &mut rng).is_err());
        assert!(draw_channels(3, 8, 0.0, &mut rng).is_err());
    }

    #[test]
    fn draws_are_deterministic() {
        let a = draw_channels(4, 8, 0.3, &mut trial_rng(42, 7)).unwrap();
        let b = draw_channels(4, 8, 0.3, &mut trial_rng(42, 7)).unwrap();
        assert_eq!(a, b);
        let c = draw_channels(4, 8, 0.3, &mut trial_rng(42, 8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn subset_reindexes_pairs() {
        let set = draw_channels(6, 6, 0.0, &mut trial_rng(3, 0))
            .unwrap()
            .with_powers(alloc::vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
            .unwrap();
        let sub = set.subset(&[4, 5]).unwrap();
        assert_eq!(sub.num_sources(), 2);
        assert_eq!(sub.powers, alloc::vec![5.0, 6.0]);
        assert_eq!(sub.channel(0), set.channel(4));
        assert_eq!(sub.pairing.partner(0), 1);
        assert!(set.subset(&[0, 2]).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = ScenarioConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.num_sources = 3;
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig { num_sources: 8, source_powers_db: alloc::vec![10.0; 8], ..Default::default() };
        cfg.subgroups = Some(alloc::vec![1, 2, 4]);
        assert!(cfg.validate().is_ok());
        cfg.subgroups = Some(alloc::vec![8]);
        assert!(cfg.validate().is_err());
        cfg.subgroups = None;
        cfg.antennas = 6;
        assert!(cfg.validate().is_err());
    }
}
