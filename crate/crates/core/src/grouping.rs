//! Joint grouping and beamforming.
//!
//! The `K_T` sources are split into `N` subgroups that the relay serves in
//! turn (time division). Each subgroup gets its own MI beamformer at the
//! full relay power budget, and the `N` with the largest sum-rate wins.

use alloc::format;
use alloc::vec::Vec;

use crate::channel::{ChannelSet, PairingMap};
use crate::error::{Error, Result};
use crate::metrics::{relay_power, sinr, PerformanceReport};
use crate::mi_beamformer::{mi_beamformer, MiOptions};
use crate::reduction::{reduce, Scheme};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupingPlan {
    /// Number of subgroups `N`.
    pub subgroups: usize,
    /// Source indices of each subgroup; partners are always co-located.
    pub groups: Vec<Vec<usize>>,
}

impl GroupingPlan {
    pub fn group_size(&self) -> usize {
        self.groups.first().map_or(0, Vec::len)
    }
}

/// Deals the pairs, in order of their lower index, into `n` contiguous
/// subgroups of `K_T / n` sources.
pub fn partition(total: usize, n: usize, pairing: &PairingMap) -> Result<GroupingPlan> {
    if pairing.len() != total {
        return Err(Error::InvalidArgument(format!("pairing covers {} of {total} sources", pairing.len())));
    }
    if n == 0 || !total.is_multiple_of(n) || !(total / n).is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "{n} subgroups cannot split {total} sources into even groups"
        )));
    }
    let pairs = pairing.pairs();
    let per_group = pairs.len() / n;
    let groups = pairs
        .chunks(per_group)
        .map(|chunk| chunk.iter().flat_map(|&(a, b)| [a, b]).collect())
        .collect();
    Ok(GroupingPlan { subgroups: n, groups })
}

/// Every `N` that splits `total` sources into even groups an `antennas`-element
/// relay can serve (`M >= K - 1`), in increasing order.
pub fn valid_subgroup_counts(total: usize, antennas: usize) -> Vec<usize> {
    (1..=total)
        .filter(|&n| total.is_multiple_of(n) && (total / n).is_multiple_of(2) && antennas + 1 >= total / n)
        .collect()
}

/// Sum-rate of the MI beamformer applied per subgroup.
///
/// `beta` holds one desired-gain value per source (global indexing). The
/// reported `relay_power` is the per-slot power averaged over slots.
pub fn evaluate_grouping(
    channels: &ChannelSet,
    plan: &GroupingPlan,
    sigma2: f64,
    power_target: f64,
    beta: &[f64],
    opts: &MiOptions,
) -> Result<PerformanceReport> {
    let total = channels.num_sources();
    if beta.len() != total {
        return Err(Error::InvalidArgument(format!("need {total} gains, got {}", beta.len())));
    }
    let mut sinrs = alloc::vec![0.0; total];
    let mut power = 0.0;
    for group in &plan.groups {
        let sub = channels.subset(group)?;
        let red = reduce(&sub)?;
        let local_beta: Vec<f64> = group.iter().map(|&k| beta[k]).collect();
        let bf = mi_beamformer(&red, &sub.pairing, &sub.powers, sigma2, power_target, &local_beta, opts)?;
        let g = sinr(&bf.b, &red, &sub.powers, sigma2, &sub.pairing);
        for (&k, gk) in group.iter().zip(g) {
            sinrs[k] = gk;
        }
        power += relay_power(&bf.b, &red, &sub.powers, sigma2);
    }
    Ok(PerformanceReport::new(sinrs, power / plan.groups.len() as f64, Scheme::Mi, plan.subgroups))
}

/// Evaluates every candidate `N` and returns the one with the largest
/// sum-rate (ties go to the smaller `N`) with all reports, in candidate order.
pub fn select_best(
    channels: &ChannelSet,
    candidates: &[usize],
    sigma2: f64,
    power_target: f64,
    beta: &[f64],
    opts: &MiOptions,
) -> Result<(usize, Vec<PerformanceReport>)> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate subgroup counts".into()));
    }
    let total = channels.num_sources();
    let mut reports = Vec::with_capacity(candidates.len());
    for &n in candidates {
        let plan = partition(total, n, &channels.pairing)?;
        reports.push(evaluate_grouping(channels, &plan, sigma2, power_target, beta, opts)?);
    }
    let best = reports
        .iter()
        .max_by(|a, b| {
            a.sum_rate
                .partial_cmp(&b.sum_rate)
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(b.subgroups.cmp(&a.subgroups))
        })
        .map(|r| r.subgroups)
        .expect("non-empty");
    Ok((best, reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channels, make_pairing, trial_rng};

    #[test]
    fn valid_counts() {
        assert_eq!(valid_subgroup_counts(8, 8), alloc::vec![1, 2, 4]);
        assert_eq!(valid_subgroup_counts(8, 3), alloc::vec![2, 4]);
        assert_eq!(valid_subgroup_counts(8, 2), alloc::vec![4]);
        assert_eq!(valid_subgroup_counts(6, 8), alloc::vec![1, 3]);
    }

    #[test]
    fn contiguous_partitions() {
        let pairing = make_pairing(8).unwrap();
        let plan = partition(8, 2, &pairing).unwrap();
        assert_eq!(plan.groups, alloc::vec![alloc::vec![0, 1, 2, 3], alloc::vec![4, 5, 6, 7]]);
        let plan = partition(8, 4, &pairing).unwrap();
        assert_eq!(plan.groups.len(), 4);
        assert!(plan.groups.iter().all(|g| g.len() == 2 && pairing.partner(g[0]) == g[1]));
        assert_eq!(partition(8, 1, &pairing).unwrap().groups, alloc::vec![(0..8).collect::<Vec<_>>()]);
        assert!(partition(8, 3, &pairing).is_err());
        assert!(partition(8, 8, &pairing).is_err());
        assert!(partition(8, 0, &pairing).is_err());
    }

    #[test]
    fn single_group_matches_direct_mi() {
        let set = draw_channels(8, 8, 0.0, &mut trial_rng(3, 0)).unwrap().with_powers(alloc::vec![10.0; 8]).unwrap();
        let opts = MiOptions::default();
        let plan = partition(8, 1, &set.pairing).unwrap();
        let report = evaluate_grouping(&set, &plan, 1.0, 10.0, &[1.0; 8], &opts).unwrap();
        let red = reduce(&set).unwrap();
        let bf = mi_beamformer(&red, &set.pairing, &set.powers, 1.0, 10.0, &[1.0; 8], &opts).unwrap();
        let direct = sinr(&bf.b, &red, &set.powers, 1.0, &set.pairing);
        assert_eq!(report.sinr, direct);
        assert_eq!(report.subgroups, 1);
    }

    #[test]
    fn best_is_envelope() {
        let set = draw_channels(8, 8, 0.0, &mut trial_rng(4, 0)).unwrap().with_powers(alloc::vec![10.0; 8]).unwrap();
        let (best, reports) = select_best(&set, &[1, 2, 4], 1.0, 1.0, &[1.0; 8], &MiOptions::default()).unwrap();
        let top = reports.iter().map(|r| r.sum_rate).fold(f64::NEG_INFINITY, f64::max);
        let chosen = reports.iter().find(|r| r.subgroups == best).unwrap();
        assert_eq!(chosen.sum_rate, top);
        let (only, reports) = select_best(&set, &[2], 1.0, 1.0, &[1.0; 8], &MiOptions::default()).unwrap();
        assert_eq!((only, reports.len()), (2, 1));
        assert!(select_best(&set, &[], 1.0, 1.0, &[1.0; 8], &MiOptions::default()).is_err());
    }
}
