//! Rate-region and sum-rate experiments.

use std::io::Write;

use twrelay_core::mi_beamformer::MiOptions;
use twrelay_core::mp_beamformer::MpOptions;
use twrelay_core::{
    db_to_linear, draw_channels, region_trial, select_best, valid_subgroup_counts, BarrierSolver, RegionSweep,
    ScenarioConfig, Scheme,
};

use crate::config::{default_snr_grid, validate};
use crate::error::{SimError, SimResult};
use crate::montecarlo::{run_monte_carlo, Summary};

/// Default number of sweep points per boundary.
pub const DEFAULT_REGION_POINTS: usize = 9;
/// Relative accuracy of the MP ray bisection.
pub const RAY_REL_TOL: f64 = 1e-3;

/// Which boundaries to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeChoice {
    Mi,
    Mp,
    Both,
}

impl SchemeChoice {
    fn includes(self, scheme: Scheme) -> bool {
        matches!((self, scheme), (SchemeChoice::Both, _) | (SchemeChoice::Mi, Scheme::Mi) | (SchemeChoice::Mp, Scheme::Mp))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionRow {
    pub scheme: Scheme,
    /// Gain split `t` for MI, ray angle in radians for MP.
    pub sweep_param: f64,
    pub rate_pair1: f64,
    pub rate_pair2: f64,
    pub trials: usize,
    pub stderr1: f64,
    pub stderr2: f64,
}

/// Monte-Carlo averaged rate-region boundaries of a two-pair scenario.
pub fn rate_region(cfg: &ScenarioConfig, schemes: SchemeChoice, points: usize) -> SimResult<Vec<RegionRow>> {
    validate(cfg)?;
    if cfg.num_sources != 4 {
        return Err(SimError::Config(format!("key `K_T`: rate regions need 4 sources, got {}", cfg.num_sources)));
    }
    if points < 2 {
        return Err(SimError::Config("sweep needs at least 2 points".into()));
    }
    let full = RegionSweep::uniform(points);
    let sweep = RegionSweep {
        splits: if schemes.includes(Scheme::Mi) { full.splits } else { Vec::new() },
        angles: if schemes.includes(Scheme::Mp) { full.angles } else { Vec::new() },
    };
    let powers = cfg.source_powers();
    let (sigma2, budget) = (cfg.noise_power, cfg.relay_power());
    let solver = BarrierSolver::default();
    let summary = run_monte_carlo(cfg.seed, cfg.trials, |rng| {
        let set = draw_channels(4, cfg.antennas, cfg.correlation, rng)?.with_powers(powers.clone())?;
        let trial = region_trial(
            &set,
            &sweep,
            sigma2,
            budget,
            &solver,
            RAY_REL_TOL,
            &MiOptions::default(),
            &MpOptions::default(),
        )?;
        Ok(trial.mi.iter().chain(&trial.mp).flat_map(|&(a, b)| [a, b]).collect())
    })?;
    let params = sweep.splits.iter().map(|&t| (Scheme::Mi, t)).chain(sweep.angles.iter().map(|&a| (Scheme::Mp, a)));
    Ok(params
        .enumerate()
        .map(|(i, (scheme, sweep_param))| RegionRow {
            scheme,
            sweep_param,
            rate_pair1: summary.mean[2 * i],
            rate_pair2: summary.mean[2 * i + 1],
            trials: summary.trials,
            stderr1: summary.stderr[2 * i],
            stderr2: summary.stderr[2 * i + 1],
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SumRateRow {
    pub snr_db: f64,
    /// Subgroup count, or `None` for the per-realisation best.
    pub subgroups: Option<usize>,
    pub sum_rate: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Subgroup candidates: the config's list, or every valid count.
pub fn sumrate_candidates(cfg: &ScenarioConfig) -> Vec<usize> {
    cfg.subgroups.clone().unwrap_or_else(|| valid_subgroup_counts(cfg.num_sources, cfg.antennas))
}

/// Average MI sum-rate per relay SNR `p_R / sigma^2` for each candidate
/// subgroup count, plus the envelope that picks the best count per
/// realisation. All SNR points share the channel draws of a trial.
pub fn sumrate_sweep(cfg: &ScenarioConfig, candidates: &[usize]) -> SimResult<Vec<SumRateRow>> {
    validate(cfg)?;
    let check = ScenarioConfig { subgroups: Some(candidates.to_vec()), ..cfg.clone() };
    validate(&check)?;
    if candidates.is_empty() {
        return Err(SimError::Config("key `subgroups`: no valid candidates".into()));
    }
    let grid = cfg.snr_db.clone().unwrap_or_else(default_snr_grid);
    let powers = cfg.source_powers();
    let beta = cfg.response_gains_per_source();
    let sigma2 = cfg.noise_power;
    let opts = MiOptions::default();
    let width = candidates.len() + 1;
    let summary: Summary = run_monte_carlo(cfg.seed, cfg.trials, |rng| {
        let set = draw_channels(cfg.num_sources, cfg.antennas, cfg.correlation, rng)?.with_powers(powers.clone())?;
        let mut out = Vec::with_capacity(grid.len() * width);
        for &snr in &grid {
            let (_, reports) = select_best(&set, candidates, sigma2, sigma2 * db_to_linear(snr), &beta, &opts)?;
            let rates: Vec<f64> = reports.iter().map(|r| r.sum_rate).collect();
            let best = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            out.extend(rates);
            out.push(best);
        }
        Ok(out)
    })?;
    let labels = candidates.iter().map(|&n| Some(n)).chain(std::iter::once(None));
    let mut rows = Vec::with_capacity(grid.len() * width);
    for (i, &snr_db) in grid.iter().enumerate() {
        for (j, subgroups) in labels.clone().enumerate() {
            let idx = i * width + j;
            rows.push(SumRateRow {
                snr_db,
                subgroups,
                sum_rate: summary.mean[idx],
                stderr: summary.stderr[idx],
                trials: summary.trials,
            });
        }
    }
    Ok(rows)
}

/// Nine significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn write_region_csv<W: Write>(rows: &[RegionRow], out: W) -> SimResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scheme", "sweep_param", "rate_pair1", "rate_pair2", "trials", "stderr1", "stderr2"])?;
    for r in rows {
        w.write_record([
            r.scheme.to_string(),
            fmt_float(r.sweep_param),
            fmt_float(r.rate_pair1),
            fmt_float(r.rate_pair2),
            r.trials.to_string(),
            fmt_float(r.stderr1),
            fmt_float(r.stderr2),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sumrate_csv<W: Write>(rows: &[SumRateRow], out: W) -> SimResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["snr_db", "N", "sum_rate", "stderr"])?;
    for r in rows {
        let n = r.subgroups.map_or_else(|| "best".to_string(), |n| n.to_string());
        w.write_record([fmt_float(r.snr_db), n, fmt_float(r.sum_rate), fmt_float(r.stderr)])?;
    }
    w.flush()?;
    Ok(())
}
