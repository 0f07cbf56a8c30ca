//! Seeded Monte-Carlo runner with order-independent aggregation.

use rayon::prelude::*;
use twrelay_core::{trial_rng, Error, TrialRng};

use crate::error::{SimError, SimResult};

/// Largest tolerated fraction of resampled trials.
pub const MAX_RESAMPLE_FRACTION: f64 = 0.01;
/// Draws tried per trial before the run is abandoned.
const MAX_ATTEMPTS: u64 = 16;

/// Per-output mean and standard error of the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub trials: usize,
    /// Trials whose first draw failed and was replaced.
    pub resampled: usize,
}

fn retryable(e: &Error) -> bool {
    matches!(e, Error::DegenerateChannel(_) | Error::SolverFailure(_))
}

/// Runs `f` once per trial. Trial `t` draws from `trial_rng(seed, t)`; a
/// degenerate draw or solver failure is retried on stream 1, 2, ... of the
/// same generator. The result depends only on `seed`, `trials` and `f`,
/// never on the thread count.
pub fn run_monte_carlo<F>(seed: u64, trials: usize, f: F) -> SimResult<Summary>
where
    F: Fn(&mut TrialRng) -> twrelay_core::Result<Vec<f64>> + Sync,
{
    if trials == 0 {
        return Err(SimError::Config("trials must be positive".into()));
    }
    let per_trial: Vec<Result<(Vec<f64>, bool), Error>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut last = None;
            for attempt in 0..MAX_ATTEMPTS {
                let mut rng = trial_rng(seed, t);
                if attempt > 0 {
                    rng.set_stream(attempt);
                }
                match f(&mut rng) {
                    Ok(v) => return Ok((v, attempt > 0)),
                    Err(e) if retryable(&e) => last = Some(e),
                    Err(e) => return Err(e),
                }
            }
            Err(last.expect("at least one attempt"))
        })
        .collect();

    let mut values = Vec::with_capacity(trials);
    let mut resampled = 0;
    for result in per_trial {
        match result {
            Ok((v, retried)) => {
                resampled += usize::from(retried);
                values.push(v);
            }
            Err(e) if retryable(&e) => {
                return Err(SimError::FailureRate { failed: trials, trials, limit: 100.0 * MAX_RESAMPLE_FRACTION })
            }
            Err(e) => return Err(e.into()),
        }
    }
    if resampled as f64 > MAX_RESAMPLE_FRACTION * trials as f64 {
        return Err(SimError::FailureRate { failed: resampled, trials, limit: 100.0 * MAX_RESAMPLE_FRACTION });
    }
    let width = values[0].len();
    if values.iter().any(|v| v.len() != width) {
        return Err(SimError::Core(Error::Consistency("trials returned different output counts".into())));
    }
    let (mean, stderr) = summarize(&values, width);
    Ok(Summary { mean, stderr, trials, resampled })
}

/// Mean and standard error per column, summed in trial order.
fn summarize(values: &[Vec<f64>], width: usize) -> (Vec<f64>, Vec<f64>) {
    let n = values.len() as f64;
    let mut mean = vec![0.0; width];
    for v in values {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut stderr = vec![0.0; width];
    if values.len() > 1 {
        for v in values {
            for ((s, x), m) in stderr.iter_mut().zip(v).zip(&mean) {
                *s += (x - m) * (x - m);
            }
        }
        stderr.iter_mut().for_each(|s| *s = (*s / (n - 1.0) / n).sqrt());
    }
    (mean, stderr)
}
