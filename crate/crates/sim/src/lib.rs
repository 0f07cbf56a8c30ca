//! Monte-Carlo experiments for multi-pair two-way relay beamforming: the
//! two-pair rate region of the MI and MP beamformers, the sum-rate of the
//! grouping scheme versus relay SNR, and an invariant self-test. The
//! `twrelay` binary exposes each as a subcommand writing CSV.

pub mod config;
pub mod error;
pub mod experiments;
pub mod montecarlo;
pub mod validate;

pub use config::{load_config, parse_config};
pub use error::{SimError, SimResult};
pub use experiments::{rate_region, sumrate_sweep, RegionRow, SchemeChoice, SumRateRow};
pub use montecarlo::{run_monte_carlo, Summary};
pub use validate::{run_validation, ValidateOptions, ValidationReport};
