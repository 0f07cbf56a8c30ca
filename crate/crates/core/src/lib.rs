//! Relay beamformers for amplify-and-forward two-way relaying (TWR) with
//! multiple single-antenna source pairs sharing one multi-antenna relay.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! core:
//!
//! - [`channel`]: scenario parameters, source pairing and random channel draws.
//! - [`reduction`]: SVD reduction of the uplink channel to the K-dimensional
//!   signal subspace, the `A = conj(U) B U^H` lift and the vectorised
//!   coupling vectors used by both beamformers.
//! - [`mi_beamformer`]: the closed-form minimum-interference beamformer and
//!   its power scaling.
//! - [`mp_beamformer`]: the minimum-power beamformer posed as a second-order
//!   cone program, solved through the [`socp::ConeSolver`] interface.
//! - [`metrics`]: SINR, relay power, rates and rate-region helpers.
//! - [`grouping`]: the joint grouping-and-beamforming scheme.
//! - [`region`]: per-realisation rate-region boundary points for two pairs.
//!
//! Sources are indexed from zero throughout.
#![no_std]

extern crate alloc;

pub mod channel;
pub mod error;
pub mod grouping;
pub mod metrics;
pub mod mi_beamformer;
pub mod mp_beamformer;
pub mod reduction;
pub mod region;
pub mod socp;

pub use channel::{
    db_to_linear, draw_channels, make_pairing, trial_rng, ChannelSet, PairingMap, ScenarioConfig, TrialRng,
};
pub use error::{Error, Result};
pub use grouping::{evaluate_grouping, partition, select_best, valid_subgroup_counts, GroupingPlan};
pub use metrics::{rates, relay_power, sinr, PerformanceReport};
pub use mi_beamformer::{mi_beamformer, scale_bisection, solve_mi, MiOptions};
pub use mp_beamformer::{assemble_socp, mp_beamformer, solve_mp, MpOptions, SocpProblem};
pub use reduction::{build_couplings, lift, reduce, unvec, vec, CouplingSet, ReducedChannels};
pub use reduction::{RelayBeamformer, Scheme};
pub use region::{region_trial, RegionSweep, RegionTrial};
pub use socp::{BarrierSolver, ConeSolver};

/// Complex double-precision scalar.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
