//! Stochastic SIRS epidemic model with multiplicative white noise.
//!
//! * [`model`]: parameters, state, drift and diffusion fields, equilibria.
//! * [`conditions`]: stationarity, DFE mean-square and extinction criteria.
//! * [`integrate`]: Runge–Kutta, Euler–Maruyama and Milstein time steppers.
//! * [`ensemble`]: Monte Carlo statistics over many seeded paths.
//! * [`cli`]: configuration, presets, reports and the `sirs` command.

pub mod cli;
pub mod conditions;
pub mod ensemble;
pub mod integrate;
pub mod model;
pub mod stats;

pub use conditions::{
    check_dfe_bound, check_extinction, check_stationary, ellipticity_kappa, DfeBoundReport,
    ExtinctionReport, StationaryConditionReport,
};
pub use ensemble::{run_ensemble, EnsembleConfig, EnsembleStats};
pub use integrate::{simulate, Scheme, SimConfig, Trajectory};
pub use model::{
    basic_reproduction_number, diffusion, drift, equilibria, Equilibria, ModelParams,
    NoiseIntensities, State,
};
