//! Centrifugal clutch and two-speed automatic gearbox simulation.
//!
//! - [`clutch`]: shoe kinematics, onset speed, lining pressure and torque.
//! - [`driveline`]: rigid-body gearbox equations for both clutch pairings.
//! - [`sim`]: fixed-step RK4 integration with automatic mode switching.
//! - [`sweep`]: shoe-mass × preload grids and labelled datasets.
//! - [`mlp`]: feed-forward engagement classifier.
//! - [`cli`]: the `clutchsim` command-line front end.

pub mod cli;
pub mod clutch;
pub mod config;
pub mod driveline;
pub mod error;
pub mod mlp;
pub mod sim;
pub mod sweep;

pub use clutch::{
    onset_speed, peak_pressure, spring_elongation, torque_capacity, transmitted_torque,
    ClutchCurve, ClutchGeometry, ClutchParams, EngagementMode, FrictionMode, FrictionSpec,
    SpringSpec,
};
pub use config::Config;
pub use driveline::{
    solve_first_gear, solve_locked, solve_second_gear_slipping, Configuration, DriveSolution,
    DrivelineParams, LockedSolution, TorqueSet,
};
pub use error::{Error, Result};
pub use mlp::{decision_grid, predict_engagement, train, MlpModel, MlpSpec, TrainConfig};
pub use sim::{
    full_engagement_speed, run_scenario, DriveMode, Engagement, Scenario, SimConfig, SimTrace,
    Simulator, TorqueProfile,
};
pub use sweep::{generate_dataset, sweep_engagement_speed, EngagementDataset, GridSpec};
