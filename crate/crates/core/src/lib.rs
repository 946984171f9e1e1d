//! Simulation and verification harness for the repulsive Coulomb n-body
//! problem with unit masses and charges.
//!
//! The crate integrates `x_i' = v_i`, `v_i' = sum_{j != i} (x_i - x_j)/|x_i - x_j|^3`
//! and checks the resulting trajectories against the exact energy and
//! virial-type identities of the repulsive flow and against its scattering
//! asymptotics: pairwise distances growing linearly in `t`, velocities
//! converging at rate `1/t`, and positions `x_i* + t v_i* + O(ln t)`.
//!
//! With the default `parallel` feature the O(n^2) pair kernels and the
//! independent verification runs use rayon; results are bit-identical to
//! the serial build.

pub mod asymptotics;
pub mod checks;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod integrate;
pub mod kahan;
pub mod kernel;
pub mod model;
pub mod output;
pub mod scenarios;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use integrate::{Method, QuadratureState, Sample, StepperConfig, Trajectory};
pub use model::{EnergyReport, ParticleState, Vec3};
pub use scenarios::{ScenarioKind, ScenarioSpec};
