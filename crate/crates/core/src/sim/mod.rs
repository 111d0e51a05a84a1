//! Reduced-order elastodynamics on a neural displacement basis
//! `u(x) = Σ_j φ_j(x) z_j x̂`, advanced with backward Euler.

mod energy;
mod forces;
mod kinematics;
mod optimize;
mod simulator;
mod step;

pub use energy::{barrier_log, cofactor, energy_density, Density, Material, BARRIER_J};
pub use forces::{CubatureSet, External, Handle, MaterialPoint, Spring};
pub use kinematics::{accumulate_force, accumulate_stress, deformation_gradient, displacement, Reduced, ReducedState};
pub use optimize::{optimize_shape, OptimizeConfig, OptimizeOutcome, OptimizeRow};
pub use simulator::{displacement_objective, simulate, Frame, SimSetup, Simulator, Trajectory, OUT_OF_FAMILY_TOLERANCE};
pub use step::{elastic_energy, step, IntegratorParams, StepProblem, StepReport};

use thiserror::Error;

use crate::basis::BasisError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("non-finite state at step {step}")]
    NonFinite { step: u64 },
    #[error("step {step}: line search failed at iteration {iteration} (objective {objective:e}, |g| {gradient_norm:e})")]
    StepFailed {
        step: u64,
        iteration: usize,
        objective: f64,
        gradient_norm: f64,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("shape objective failed at α = {alpha}: {message}")]
    Objective { alpha: f64, message: String },
    #[error(transparent)]
    Basis(#[from] BasisError),
}

impl From<crate::lifting::LiftError> for SimError {
    fn from(e: crate::lifting::LiftError) -> Self {
        SimError::Basis(BasisError::from(e))
    }
}
