//! Independent references: dense FEM eigenmodes of the weighted Laplacian,
//! finite-difference checks and jump-condition measurements.

mod cache;
mod checks;
mod fem;
mod jacobi;

pub use cache::OracleCache;
pub use checks::{fd_check, fd_gradient, fd_hessian, jump_residual, locate_kink, normal_derivative_jump, JumpProbe};
pub use fem::{fem_modes_1d, fem_modes_2d, Fem1DProblem, FemMesh, FemModes, GridRect, WeightProfile};
pub use jacobi::symmetric_eigen;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{0}")]
    Invalid(String),
    #[error("Jacobi iteration did not converge in {0} sweeps")]
    NoConvergence(usize),
    #[error("jump probe at {at:?} crosses another interface")]
    ProbeCrossesInterface { at: Vec<f64> },
    #[error("cache: {0}")]
    Cache(String),
}
