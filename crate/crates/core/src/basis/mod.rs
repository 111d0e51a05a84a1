//! Training of lifted basis functions by energy minimization under a Gram
//! penalty, and inference of discrete bases at simulation points.

mod domain;
mod infer;
mod loss;
mod sampling;
mod train;

pub use domain::{Domain, MaterialField, Shape, ShapeFamily};
pub use infer::{infer_basis, infer_values, ritz_modes, BasisSet, RitzModes};
pub use loss::{
    dirichlet_loss, dirichlet_terms, gram_matrix, gram_penalty, gram_terms, hessian_energy_loss, hessian_terms,
    loss_and_gradient, LossKind, LossValue,
};
pub use sampling::{sample_domain, sample_domain_with, CUT_TIP_EXCLUSION, INTERFACE_EXCLUSION};
pub use train::{train_basis, train_from, write_trace_csv, Adam, TraceRow, TrainConfig, TrainOutcome};

use thiserror::Error;

use crate::field::FieldError;
use crate::geometry::GeometryError;
use crate::lifting::LiftError;

#[derive(Debug, Error)]
pub enum BasisError {
    #[error("degenerate occupancy: {accepted} of {attempts} draws landed in the domain")]
    DegenerateOccupancy { accepted: usize, attempts: usize },
    #[error("material weight must be positive, got {0}")]
    NonPositiveWeight(f64),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("non-finite loss at epoch {epoch}, α group {group}")]
    NonFinite { epoch: usize, group: usize },
    #[error("α = {alpha} outside the trained range {range:?}")]
    AlphaOutOfRange { alpha: f64, range: [f64; 2] },
    #[error("basis Gram matrix is singular")]
    SingularBasis,
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[cfg(test)]
mod tests;
