//! Neural field `f(x) = f̃_θ(L(x))`: a sinusoidal MLP over positionally
//! encoded lifted coordinates, with spatial derivatives through the lift and
//! exact weight gradients of losses built from them.

mod encoding;
mod network;

pub use encoding::{hessian_pairs, Encoding, Order};
pub use network::{Activation, Dense, FieldJet, FieldNetwork, Gradients, NetworkSpec, Tape};

use nalgebra::DMatrix;
use ndarray::Array2;
use thiserror::Error;

use crate::lifting::{LiftError, LiftingMap};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("expected {expected} parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },
    #[error("input jet shape {got:?}, expected {expected:?}")]
    InputShape {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("loss needs {requested:?} derivatives but the forward pass carried {forward:?}")]
    UnsupportedComposition { forward: Order, requested: Order },
    #[error("adjoint shape does not match the forward pass")]
    AdjointShape,
    #[error("network expects a {expected}D lift with {extra} extra coordinates, got {got_dim}D with {got_extra}")]
    LiftMismatch {
        expected: usize,
        extra: usize,
        got_dim: usize,
        got_extra: usize,
    },
    #[error(transparent)]
    Lift(#[from] LiftError),
}

fn check_lift(net: &FieldNetwork, map: &LiftingMap) -> Result<(), FieldError> {
    let spec = net.spec();
    if spec.dim != map.dim() || spec.extra != map.extra_dims() {
        return Err(FieldError::LiftMismatch {
            expected: spec.dim,
            extra: spec.extra,
            got_dim: map.dim(),
            got_extra: map.extra_dims(),
        });
    }
    Ok(())
}

/// Basis values at an already-lifted point.
pub fn eval(net: &FieldNetwork, lifted: &[f64], alpha: f64) -> Result<Vec<f64>, FieldError> {
    let enc = net.spec().encoding();
    if lifted.len() != enc.lifted_dim {
        return Err(FieldError::InputShape {
            expected: (1, enc.lifted_dim),
            got: (1, lifted.len()),
        });
    }
    let row = enc.encode(lifted, alpha);
    let x = Array2::from_shape_vec((1, row.len()), row).expect("row shape");
    Ok(net.eval_encoded(x.view())?.row(0).to_vec())
}

/// Basis values at spatial points (lift applied first); `n x k`.
pub fn eval_points(net: &FieldNetwork, map: &LiftingMap, points: &[Vec<f64>], alpha: f64) -> Result<Array2<f64>, FieldError> {
    check_lift(net, map)?;
    let enc = net.spec().encoding();
    let mut x = Array2::zeros((points.len(), enc.width()));
    for (i, p) in points.iter().enumerate() {
        let row = enc.encode(&map.lift(p)?, alpha);
        x.row_mut(i).assign(&ndarray::Array1::from(row));
    }
    net.eval_encoded(x.view())
}

/// Forward jet at spatial points; keep the tape for weight gradients.
pub fn field_jet(
    net: &FieldNetwork,
    map: &LiftingMap,
    points: &[Vec<f64>],
    alphas: &[f64],
    order: Order,
) -> Result<(FieldJet, Tape), FieldError> {
    check_lift(net, map)?;
    let lifts = points
        .iter()
        .map(|p| map.lift_derivatives(p))
        .collect::<Result<Vec<_>, _>>()?;
    let input = net.spec().encoding().input_jet(&lifts, alphas, order);
    net.forward(input, points.len(), order)
}

/// `∇_x f` at one point, `k x d`.
pub fn spatial_gradient(net: &FieldNetwork, x: &[f64], map: &LiftingMap, alpha: f64) -> Result<DMatrix<f64>, FieldError> {
    let (jet, _) = field_jet(net, map, &[x.to_vec()], &[alpha], Order::Gradient)?;
    let (k, d) = (jet.modes(), jet.dim());
    Ok(DMatrix::from_fn(k, d, |i, p| jet.grads[p][[0, i]]))
}

/// `∇²_x f` at one point, one `d x d` matrix per output.
pub fn spatial_hessian(net: &FieldNetwork, x: &[f64], map: &LiftingMap, alpha: f64) -> Result<Vec<DMatrix<f64>>, FieldError> {
    let (jet, _) = field_jet(net, map, &[x.to_vec()], &[alpha], Order::Hessian)?;
    Ok((0..jet.modes()).map(|i| jet.hessian(0, i)).collect())
}
