//! Training losses and their adjoints with respect to the field jet.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::BasisError;
use crate::field::{field_jet, hessian_pairs, FieldJet, FieldNetwork, Gradients, Order};
use crate::lifting::LiftingMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Dirichlet,
    Hessian,
}

impl LossKind {
    fn order(self) -> Order {
        match self {
            LossKind::Dirichlet => Order::Gradient,
            LossKind::Hessian => Order::Hessian,
        }
    }
}

/// Loss split into its energy and (unweighted) Gram-penalty parts;
/// `total = energy + λ_G · gram`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossValue {
    pub total: f64,
    pub energy: f64,
    pub gram: f64,
}

/// `(1/n) ΦᵀΦ`.
pub fn gram_matrix(phi: ArrayView2<f64>) -> Array2<f64> {
    phi.t().dot(&phi) / phi.nrows() as f64
}

/// `‖(1/n) ΦᵀΦ − I‖²_F` for an `n x k` batch.
pub fn gram_penalty(phi: ArrayView2<f64>) -> Result<f64, BasisError> {
    Ok(gram_terms(phi)?.0)
}

/// Penalty value and its gradient `(4/n) Φ (G − I)`.
pub fn gram_terms(phi: ArrayView2<f64>) -> Result<(f64, Array2<f64>), BasisError> {
    let (n, k) = phi.dim();
    if n < k {
        return Err(BasisError::TooFewSamples { got: n, need: k });
    }
    let mut g = gram_matrix(phi);
    for i in 0..k {
        g[[i, i]] -= 1.0;
    }
    let value = g.iter().map(|v| v * v).sum();
    let grad = phi.dot(&g) * (4.0 / n as f64);
    Ok((value, grad))
}

/// Weighted Dirichlet term `½ mean_s w_s Σ_i |∇φ_i|²` and its jet adjoint.
pub fn dirichlet_terms(jet: &FieldJet, weights: &[f64]) -> Result<(f64, FieldJet), BasisError> {
    let n = jet.len();
    if weights.len() != n {
        return Err(BasisError::TooFewSamples { got: weights.len(), need: n });
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0)) {
        return Err(BasisError::NonPositiveWeight(*w));
    }
    if jet.order < Order::Gradient {
        return Err(BasisError::Field(crate::field::FieldError::UnsupportedComposition {
            forward: jet.order,
            requested: Order::Gradient,
        }));
    }
    let mut adj = jet.zeros_like();
    let mut value = 0.0;
    let inv_n = 1.0 / n as f64;
    for (g, a) in jet.grads.iter().zip(adj.grads.iter_mut()) {
        for ((s, i), v) in g.indexed_iter() {
            value += 0.5 * weights[s] * v * v;
            a[[s, i]] = weights[s] * v * inv_n;
        }
    }
    Ok((value * inv_n, adj))
}

/// Hessian energy density mean `mean_s Σ_i ‖∇²φ_i‖²_F` and its jet adjoint.
pub fn hessian_terms(jet: &FieldJet) -> Result<(f64, FieldJet), BasisError> {
    if jet.order < Order::Hessian {
        return Err(BasisError::Field(crate::field::FieldError::UnsupportedComposition {
            forward: jet.order,
            requested: Order::Hessian,
        }));
    }
    let n = jet.len();
    let inv_n = 1.0 / n as f64;
    let mut adj = jet.zeros_like();
    let mut value = 0.0;
    for ((h, a), (p, q)) in jet.hess.iter().zip(adj.hess.iter_mut()).zip(hessian_pairs(jet.dim())) {
        // off-diagonal entries appear twice in the Frobenius norm
        let mult = if p == q { 1.0 } else { 2.0 };
        for ((s, i), v) in h.indexed_iter() {
            value += mult * v * v;
            a[[s, i]] = 2.0 * mult * v * inv_n;
        }
    }
    Ok((value * inv_n, adj))
}

/// Loss of one batch at a single α plus its weight gradient.
pub fn loss_and_gradient(
    net: &FieldNetwork,
    kind: LossKind,
    map: &LiftingMap,
    samples: &[Vec<f64>],
    weights: &[f64],
    alpha: f64,
    lambda_gram: f64,
) -> Result<(LossValue, Gradients), BasisError> {
    let (value, (_, tape), adj) = evaluate(net, kind, map, samples, weights, alpha, lambda_gram)?;
    Ok((value, net.backward(&tape, &adj)?))
}

type JetAndTape = (FieldJet, crate::field::Tape);

fn evaluate(
    net: &FieldNetwork,
    kind: LossKind,
    map: &LiftingMap,
    samples: &[Vec<f64>],
    weights: &[f64],
    alpha: f64,
    lambda_gram: f64,
) -> Result<(LossValue, JetAndTape, FieldJet), BasisError> {
    if samples.len() < 2 {
        return Err(BasisError::TooFewSamples {
            got: samples.len(),
            need: 2,
        });
    }
    let alphas = vec![alpha; samples.len()];
    let (jet, tape) = field_jet(net, map, samples, &alphas, kind.order())?;
    let (energy, mut adj) = match kind {
        LossKind::Dirichlet => dirichlet_terms(&jet, weights)?,
        LossKind::Hessian => hessian_terms(&jet)?,
    };
    let (gram, gram_grad) = gram_terms(jet.values.view())?;
    adj.values.scaled_add(lambda_gram, &gram_grad);
    let value = LossValue {
        total: energy + lambda_gram * gram,
        energy,
        gram,
    };
    Ok((value, (jet, tape), adj))
}

/// `½ mean w Σ|∇φ_i|² + λ_G ‖G − I‖²_F` on a batch at one α.
pub fn dirichlet_loss(
    net: &FieldNetwork,
    map: &LiftingMap,
    samples: &[Vec<f64>],
    weights: &[f64],
    alpha: f64,
    lambda_gram: f64,
) -> Result<LossValue, BasisError> {
    Ok(evaluate(net, LossKind::Dirichlet, map, samples, weights, alpha, lambda_gram)?.0)
}

/// `mean Σ‖∇²φ_i‖²_F + λ_G ‖G − I‖²_F` on a batch at one α.
pub fn hessian_energy_loss(
    net: &FieldNetwork,
    map: &LiftingMap,
    samples: &[Vec<f64>],
    alpha: f64,
    lambda_gram: f64,
) -> Result<LossValue, BasisError> {
    let ones = vec![1.0; samples.len()];
    Ok(evaluate(net, LossKind::Hessian, map, samples, &ones, alpha, lambda_gram)?.0)
}
