//! Basis inference at simulation points and Rayleigh–Ritz post-processing.

use nalgebra::{DMatrix, DVector};
use ndarray::{s, Array2};

use super::{BasisError, ShapeFamily};
use crate::field::{eval_points, field_jet, FieldNetwork, Order};

const CHUNK: usize = 1024;

/// Basis values and spatial gradients at a fixed point set for one α.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisSet {
    pub alpha: f64,
    pub points: Vec<Vec<f64>>,
    /// `N x k`.
    pub values: Array2<f64>,
    /// `grads[p]` is `∂Φ/∂x_p`, `N x k`.
    pub grads: Vec<Array2<f64>>,
}

impl BasisSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn modes(&self) -> usize {
        self.values.ncols()
    }

    pub fn dim(&self) -> usize {
        self.grads.len()
    }

    /// `∇φ` at point `i`, `k x d`.
    pub fn gradient(&self, i: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.modes(), self.dim(), |j, p| self.grads[p][[i, j]])
    }

    /// `(1/N) ΦᵀΦ`.
    pub fn gram(&self) -> DMatrix<f64> {
        let g = self.values.t().dot(&self.values) / self.len() as f64;
        DMatrix::from_fn(g.nrows(), g.ncols(), |i, j| g[[i, j]])
    }
}

fn check_alpha(family: &ShapeFamily, alpha: f64) -> Result<(), BasisError> {
    if family.contains_alpha(alpha) {
        Ok(())
    } else {
        Err(BasisError::AlphaOutOfRange {
            alpha,
            range: family.alpha_range,
        })
    }
}

/// Evaluate `φ` and `∇φ` at `points` under the α-specific lift.
pub fn infer_basis(net: &FieldNetwork, family: &ShapeFamily, points: &[Vec<f64>], alpha: f64) -> Result<BasisSet, BasisError> {
    check_alpha(family, alpha)?;
    let map = family.lifting_map(alpha)?;
    let (n, k, d) = (points.len(), net.spec().outputs, family.dim());
    let mut values = Array2::zeros((n, k));
    let mut grads = vec![Array2::zeros((n, k)); d];
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        let chunk = &points[start..end];
        let (jet, _) = field_jet(net, &map, chunk, &vec![alpha; chunk.len()], Order::Gradient)?;
        values.slice_mut(s![start..end, ..]).assign(&jet.values);
        for (g, jg) in grads.iter_mut().zip(&jet.grads) {
            g.slice_mut(s![start..end, ..]).assign(jg);
        }
    }
    Ok(BasisSet {
        alpha,
        points: points.to_vec(),
        values,
        grads,
    })
}

/// Values only; valid on the interface itself (e.g. tracer points).
pub fn infer_values(net: &FieldNetwork, family: &ShapeFamily, points: &[Vec<f64>], alpha: f64) -> Result<Array2<f64>, BasisError> {
    check_alpha(family, alpha)?;
    let map = family.lifting_map(alpha)?;
    Ok(eval_points(net, &map, points, alpha)?)
}

/// Ritz pairs of the weighted Laplacian restricted to the span of a basis.
#[derive(Clone, Debug)]
pub struct RitzModes {
    /// Ascending Rayleigh quotients `∫w|∇u|² / ∫u²`.
    pub eigenvalues: Vec<f64>,
    /// Column `j` holds the coefficients of Ritz mode `j` in the basis.
    pub coefficients: DMatrix<f64>,
}

impl RitzModes {
    /// Values of Ritz mode `j` at every point of `set`.
    pub fn mode_values(&self, set: &BasisSet, j: usize) -> Vec<f64> {
        let c = self.coefficients.column(j);
        (0..set.len()).map(|i| (0..set.modes()).map(|m| set.values[[i, m]] * c[m]).sum()).collect()
    }

    /// Combine raw basis values (one row per point) into mode `j`.
    pub fn combine(&self, values: &[f64], j: usize) -> f64 {
        values.iter().zip(self.coefficients.column(j).iter()).map(|(v, c)| v * c).sum()
    }
}

/// Solve `K c = λ M c` with Monte-Carlo mass `M = ΦᵀΦ/N` and stiffness
/// `K = Σ w ∇Φᵀ∇Φ / N` over the points of `set`.
pub fn ritz_modes(set: &BasisSet, weights: &[f64]) -> Result<RitzModes, BasisError> {
    let (n, k) = (set.len(), set.modes());
    if weights.len() != n {
        return Err(BasisError::TooFewSamples { got: weights.len(), need: n });
    }
    let mass = set.gram();
    let mut stiff = DMatrix::zeros(k, k);
    for i in 0..n {
        let g = set.gradient(i);
        stiff += (&g * g.transpose()) * (weights[i] / n as f64);
    }
    let chol = mass.cholesky().ok_or(BasisError::SingularBasis)?;
    let l_inv = chol.l().try_inverse().ok_or(BasisError::SingularBasis)?;
    let reduced = &l_inv * stiff * l_inv.transpose();
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = reduced.symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let back = l_inv.transpose();
    let columns: Vec<DVector<f64>> = order.iter().map(|&i| &back * eig.eigenvectors.column(i)).collect();
    Ok(RitzModes {
        eigenvalues,
        coefficients: DMatrix::from_columns(&columns),
    })
}
