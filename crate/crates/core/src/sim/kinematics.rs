//! Skinning-eigenmode kinematics `u(x) = Σ_j φ_j(x) z_j [x; 1]`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Reduced coordinates: `k` blocks `z_j ∈ R^{d x (d+1)}`, each stored
/// row-major, concatenated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reduced {
    pub k: usize,
    pub d: usize,
    pub data: Vec<f64>,
}

impl Reduced {
    pub fn zeros(k: usize, d: usize) -> Self {
        Self {
            k,
            d,
            data: vec![0.0; k * d * (d + 1)],
        }
    }

    pub fn from_vec(k: usize, d: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == k * d * (d + 1)).then_some(Self { k, d, data })
    }

    pub fn block_len(&self) -> usize {
        self.d * (self.d + 1)
    }

    /// Entry `(r, c)` of block `j`.
    #[inline]
    pub fn at(&self, j: usize, r: usize, c: usize) -> f64 {
        self.data[j * self.block_len() + r * (self.d + 1) + c]
    }

    #[inline]
    pub fn at_mut(&mut self, j: usize, r: usize, c: usize) -> &mut f64 {
        let i = j * self.block_len() + r * (self.d + 1) + c;
        &mut self.data[i]
    }

    pub fn block(&self, j: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.d, self.d + 1, |r, c| self.at(j, r, c))
    }

    pub fn set_block(&mut self, j: usize, m: &DMatrix<f64>) {
        for r in 0..self.d {
            for c in 0..=self.d {
                *self.at_mut(j, r, c) = m[(r, c)];
            }
        }
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Current and previous reduced coordinates plus the step counter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub current: Reduced,
    pub previous: Reduced,
    pub step: u64,
}

impl ReducedState {
    pub fn at_rest(k: usize, d: usize) -> Self {
        Self {
            current: Reduced::zeros(k, d),
            previous: Reduced::zeros(k, d),
            step: 0,
        }
    }

    /// Starts at `z` with zero velocity.
    pub fn still(z: Reduced) -> Self {
        Self {
            previous: z.clone(),
            current: z,
            step: 0,
        }
    }

    /// `2 z_t − z_{t−1}`.
    pub fn inertial_prediction(&self) -> Reduced {
        let data = self.current.data.iter().zip(&self.previous.data).map(|(a, b)| 2.0 * a - b).collect();
        Reduced { data, ..self.current }
    }
}

/// `u = Σ_j φ_j (z_j x̂)` with `x̂ = (x, 1)`.
pub fn displacement(z: &Reduced, phi: &[f64], x: &[f64]) -> Vec<f64> {
    let d = z.d;
    let mut u = vec![0.0; d];
    for (j, p) in phi.iter().enumerate().take(z.k) {
        for (r, ur) in u.iter_mut().enumerate() {
            let mut zx = z.at(j, r, d);
            for c in 0..d {
                zx += z.at(j, r, c) * x[c];
            }
            *ur += p * zx;
        }
    }
    u
}

/// `F = I + Σ_j z_j (x̂ ∇φ_jᵀ + φ_j Ê)` with `Ê = [I; 0ᵀ]`; `grad` is `k x d`.
pub fn deformation_gradient(z: &Reduced, phi: &[f64], grad: &DMatrix<f64>, x: &[f64]) -> DMatrix<f64> {
    let d = z.d;
    let mut f = DMatrix::identity(d, d);
    for j in 0..z.k {
        for r in 0..d {
            let mut zx = z.at(j, r, d);
            for c in 0..d {
                zx += z.at(j, r, c) * x[c];
            }
            for s in 0..d {
                f[(r, s)] += zx * grad[(j, s)] + phi[j] * z.at(j, r, s);
            }
        }
    }
    f
}

/// Accumulate `∂/∂z_j` of a function of `F` given its stress `P = ∂/∂F`,
/// scaled by `scale`, into `out`.
pub fn accumulate_stress(out: &mut Reduced, p: &DMatrix<f64>, phi: &[f64], grad: &DMatrix<f64>, x: &[f64], scale: f64) {
    let d = out.d;
    for j in 0..out.k {
        for r in 0..d {
            let pg: f64 = (0..d).map(|s| p[(r, s)] * grad[(j, s)]).sum();
            for c in 0..d {
                *out.at_mut(j, r, c) += scale * (x[c] * pg + phi[j] * p[(r, c)]);
            }
            *out.at_mut(j, r, d) += scale * pg;
        }
    }
}

/// Accumulate `∂/∂z_j` of a function of `u(x)` given `∂/∂u = g`.
pub fn accumulate_force(out: &mut Reduced, g: &[f64], phi: &[f64], x: &[f64], scale: f64) {
    let d = out.d;
    for j in 0..out.k {
        for r in 0..d {
            let a = scale * g[r] * phi[j];
            for c in 0..d {
                *out.at_mut(j, r, c) += a * x[c];
            }
            *out.at_mut(j, r, d) += a;
        }
    }
}
