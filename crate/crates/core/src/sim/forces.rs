//! Cubature sets and external energies (gravity, springs).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kinematics::{accumulate_force, displacement, Reduced};
use crate::basis::BasisSet;

/// Basis samples used to integrate energies over `Ω^α`.
#[derive(Clone, Debug)]
pub struct CubatureSet {
    pub points: Vec<Vec<f64>>,
    /// `values[i]` holds `φ(x_i)` (k entries).
    pub values: Vec<Vec<f64>>,
    /// `grads[i]` is `∇φ(x_i)`, `k x d`.
    pub grads: Vec<DMatrix<f64>>,
    /// Material weight `w(x_i)`.
    pub weights: Vec<f64>,
    /// Volume represented by each point, `|Ω| / N`.
    pub volume: f64,
}

impl CubatureSet {
    pub fn from_basis(set: &BasisSet, weights: Vec<f64>, total_volume: f64) -> Self {
        let n = set.len();
        Self {
            points: set.points.clone(),
            values: set.values.outer_iter().map(|r| r.to_vec()).collect(),
            grads: (0..n).map(|i| set.gradient(i)).collect(),
            weights,
            volume: total_volume / n.max(1) as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn modes(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

/// A material point together with its basis values.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialPoint {
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
}

impl MaterialPoint {
    pub fn position(&self, z: &Reduced) -> Vec<f64> {
        let u = displacement(z, &self.phi, &self.x);
        self.x.iter().zip(u).map(|(a, b)| a + b).collect()
    }
}

/// Quadratic zero-rest-length spring from a material point to a world
/// target or to another material point.
#[derive(Clone, Debug, PartialEq)]
pub enum Spring {
    Pin { point: MaterialPoint, target: Vec<f64>, stiffness: f64 },
    Pair { a: MaterialPoint, b: MaterialPoint, stiffness: f64 },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct External {
    pub gravity: Option<Vec<f64>>,
    pub springs: Vec<Spring>,
}

/// Runtime handle configuration (targets may be moved interactively).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Handle {
    /// Pulls material point `anchor` toward `target` (defaults to the anchor).
    PinSpring {
        anchor: Vec<f64>,
        #[serde(default)]
        target: Option<Vec<f64>>,
        stiffness: f64,
    },
    /// Pulls two material points together.
    PairSpring { a: Vec<f64>, b: Vec<f64>, stiffness: f64 },
    /// Uniform body force per unit volume.
    Gravity { acceleration: Vec<f64> },
}

impl Handle {
    pub fn stiffness(&self) -> f64 {
        match self {
            Handle::PinSpring { stiffness, .. } | Handle::PairSpring { stiffness, .. } => *stiffness,
            Handle::Gravity { .. } => 0.0,
        }
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

impl External {
    /// External energy and, when `grad` is given, its accumulated gradient.
    pub fn energy(&self, z: &Reduced, cubature: &CubatureSet, mut grad: Option<&mut Reduced>) -> f64 {
        let mut e = 0.0;
        if let Some(g) = &self.gravity {
            let neg: Vec<f64> = g.iter().map(|v| -v).collect();
            for (x, phi) in cubature.points.iter().zip(&cubature.values) {
                let u = displacement(z, phi, x);
                e -= cubature.volume * g.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
                if let Some(out) = grad.as_deref_mut() {
                    accumulate_force(out, &neg, phi, x, cubature.volume);
                }
            }
        }
        for spring in &self.springs {
            match spring {
                Spring::Pin { point, target, stiffness } => {
                    let r = sub(&point.position(z), target);
                    e += 0.5 * stiffness * r.iter().map(|v| v * v).sum::<f64>();
                    if let Some(out) = grad.as_deref_mut() {
                        accumulate_force(out, &r, &point.phi, &point.x, *stiffness);
                    }
                }
                Spring::Pair { a, b, stiffness } => {
                    let r = sub(&a.position(z), &b.position(z));
                    e += 0.5 * stiffness * r.iter().map(|v| v * v).sum::<f64>();
                    if let Some(out) = grad.as_deref_mut() {
                        accumulate_force(out, &r, &a.phi, &a.x, *stiffness);
                        accumulate_force(out, &r, &b.phi, &b.x, -*stiffness);
                    }
                }
            }
        }
        e
    }
}
