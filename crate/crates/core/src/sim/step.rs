//! Implicit time step: minimize the inertia + elastic + external objective
//! by gradient descent with step halving.

use serde::{Deserialize, Serialize};

use super::energy::{energy_density, Material};
use super::forces::{CubatureSet, External};
use super::kinematics::{accumulate_stress, deformation_gradient, Reduced, ReducedState};
use super::SimError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorParams {
    /// Time step `h` in seconds.
    pub h: f64,
    pub iterations: usize,
    /// Initial gradient-descent step; the inertia term has unit curvature,
    /// so 1 is exact for purely inertial or linear-force problems.
    pub step_size: f64,
    pub max_halvings: usize,
    /// Gradient norm below which the inner loop stops.
    pub tolerance: f64,
}

impl Default for IntegratorParams {
    fn default() -> Self {
        Self {
            h: 1e-2,
            iterations: 64,
            step_size: 1.0,
            max_halvings: 8,
            tolerance: 1e-10,
        }
    }
}

/// Inputs of the step objective that stay fixed during one step.
pub struct StepProblem<'a> {
    pub cubature: &'a CubatureSet,
    pub material: &'a Material,
    pub external: &'a External,
    pub h: f64,
}

#[derive(Clone, Debug, Default)]
pub struct StepReport {
    pub iterations: usize,
    /// Objective after each accepted iteration, starting with the initial guess.
    pub objectives: Vec<f64>,
    pub converged: bool,
    pub barrier: bool,
}

/// Elastic energy `Σ_i Ψ(F(x_i)) vol` and optionally its gradient.
pub fn elastic_energy(z: &Reduced, cubature: &CubatureSet, material: &Material, mut grad: Option<&mut Reduced>) -> (f64, bool) {
    let mut e = 0.0;
    let mut barrier = false;
    for i in 0..cubature.len() {
        let (x, phi, g) = (&cubature.points[i], &cubature.values[i], &cubature.grads[i]);
        let f = deformation_gradient(z, phi, g, x);
        let dens = energy_density(&f, material, cubature.weights[i]);
        e += dens.value * cubature.volume;
        barrier |= dens.barrier;
        if let Some(out) = grad.as_deref_mut() {
            accumulate_stress(out, &dens.stress, phi, g, x, cubature.volume);
        }
    }
    (e, barrier)
}

impl StepProblem<'_> {
    /// `½‖z − ẑ‖² + h² (E_elastic + E_ext)` with `ẑ = 2z_t − z_{t−1}`.
    pub fn objective(&self, z: &Reduced, prediction: &Reduced, grad: Option<&mut Reduced>) -> (f64, bool) {
        let h2 = self.h * self.h;
        let inertia: f64 = z.data.iter().zip(&prediction.data).map(|(a, b)| 0.5 * (a - b) * (a - b)).sum();
        match grad {
            Some(out) => {
                out.data.iter_mut().for_each(|v| *v = 0.0);
                let (el, barrier) = elastic_energy(z, self.cubature, self.material, Some(out));
                let ext = self.external.energy(z, self.cubature, Some(out));
                for ((g, a), b) in out.data.iter_mut().zip(&z.data).zip(&prediction.data) {
                    *g = h2 * *g + (a - b);
                }
                (inertia + h2 * (el + ext), barrier)
            }
            None => {
                let (el, barrier) = elastic_energy(z, self.cubature, self.material, None);
                let ext = self.external.energy(z, self.cubature, None);
                (inertia + h2 * (el + ext), barrier)
            }
        }
    }
}

/// Advance `state` by one step, starting gradient descent at the inertial
/// prediction.
pub fn step(state: &mut ReducedState, problem: &StepProblem, params: &IntegratorParams) -> Result<StepReport, SimError> {
    let prediction = state.inertial_prediction();
    let mut z = prediction.clone();
    let mut grad = Reduced::zeros(z.k, z.d);
    let (mut value, mut barrier) = problem.objective(&z, &prediction, Some(&mut grad));
    let mut report = StepReport {
        objectives: vec![value],
        ..StepReport::default()
    };
    let mut eta = params.step_size;
    let mut trial = z.clone();
    for it in 0..params.iterations {
        let gnorm = grad.norm();
        if !gnorm.is_finite() || !value.is_finite() {
            return Err(SimError::NonFinite { step: state.step });
        }
        if gnorm <= params.tolerance {
            report.converged = true;
            break;
        }
        let mut accepted = false;
        for _ in 0..=params.max_halvings {
            for ((t, a), g) in trial.data.iter_mut().zip(&z.data).zip(&grad.data) {
                *t = a - eta * g;
            }
            let (v, _) = problem.objective(&trial, &prediction, None);
            if v <= value {
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            // at the floating-point floor a tiny gradient cannot decrease the objective
            if gnorm <= 1e-7 * (1.0 + value.abs()) {
                report.converged = true;
                break;
            }
            return Err(SimError::StepFailed {
                step: state.step,
                iteration: it,
                objective: value,
                gradient_norm: gnorm,
            });
        }
        std::mem::swap(&mut z, &mut trial);
        let (v, b) = problem.objective(&z, &prediction, Some(&mut grad));
        value = v;
        barrier |= b;
        report.objectives.push(value);
        report.iterations = it + 1;
        eta = (2.0 * eta).min(params.step_size);
    }
    if barrier {
        log::warn!("step {}: inverted elements hit the energy barrier", state.step);
    }
    report.barrier = barrier;
    state.previous = std::mem::replace(&mut state.current, z);
    state.step += 1;
    Ok(report)
}
