//! Shape optimization over α by projected gradient ascent with
//! finite-difference gradients.

use serde::{Deserialize, Serialize};

use super::SimError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    pub iterations: usize,
    /// Central-difference half step in α.
    pub fd_step: f64,
    /// Initial step as a fraction of the α range along the normalized gradient.
    pub initial_step: f64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            iterations: 10,
            fd_step: 1e-2,
            initial_step: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeRow {
    pub iteration: usize,
    pub alpha: f64,
    pub objective: f64,
    pub gradient: f64,
    /// Best objective seen so far.
    pub best: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeOutcome {
    pub alpha: f64,
    pub objective: f64,
    pub initial: f64,
    pub trace: Vec<OptimizeRow>,
}

impl OptimizeOutcome {
    /// Relative improvement of the best objective over the starting one.
    pub fn improvement(&self) -> f64 {
        (self.objective - self.initial) / self.initial.abs().max(f64::MIN_POSITIVE)
    }
}

/// Maximize `objective` over `α ∈ range` starting at `alpha0`.
///
/// The gradient is a central difference clamped to the range. Accepted steps
/// grow the step length by 1.5, rejected ones halve it. A failing objective
/// evaluation inside a difference probe halves the probe once and then aborts.
pub fn optimize_shape<F>(mut objective: F, alpha0: f64, range: [f64; 2], config: &OptimizeConfig) -> Result<OptimizeOutcome, SimError>
where
    F: FnMut(f64) -> Result<f64, SimError>,
{
    let [lo, hi] = range;
    if !(lo < hi) || !(lo..=hi).contains(&alpha0) {
        return Err(SimError::Invalid(format!("α0 = {alpha0} outside [{lo}, {hi}]")));
    }
    if !(config.fd_step > 0.0) || !(config.initial_step > 0.0) {
        return Err(SimError::Invalid("fd_step and initial_step must be positive".into()));
    }
    let mut eval = |a: f64| -> Result<f64, SimError> {
        let v = objective(a)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(SimError::Objective {
                alpha: a,
                message: "non-finite objective".into(),
            })
        }
    };
    let mut alpha = alpha0;
    let mut value = eval(alpha)?;
    let initial = value;
    let mut eta: Option<f64> = None;
    let mut trace = vec![];
    for iteration in 0..config.iterations {
        let gradient = {
            let mut delta = config.fd_step;
            let mut attempt = 0;
            loop {
                let (a, b) = ((alpha - delta).max(lo), (alpha + delta).min(hi));
                match (eval(a), eval(b)) {
                    (Ok(fa), Ok(fb)) => break (fb - fa) / (b - a),
                    (Err(e), _) | (_, Err(e)) => {
                        if attempt > 0 {
                            return Err(e);
                        }
                        log::warn!("gradient probe failed at α = {alpha}: {e}; halving the probe");
                        attempt += 1;
                        delta *= 0.5;
                    }
                }
            }
        };
        trace.push(OptimizeRow {
            iteration,
            alpha,
            objective: value,
            gradient,
            best: value,
        });
        if gradient == 0.0 {
            break;
        }
        let step = *eta.get_or_insert(config.initial_step * (hi - lo) / gradient.abs());
        let candidate = (alpha + step * gradient).clamp(lo, hi);
        if candidate == alpha {
            break;
        }
        match eval(candidate) {
            Ok(v) if v > value => {
                alpha = candidate;
                value = v;
                eta = Some(step * 1.5);
            }
            _ => eta = Some(step * 0.5),
        }
        trace.last_mut().expect("pushed").best = value;
    }
    Ok(OptimizeOutcome {
        alpha,
        objective: value,
        initial,
        trace,
    })
}
