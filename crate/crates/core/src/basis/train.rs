//! Adam training loop over α-sampled batches.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{loss_and_gradient, LossKind};
use super::sampling::sample_domain_with;
use super::{BasisError, ShapeFamily};
use crate::field::{FieldNetwork, NetworkSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Spatial samples per epoch, split evenly across the α draws.
    pub batch: usize,
    pub alpha_samples: usize,
    pub learning_rate: f64,
    /// Fraction of epochs after which the learning rate drops.
    pub decay_at: f64,
    pub decay_factor: f64,
    pub lambda_gram: f64,
    pub loss: LossKind,
    pub seed: u64,
    /// Draw α from this list instead of uniformly from the family range.
    pub alpha_grid: Option<Vec<f64>>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 2000,
            batch: 4096,
            alpha_samples: 8,
            learning_rate: 1e-4,
            decay_at: 0.8,
            decay_factor: 0.1,
            lambda_gram: 10.0,
            loss: LossKind::Dirichlet,
            seed: 0,
            alpha_grid: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, family: &ShapeFamily) -> Result<(), BasisError> {
        let bad = |msg: &str| Err(BasisError::InvalidConfig(msg.to_string()));
        if self.epochs == 0 || self.batch == 0 || self.alpha_samples == 0 {
            return bad("epochs, batch and alpha_samples must be positive");
        }
        if self.batch / self.alpha_samples < 2 {
            return bad("fewer than two samples per α draw");
        }
        if !(self.learning_rate > 0.0) || !(self.lambda_gram >= 0.0) || !(self.decay_factor > 0.0) {
            return bad("learning rate and decay factor must be positive, λ_G non-negative");
        }
        if !(0.0..=1.0).contains(&self.decay_at) {
            return bad("decay_at must lie in [0, 1]");
        }
        if let Some(grid) = &self.alpha_grid {
            if grid.is_empty() || grid.iter().any(|a| !family.contains_alpha(*a)) {
                return bad("alpha_grid must be non-empty and inside the family α range");
            }
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        if (epoch as f64) < self.decay_at * self.epochs as f64 {
            self.learning_rate
        } else {
            self.learning_rate * self.decay_factor
        }
    }
}

/// Adaptive-moment optimizer state.
#[derive(Clone, Debug)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub epoch: usize,
    pub loss: f64,
    pub gram_penalty: f64,
}

pub fn write_trace_csv(path: impl AsRef<Path>, trace: &[TraceRow]) -> Result<(), BasisError> {
    let io = |e: std::io::Error| BasisError::Io(e.to_string());
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(f, "epoch,loss,gram_penalty").map_err(io)?;
    for r in trace {
        writeln!(f, "{},{:e},{:e}", r.epoch, r.loss, r.gram_penalty).map_err(io)?;
    }
    f.flush().map_err(io)
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub network: FieldNetwork,
    pub trace: Vec<TraceRow>,
}

fn draw_alpha(family: &ShapeFamily, config: &TrainConfig, rng: &mut ChaCha8Rng) -> f64 {
    match &config.alpha_grid {
        Some(grid) => grid[rng.gen_range(0..grid.len())],
        None => {
            let [a, b] = family.alpha_range;
            if a == b {
                a
            } else {
                rng.gen_range(a..=b)
            }
        }
    }
}

/// Train a freshly initialized network of the given architecture.
pub fn train_basis(family: &ShapeFamily, spec: NetworkSpec, config: &TrainConfig) -> Result<TrainOutcome, BasisError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let network = FieldNetwork::new(spec, &mut rng)?;
    train_from(family, network, config, &mut rng, |_| {})
}

/// Continue training `network`; `progress` sees every trace row.
pub fn train_from(
    family: &ShapeFamily,
    mut network: FieldNetwork,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
    mut progress: impl FnMut(&TraceRow),
) -> Result<TrainOutcome, BasisError> {
    config.validate(family)?;
    let spec = network.spec().clone();
    if spec.dim != family.dim() || spec.extra != family.extra_dims() {
        return Err(BasisError::InvalidConfig(format!(
            "network expects {}D with {} extra coordinates, scene is {}D with {}",
            spec.dim,
            spec.extra,
            family.dim(),
            family.extra_dims()
        )));
    }
    let per_group = config.batch / config.alpha_samples;
    if per_group < spec.outputs {
        return Err(BasisError::TooFewSamples {
            got: per_group,
            need: spec.outputs,
        });
    }
    let mut params = network.parameters();
    let mut adam = Adam::new(params.len());
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut total = 0.0;
        let mut gram = 0.0;
        let mut grad: Option<Vec<f64>> = None;
        for group in 0..config.alpha_samples {
            let alpha = draw_alpha(family, config, rng);
            let map = family.lifting_map(alpha)?;
            let samples = sample_domain_with(family, &map, alpha, per_group, rng)?;
            let weights: Vec<f64> = samples.iter().map(|x| family.weight(alpha, x)).collect();
            let (value, g) = loss_and_gradient(&network, config.loss, &map, &samples, &weights, alpha, config.lambda_gram)?;
            if !value.total.is_finite() {
                return Err(BasisError::NonFinite { epoch, group });
            }
            total += value.total;
            gram += value.gram;
            let flat = g.flatten();
            match &mut grad {
                Some(acc) => acc.iter_mut().zip(&flat).for_each(|(a, b)| *a += b),
                None => grad = Some(flat),
            }
        }
        let scale = 1.0 / config.alpha_samples as f64;
        let mut grad = grad.expect("at least one α group");
        grad.iter_mut().for_each(|g| *g *= scale);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(BasisError::NonFinite { epoch, group: 0 });
        }
        adam.step(&mut params, &grad, config.learning_rate_at(epoch));
        network.set_parameters(&params)?;
        let row = TraceRow {
            epoch,
            loss: total * scale,
            gram_penalty: gram * scale,
        };
        if epoch % 100 == 0 || epoch + 1 == config.epochs {
            log::info!("epoch {epoch}: loss {:.6e}, gram {:.3e}", row.loss, row.gram_penalty);
        }
        progress(&row);
        trace.push(row);
    }
    Ok(TrainOutcome { network, trace })
}
