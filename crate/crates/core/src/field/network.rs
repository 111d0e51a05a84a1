//! Sinusoidal MLP with analytic spatial jets and a reverse pass to the weights.
//!
//! The forward pass carries, for every sample, the activation value together
//! with its first and (optionally) second spatial derivatives. Linear layers
//! act on every jet component alike (bias only on values); a sine layer
//! `y = sin(ω z)` maps a jet `(z, z_p, z_pq)` to
//! `(sin ωz, ω cos ωz · z_p, ω cos ωz · z_pq − ω² sin ωz · z_p z_q)`.
//! The backward pass differentiates that map, so losses built from spatial
//! gradients and Hessians get exact weight gradients.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::encoding::{hessian_pairs, Encoding, Order};
use super::FieldError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Sine,
    /// Identity activations; the network is affine in its inputs.
    Identity,
}

/// Architecture descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    /// Spatial dimension `d`.
    pub dim: usize,
    /// Lifted coordinates beyond the spatial ones (1 or 2).
    pub extra: usize,
    /// Linear layers, including the output layer.
    pub layers: usize,
    pub width: usize,
    /// Number of basis functions `k`.
    pub outputs: usize,
    /// Positional-encoding octaves.
    pub frequencies: usize,
    /// Frequency scale of the first sine layer.
    pub omega0: f64,
    pub conditioned: bool,
    pub activation: Activation,
}

impl NetworkSpec {
    pub fn new(dim: usize, extra: usize, outputs: usize) -> Self {
        NetworkSpec {
            dim,
            extra,
            layers: 5,
            width: 128,
            outputs,
            frequencies: 6,
            omega0: 30.0,
            conditioned: true,
            activation: Activation::Sine,
        }
    }

    pub fn encoding(&self) -> Encoding {
        Encoding {
            lifted_dim: self.dim + self.extra,
            frequencies: self.frequencies,
            conditioned: self.conditioned,
        }
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        if !(1..=3).contains(&self.dim) || self.extra == 0 || self.layers == 0 || self.width == 0 || self.outputs == 0 {
            return Err(FieldError::InvalidSpec(format!("{self:?}")));
        }
        if !(self.omega0 > 0.0) {
            return Err(FieldError::InvalidSpec("omega0 must be positive".into()));
        }
        Ok(())
    }

    fn layer_sizes(&self) -> Vec<(usize, usize)> {
        let mut sizes = vec![];
        let mut fan_in = self.encoding().width();
        for l in 0..self.layers {
            let out = if l + 1 == self.layers { self.outputs } else { self.width };
            sizes.push((fan_in, out));
            fan_in = out;
        }
        sizes
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_sizes().iter().map(|(i, o)| i * o + o).sum()
    }
}

/// Dense layer `z = W x + b`, `W` is out x in.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldNetwork {
    spec: NetworkSpec,
    layers: Vec<Dense>,
}

/// Network outputs at a batch of points: values and spatial derivatives.
///
/// `grads[p]` holds `∂φ/∂x_p`, `hess[c]` the Hessian entry for the `c`-th
/// upper-triangle pair; every array is `n x k`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldJet {
    pub order: Order,
    pub values: Array2<f64>,
    pub grads: Vec<Array2<f64>>,
    pub hess: Vec<Array2<f64>>,
}

impl FieldJet {
    pub fn zeros_like(&self) -> FieldJet {
        FieldJet {
            order: self.order,
            values: Array2::zeros(self.values.raw_dim()),
            grads: self.grads.iter().map(|g| Array2::zeros(g.raw_dim())).collect(),
            hess: self.hess.iter().map(|h| Array2::zeros(h.raw_dim())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn modes(&self) -> usize {
        self.values.ncols()
    }

    pub fn dim(&self) -> usize {
        self.grads.len()
    }

    /// Full `d x d` Hessian of mode `i` at sample `s`.
    pub fn hessian(&self, s: usize, i: usize) -> nalgebra::DMatrix<f64> {
        let d = self.dim();
        let mut h = nalgebra::DMatrix::zeros(d, d);
        for (c, (p, q)) in hessian_pairs(d).into_iter().enumerate() {
            h[(p, q)] = self.hess[c][[s, i]];
            h[(q, p)] = self.hess[c][[s, i]];
        }
        h
    }
}

/// Forward cache for the reverse pass.
#[derive(Clone, Debug)]
pub struct Tape {
    n: usize,
    dim: usize,
    order: Order,
    /// Input of each linear layer.
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of each hidden layer.
    pre: Vec<Array2<f64>>,
}

/// Per-layer weight gradients, aligned with the network's layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = vec![];
        for l in &self.layers {
            out.extend(l.weight.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight += &b.weight;
            a.bias += &b.bias;
        }
    }
}

fn sine_forward(pre: &Array2<f64>, n: usize, d: usize, order: Order, omega: f64) -> Array2<f64> {
    let mut out = Array2::zeros(pre.raw_dim());
    let w = pre.ncols();
    let block = n * w;
    let z = pre.as_slice().expect("standard layout");
    let y = out.as_slice_mut().expect("standard layout");
    let pairs = hessian_pairs(d);
    let om2 = omega * omega;
    for e in 0..block {
        let (sn, cs) = (omega * z[e]).sin_cos();
        y[e] = sn;
        if order >= Order::Gradient {
            let oc = omega * cs;
            for p in 0..d {
                let i = (1 + p) * block + e;
                y[i] = oc * z[i];
            }
            if order >= Order::Hessian {
                let os = om2 * sn;
                for (c, &(p, q)) in pairs.iter().enumerate() {
                    let i = (1 + d + c) * block + e;
                    y[i] = oc * z[i] - os * z[(1 + p) * block + e] * z[(1 + q) * block + e];
                }
            }
        }
    }
    out
}

fn sine_backward(pre: &Array2<f64>, ybar: &Array2<f64>, n: usize, d: usize, order: Order, omega: f64) -> Array2<f64> {
    let mut zbar = Array2::zeros(pre.raw_dim());
    let w = pre.ncols();
    let block = n * w;
    let z = pre.as_slice().expect("standard layout");
    let yb = ybar.as_slice().expect("standard layout");
    let zb = zbar.as_slice_mut().expect("standard layout");
    let pairs = hessian_pairs(d);
    let om2 = omega * omega;
    let om3 = om2 * omega;
    for e in 0..block {
        let (sn, cs) = (omega * z[e]).sin_cos();
        let mut v = yb[e] * omega * cs;
        if order >= Order::Gradient {
            for p in 0..d {
                let i = (1 + p) * block + e;
                v -= yb[i] * om2 * sn * z[i];
                zb[i] = yb[i] * omega * cs;
            }
            if order >= Order::Hessian {
                for (c, &(p, q)) in pairs.iter().enumerate() {
                    let i = (1 + d + c) * block + e;
                    let ip = (1 + p) * block + e;
                    let iq = (1 + q) * block + e;
                    let yhat = yb[i];
                    v -= yhat * (om2 * sn * z[i] + om3 * cs * z[ip] * z[iq]);
                    zb[i] = yhat * omega * cs;
                    let k = -yhat * om2 * sn;
                    zb[ip] += k * z[iq];
                    zb[iq] += k * z[ip];
                }
            }
        }
        zb[e] = v;
    }
    zbar
}

impl FieldNetwork {
    /// SIREN initialization: first layer `U(±1/fan_in)` under `sin(ω0 z)`,
    /// hidden layers `U(±sqrt(6/fan_in))` under `sin(z)`, output layer
    /// `U(±sqrt(6/fan_in)/ω0)`; biases `U(±1/sqrt(fan_in))`.
    pub fn new<R: Rng>(spec: NetworkSpec, rng: &mut R) -> Result<Self, FieldError> {
        spec.validate()?;
        let sizes = spec.layer_sizes();
        let last = sizes.len() - 1;
        let layers = sizes
            .iter()
            .enumerate()
            .map(|(l, &(fan_in, out))| {
                let nf = fan_in as f64;
                let limit = if last == 0 || l == last {
                    (6.0 / nf).sqrt() / spec.omega0
                } else if l == 0 {
                    1.0 / nf
                } else {
                    (6.0 / nf).sqrt()
                };
                let bias_limit = 1.0 / nf.sqrt();
                Dense {
                    weight: Array2::from_shape_simple_fn((out, fan_in), || rng.gen_range(-limit..=limit)),
                    bias: Array1::from_shape_simple_fn(out, || rng.gen_range(-bias_limit..=bias_limit)),
                }
            })
            .collect();
        Ok(FieldNetwork { spec, layers })
    }

    pub fn from_layers(spec: NetworkSpec, layers: Vec<Dense>) -> Result<Self, FieldError> {
        spec.validate()?;
        let sizes = spec.layer_sizes();
        if sizes.len() != layers.len()
            || sizes
                .iter()
                .zip(&layers)
                .any(|(&(i, o), l)| l.weight.dim() != (o, i) || l.bias.len() != o)
        {
            return Err(FieldError::InvalidSpec("layer shapes do not match spec".into()));
        }
        Ok(FieldNetwork { spec, layers })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn parameters(&self) -> Vec<f64> {
        Gradients {
            layers: self.layers.clone(),
        }
        .flatten()
    }

    pub fn set_parameters(&mut self, flat: &[f64]) -> Result<(), FieldError> {
        if flat.len() != self.spec.parameter_count() {
            return Err(FieldError::ParameterCount {
                expected: self.spec.parameter_count(),
                got: flat.len(),
            });
        }
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            for w in l.weight.iter_mut() {
                *w = it.next().expect("length checked");
            }
            for b in l.bias.iter_mut() {
                *b = it.next().expect("length checked");
            }
        }
        Ok(())
    }

    fn omega(&self, layer: usize) -> f64 {
        if layer == 0 {
            self.spec.omega0
        } else {
            1.0
        }
    }

    /// Run the network on an input jet of `n` samples.
    pub fn forward(&self, input: Array2<f64>, n: usize, order: Order) -> Result<(FieldJet, Tape), FieldError> {
        let d = self.spec.dim;
        let comps = order.components(d);
        let width = self.spec.encoding().width();
        if input.dim() != (comps * n, width) {
            return Err(FieldError::InputShape {
                expected: (comps * n, width),
                got: input.dim(),
            });
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len().saturating_sub(1));
        let mut x = input;
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = x.dot(&layer.weight.t());
            z.slice_mut(s![0..n, ..]).outer_iter_mut().for_each(|mut row| row += &layer.bias);
            inputs.push(x);
            if l == last {
                x = z;
            } else {
                let y = match self.spec.activation {
                    Activation::Sine => sine_forward(&z, n, d, order, self.omega(l)),
                    Activation::Identity => z.clone(),
                };
                pre.push(z);
                x = y;
            }
        }
        let block = |c: usize| x.slice(s![c * n..(c + 1) * n, ..]).to_owned();
        let jet = FieldJet {
            order,
            values: block(0),
            grads: if order >= Order::Gradient { (0..d).map(|p| block(1 + p)).collect() } else { vec![] },
            hess: if order >= Order::Hessian {
                (0..d * (d + 1) / 2).map(|c| block(1 + d + c)).collect()
            } else {
                vec![]
            },
        };
        Ok((
            jet,
            Tape {
                n,
                dim: d,
                order,
                inputs,
                pre,
            },
        ))
    }

    /// Weight gradients of a scalar loss given its adjoint with respect to the
    /// forward outputs. Adjoints of derivatives that were not propagated
    /// forward are rejected rather than dropped.
    pub fn backward(&self, tape: &Tape, adjoint: &FieldJet) -> Result<Gradients, FieldError> {
        let (n, d, order) = (tape.n, tape.dim, tape.order);
        if adjoint.order > order
            || (order < Order::Gradient && !adjoint.grads.is_empty())
            || (order < Order::Hessian && !adjoint.hess.is_empty())
        {
            return Err(FieldError::UnsupportedComposition {
                forward: order,
                requested: adjoint.order,
            });
        }
        if adjoint.values.nrows() != n {
            return Err(FieldError::AdjointShape);
        }
        let comps = order.components(d);
        let k = self.spec.outputs;
        let mut zbar = Array2::zeros((comps * n, k));
        zbar.slice_mut(s![0..n, ..]).assign(&adjoint.values);
        for (p, g) in adjoint.grads.iter().enumerate() {
            zbar.slice_mut(s![(1 + p) * n..(2 + p) * n, ..]).assign(g);
        }
        for (c, h) in adjoint.hess.iter().enumerate() {
            zbar.slice_mut(s![(1 + d + c) * n..(2 + d + c) * n, ..]).assign(h);
        }
        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let x = &tape.inputs[l];
            let weight = zbar.t().dot(x);
            let bias = zbar.slice(s![0..n, ..]).sum_axis(Axis(0));
            grads.push(Dense { weight, bias });
            if l == 0 {
                break;
            }
            let xbar = zbar.dot(&self.layers[l].weight);
            zbar = match self.spec.activation {
                Activation::Sine => sine_backward(&tape.pre[l - 1], &xbar, n, d, order, self.omega(l - 1)),
                Activation::Identity => xbar,
            };
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }

    /// Values only, for already-encoded inputs.
    pub fn eval_encoded(&self, encoded: ArrayView2<f64>) -> Result<Array2<f64>, FieldError> {
        let n = encoded.nrows();
        Ok(self.forward(encoded.to_owned(), n, Order::Value)?.0.values)
    }
}
