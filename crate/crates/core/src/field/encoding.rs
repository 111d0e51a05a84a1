//! Positional encoding of lifted coordinates and assembly of the input jet
//! (values plus spatial first/second derivatives) fed to the network.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::lifting::LiftJet;

/// Which spatial derivatives travel with the values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Value = 0,
    Gradient = 1,
    Hessian = 2,
}

impl Order {
    /// Number of jet components: value, `d` first derivatives, and the upper
    /// triangle of the Hessian.
    pub fn components(self, d: usize) -> usize {
        match self {
            Order::Value => 1,
            Order::Gradient => 1 + d,
            Order::Hessian => 1 + d + d * (d + 1) / 2,
        }
    }
}

/// Upper-triangle index pairs `(p, q)`, `p <= q`, in row-major order.
pub fn hessian_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for p in 0..d {
        for q in p..d {
            out.push((p, q));
        }
    }
    out
}

/// Positional encoding parameters: `frequencies` octaves `2^0 .. 2^(F-1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Encoding {
    pub lifted_dim: usize,
    pub frequencies: usize,
    pub conditioned: bool,
}

impl Encoding {
    pub fn width(&self) -> usize {
        self.lifted_dim * (1 + 2 * self.frequencies) + usize::from(self.conditioned)
    }

    fn scale(j: usize) -> f64 {
        (1u64 << j) as f64 * PI
    }

    /// `[q, sin(2^j π q_i), cos(2^j π q_i) ...]`, with α appended raw when conditioned.
    pub fn encode(&self, q: &[f64], alpha: f64) -> Vec<f64> {
        debug_assert_eq!(q.len(), self.lifted_dim);
        let mut out = Vec::with_capacity(self.width());
        out.extend_from_slice(q);
        for &qi in q {
            for j in 0..self.frequencies {
                let (s, c) = (Self::scale(j) * qi).sin_cos();
                out.push(s);
                out.push(c);
            }
        }
        if self.conditioned {
            out.push(alpha);
        }
        out
    }

    /// Jacobian of [`Encoding::encode`] with respect to `q` (width x lifted_dim).
    pub fn encode_jacobian(&self, q: &[f64]) -> Array2<f64> {
        let m = self.lifted_dim;
        let mut jac = Array2::zeros((self.width(), m));
        for i in 0..m {
            jac[[i, i]] = 1.0;
        }
        for (i, &qi) in q.iter().enumerate() {
            for j in 0..self.frequencies {
                let c = Self::scale(j);
                let (s, co) = (c * qi).sin_cos();
                let row = m + 2 * (i * self.frequencies + j);
                jac[[row, i]] = c * co;
                jac[[row + 1, i]] = -c * s;
            }
        }
        jac
    }

    /// Batch input jet, `(components * n) x width`, component-major rows.
    ///
    /// Each lift jet provides the lifted values and their spatial derivatives;
    /// the encoding is composed with them by the chain rule.
    pub fn input_jet(&self, lifts: &[LiftJet], alphas: &[f64], order: Order) -> Array2<f64> {
        let n = lifts.len();
        assert_eq!(alphas.len(), n);
        let d = lifts.first().map_or(0, |l| l.jacobian.ncols());
        let comps = order.components(d);
        let pairs = hessian_pairs(d);
        let width = self.width();
        let mut x = Array2::zeros((comps * n, width));
        for (s, (lift, &alpha)) in lifts.iter().zip(alphas).enumerate() {
            let m = self.lifted_dim;
            debug_assert_eq!(lift.value.len(), m);
            let mut put = |col: usize, value: f64, grad: &dyn Fn(usize) -> f64, hess: &dyn Fn(usize, usize) -> f64| {
                x[[s, col]] = value;
                if order >= Order::Gradient {
                    for p in 0..d {
                        x[[(1 + p) * n + s, col]] = grad(p);
                    }
                }
                if order >= Order::Hessian {
                    for (c, &(p, q)) in pairs.iter().enumerate() {
                        x[[(1 + d + c) * n + s, col]] = hess(p, q);
                    }
                }
            };
            for i in 0..m {
                let qi = lift.value[i];
                let g = |p: usize| lift.jacobian[(i, p)];
                let h = |p: usize, q: usize| lift.hessians[i][(p, q)];
                put(i, qi, &g, &h);
                for j in 0..self.frequencies {
                    let c = Self::scale(j);
                    let (sn, cs) = (c * qi).sin_cos();
                    let col = m + 2 * (i * self.frequencies + j);
                    put(
                        col,
                        sn,
                        &|p| c * cs * g(p),
                        &|p, q| c * cs * h(p, q) - c * c * sn * g(p) * g(q),
                    );
                    put(
                        col + 1,
                        cs,
                        &|p| -c * sn * g(p),
                        &|p, q| -c * sn * h(p, q) - c * c * cs * g(p) * g(q),
                    );
                }
            }
            if self.conditioned {
                put(width - 1, alpha, &|_| 0.0, &|_, _| 0.0);
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn enc(m: usize) -> Encoding {
        Encoding {
            lifted_dim: m,
            frequencies: 6,
            conditioned: true,
        }
    }

    #[test]
    fn zero_input() {
        let e = enc(3);
        let out = e.encode(&[0.0, 0.0, 0.0], 0.0);
        assert_eq!(out.len(), 3 * 13 + 1);
        for i in 0..3 {
            for j in 0..6 {
                let col = 3 + 2 * (i * 6 + j);
                assert_eq!(out[col], 0.0);
                assert_eq!(out[col + 1], 1.0);
            }
        }
    }

    #[test]
    fn width_arithmetic() {
        for m in 1..5 {
            let e = Encoding {
                lifted_dim: m,
                frequencies: 6,
                conditioned: false,
            };
            assert_eq!(e.width(), m * 13);
            assert_eq!(e.encode(&vec![0.3; m], 0.0).len(), m * 13);
        }
        assert_eq!(enc(2).width(), 27);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let e = enc(2);
        let q = [0.37, 0.041];
        let jac = e.encode_jacobian(&q);
        let eps = 1e-7;
        for i in 0..2 {
            let mut qp = q;
            let mut qm = q;
            qp[i] += eps;
            qm[i] -= eps;
            let (fp, fm) = (e.encode(&qp, 0.2), e.encode(&qm, 0.2));
            for r in 0..e.width() {
                let fd = (fp[r] - fm[r]) / (2.0 * eps);
                let scale = jac[[r, i]].abs().max(1.0);
                assert!((jac[[r, i]] - fd).abs() / scale < 1e-8, "row {r}: {} vs {fd}", jac[[r, i]]);
            }
        }
        // alpha column is constant in q
        assert_relative_eq!(jac.row(e.width() - 1).sum(), 0.0);
    }

    #[test]
    fn component_counts() {
        assert_eq!(Order::Value.components(2), 1);
        assert_eq!(Order::Gradient.components(2), 3);
        assert_eq!(Order::Hessian.components(2), 6);
        assert_eq!(Order::Hessian.components(3), 10);
        assert_eq!(hessian_pairs(2), vec![(0, 0), (0, 1), (1, 1)]);
    }
}
