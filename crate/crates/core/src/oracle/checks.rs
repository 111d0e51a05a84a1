//! Finite-difference derivative checks, jump-condition residuals and a
//! gradient-kink locator.

use nalgebra::DMatrix;

use super::OracleError;
use crate::geometry::{closest_point, InterfaceMesh};

/// One-sided probe of the normal-derivative jump at an interface point.
///
/// `normal` points from the `w_minus` side to the `w_plus` side.
#[derive(Clone, Debug)]
pub struct JumpProbe {
    pub point: Vec<f64>,
    pub normal: Vec<f64>,
    pub w_minus: f64,
    pub w_plus: f64,
    pub offset: f64,
}

impl JumpProbe {
    fn at(&self, t: f64) -> Vec<f64> {
        self.point.iter().zip(&self.normal).map(|(p, n)| p + t * self.offset * n).collect()
    }

    /// One-sided normal derivatives `(g-, g+)`: first-order differences
    /// between the interface point and one offset on each side.
    pub fn one_sided(&self, f: &dyn Fn(&[f64]) -> f64) -> (f64, f64) {
        let at = f(&self.point);
        ((at - f(&self.at(-1.0))) / self.offset, (f(&self.at(1.0)) - at) / self.offset)
    }

    /// Fails if a probe is closer to some other part of `interfaces` than to
    /// its own interface point.
    pub fn guard(&self, interfaces: &InterfaceMesh) -> Result<(), OracleError> {
        for t in [-1.0, 1.0] {
            let x = self.at(t);
            let dist = closest_point(interfaces, &x).map_err(|e| OracleError::Invalid(e.to_string()))?.distance;
            if dist < (t as f64).abs() * self.offset * (1.0 - 1e-6) {
                return Err(OracleError::ProbeCrossesInterface { at: x });
            }
        }
        Ok(())
    }
}

/// `|w- g- − w+ g+| / max(|w- g-|, |w+ g+|, ε)`.
pub fn jump_residual(f: &dyn Fn(&[f64]) -> f64, probe: &JumpProbe) -> f64 {
    let (gm, gp) = probe.one_sided(f);
    let (a, b) = (probe.w_minus * gm, probe.w_plus * gp);
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

/// Magnitude of the one-sided normal-derivative difference `|g+ − g-|`.
pub fn normal_derivative_jump(f: &dyn Fn(&[f64]) -> f64, probe: &JumpProbe) -> f64 {
    let (gm, gp) = probe.one_sided(f);
    (gp - gm).abs()
}

/// Central-difference gradient.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], eps: f64) -> Vec<f64> {
    (0..x.len())
        .map(|p| {
            let (mut a, mut b) = (x.to_vec(), x.to_vec());
            a[p] += eps;
            b[p] -= eps;
            (f(&a) - f(&b)) / (2.0 * eps)
        })
        .collect()
}

/// Central-difference Hessian (second-order stencil on values).
pub fn fd_hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64], eps: f64) -> DMatrix<f64> {
    let d = x.len();
    let shifted = |p: usize, sp: f64, q: usize, sq: f64| {
        let mut y = x.to_vec();
        y[p] += sp;
        y[q] += sq;
        f(&y)
    };
    let mut h = DMatrix::zeros(d, d);
    for p in 0..d {
        for q in p..d {
            let v = if p == q {
                (shifted(p, eps, p, 0.0) - 2.0 * f(x) + shifted(p, -eps, p, 0.0)) / (eps * eps)
            } else {
                (shifted(p, eps, q, eps) - shifted(p, eps, q, -eps) - shifted(p, -eps, q, eps) + shifted(p, -eps, q, -eps))
                    / (4.0 * eps * eps)
            };
            h[(p, q)] = v;
            h[(q, p)] = v;
        }
    }
    h
}

/// Worst mismatch between an analytic derivative and central differences.
///
/// `analytic` is the gradient (order 1) or the row-major Hessian (order 2).
/// Errors are relative to `max(|analytic|, |fd|, 1)`, so tiny entries are
/// compared absolutely.
pub fn fd_check(f: &dyn Fn(&[f64]) -> f64, analytic: &[f64], x: &[f64], order: usize, eps: f64) -> f64 {
    let fd: Vec<f64> = match order {
        1 => fd_gradient(f, x, eps),
        2 => fd_hessian(f, x, eps).transpose().iter().copied().collect(),
        _ => panic!("fd_check supports orders 1 and 2"),
    };
    assert_eq!(fd.len(), analytic.len(), "analytic derivative has the wrong size");
    analytic
        .iter()
        .zip(&fd)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// Sample position with the largest second difference along a polyline of
/// equally spaced samples; `values[s]` may hold several components.
pub fn locate_kink(values: &[Vec<f64>]) -> Option<usize> {
    (1..values.len().saturating_sub(1))
        .map(|i| {
            let e: f64 = (0..values[i].len())
                .map(|c| {
                    let s = values[i + 1][c] - 2.0 * values[i][c] + values[i - 1][c];
                    s * s
                })
                .sum();
            (i, e)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe(w_minus: f64, w_plus: f64) -> JumpProbe {
        JumpProbe {
            point: vec![0.5],
            normal: vec![1.0],
            w_minus,
            w_plus,
            offset: 1e-3,
        }
    }

    #[test]
    fn constructed_jump_is_satisfied() {
        // slopes 4 | 1 satisfy 1 * 4 = 4 * 1
        let f = |x: &[f64]| if x[0] < 0.5 { 4.0 * (x[0] - 0.5) } else { x[0] - 0.5 };
        assert!(jump_residual(&f, &probe(1.0, 4.0)) < 1e-6);
    }

    #[test]
    fn smooth_field_residual_is_weight_contrast() {
        let f = |x: &[f64]| 2.0 * x[0] + 1.0;
        let r = jump_residual(&f, &probe(1.0, 4.0));
        assert!((r - 0.75).abs() < 1e-9, "{r}");
        assert!(normal_derivative_jump(&f, &probe(1.0, 4.0)) < 1e-9);
    }

    #[test]
    fn smooth_curvature_is_not_a_jump() {
        // a smooth field only shows the stencil bias δ f''
        let f = |x: &[f64]| 50.0 * (x[0] - 0.3).powi(2);
        assert!((normal_derivative_jump(&f, &probe(1.0, 1.0)) - 0.1).abs() < 1e-9);
    }

    #[test]
    fn guard_detects_other_interfaces() {
        let mesh = InterfaceMesh::points_1d(&[0.5, 0.5015]).unwrap();
        assert!(probe(1.0, 1.0).guard(&mesh).is_err());
        let mesh = InterfaceMesh::points_1d(&[0.5, 0.9]).unwrap();
        assert!(probe(1.0, 1.0).guard(&mesh).is_ok());
    }

    #[test]
    fn quadratic_is_exact() {
        let f = |x: &[f64]| 3.0 * x[0] * x[0] - x[0] * x[1] + 0.5 * x[1] * x[1] + x[0];
        let x = [0.3, -0.7];
        let grad = [6.0 * 0.3 + 0.7 + 1.0, -0.3 - 0.7];
        assert!(fd_check(&f, &grad, &x, 1, 1e-4) < 1e-10);
        let hess = [6.0, -1.0, -1.0, 1.0];
        assert!(fd_check(&f, &hess, &x, 2, 1e-3) < 1e-8);
    }

    #[test]
    fn sine_error_is_second_order() {
        let f = |x: &[f64]| (3.0 * x[0]).sin();
        let g = [3.0 * (3.0f64 * 0.4).cos()];
        let e1 = fd_check(&f, &g, &[0.4], 1, 1e-2);
        let e2 = fd_check(&f, &g, &[0.4], 1, 5e-3);
        assert!((e1 / e2 - 4.0).abs() < 0.05, "{e1} {e2}");
    }

    #[test]
    fn step_adjacent_point_is_flagged() {
        let f = |x: &[f64]| if x[0] > 0.5 { 1.0 } else { 0.0 };
        assert!(fd_check(&f, &[0.0], &[0.5 - 1e-5], 1, 1e-4) > 0.5);
    }

    #[test]
    fn kink_is_located() {
        let values: Vec<Vec<f64>> = (0..101)
            .map(|i| {
                let x = i as f64 / 100.0;
                vec![(x - 0.37).abs() + 0.1 * x * x, (3.0 * x).sin()]
            })
            .collect();
        assert_eq!(locate_kink(&values), Some(37));
    }
}
