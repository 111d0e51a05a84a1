use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};

use super::closest::closest_point;
use super::mesh::InterfaceMesh;
use super::GeometryError;

/// Queries closer than this to the curve are treated as on-curve.
pub const ON_CURVE_TOLERANCE: f64 = 1e-12;

/// Winding number with its spatial derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct WindingJet {
    pub value: f64,
    pub gradient: Vector2<f64>,
    pub hessian: Matrix2<f64>,
}

fn check(polyline: &InterfaceMesh, x: &[f64]) -> Result<(), GeometryError> {
    if polyline.dim() != 2 {
        return Err(GeometryError::Dimension(polyline.dim()));
    }
    if polyline.is_empty() {
        return Err(GeometryError::EmptyInterface);
    }
    if closest_point(polyline, x)?.distance < ON_CURVE_TOLERANCE {
        return Err(GeometryError::OnCurve);
    }
    Ok(())
}

fn segment_angle(a: &[f64], b: &[f64], x: &[f64]) -> f64 {
    let (ax, ay) = (a[0] - x[0], a[1] - x[1]);
    let (bx, by) = (b[0] - x[0], b[1] - x[1]);
    (ax * by - ay * bx).atan2(ax * bx + ay * by)
}

/// Sum of signed angles subtended by each segment at `x`, over `2π`.
/// Counter-clockwise closed curves give +1 inside.
pub fn generalized_winding_number(polyline: &InterfaceMesh, x: &[f64]) -> Result<f64, GeometryError> {
    check(polyline, x)?;
    let mut total = 0.0;
    for e in 0..polyline.element_count() {
        let idx = polyline.element(e);
        total += segment_angle(&polyline.vertex(idx[0]), &polyline.vertex(idx[1]), x);
    }
    Ok(total / (2.0 * PI))
}

// Polar angle of p - x: gradient (Y, -X)/r^2, harmonic Hessian.
fn polar_derivatives(p: &[f64], x: &[f64]) -> (Vector2<f64>, Matrix2<f64>) {
    let (px, py) = (p[0] - x[0], p[1] - x[1]);
    let r2 = px * px + py * py;
    let r4 = r2 * r2;
    let g = Vector2::new(py, -px) / r2;
    let off = (py * py - px * px) / r4;
    let h = Matrix2::new(2.0 * px * py / r4, off, off, -2.0 * px * py / r4);
    (g, h)
}

/// Winding number plus gradient and Hessian with respect to `x`.
pub fn winding_jet(polyline: &InterfaceMesh, x: &[f64]) -> Result<WindingJet, GeometryError> {
    let value = generalized_winding_number(polyline, x)?;
    let mut gradient = Vector2::zeros();
    let mut hessian = Matrix2::zeros();
    for e in 0..polyline.element_count() {
        let idx = polyline.element(e);
        let (ga, ha) = polar_derivatives(&polyline.vertex(idx[0]), x);
        let (gb, hb) = polar_derivatives(&polyline.vertex(idx[1]), x);
        gradient += gb - ga;
        hessian += hb - ha;
    }
    Ok(WindingJet {
        value,
        gradient: gradient / (2.0 * PI),
        hessian: hessian / (2.0 * PI),
    })
}
