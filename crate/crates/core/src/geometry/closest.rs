use nalgebra::{DMatrix, DVector, Vector3};

use super::mesh::{pad, InterfaceMesh};
use super::GeometryError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureKind {
    Vertex,
    EdgeInterior,
    FaceInterior,
}

/// Closest point on an interface mesh to a query.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosestFeature {
    pub element: usize,
    pub kind: FeatureKind,
    /// Closest point, `dim` coordinates.
    pub point: Vec<f64>,
    pub distance: f64,
    /// Unit edge direction, present for edge-interior features.
    pub tangent: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct RawClosest {
    pub kind: FeatureKind,
    pub point: Vector3<f64>,
    pub tangent: Option<Vector3<f64>>,
    pub dist2: f64,
}

fn segment_closest(a: &Vector3<f64>, b: &Vector3<f64>, x: &Vector3<f64>) -> RawClosest {
    let ab = b - a;
    let t = (x - a).dot(&ab) / ab.norm_squared();
    let (kind, point, tangent) = if t <= 0.0 {
        (FeatureKind::Vertex, *a, None)
    } else if t >= 1.0 {
        (FeatureKind::Vertex, *b, None)
    } else {
        (FeatureKind::EdgeInterior, a + ab * t, Some(ab.normalize()))
    };
    RawClosest {
        kind,
        point,
        tangent,
        dist2: (x - point).norm_squared(),
    }
}

fn edge(a: &Vector3<f64>, b: &Vector3<f64>, t: f64) -> (FeatureKind, Vector3<f64>, Option<Vector3<f64>>) {
    let ab = b - a;
    (FeatureKind::EdgeInterior, a + ab * t, Some(ab.normalize()))
}

// Region classification after Ericson, "Real-Time Collision Detection", 5.1.5.
fn triangle_closest(
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    c: &Vector3<f64>,
    p: &Vector3<f64>,
) -> RawClosest {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    let (kind, point, tangent) = 'found: {
        if d1 <= 0.0 && d2 <= 0.0 {
            break 'found (FeatureKind::Vertex, *a, None);
        }
        let bp = p - b;
        let d3 = ab.dot(&bp);
        let d4 = ac.dot(&bp);
        if d3 >= 0.0 && d4 <= d3 {
            break 'found (FeatureKind::Vertex, *b, None);
        }
        let vc = d1 * d4 - d3 * d2;
        if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
            break 'found edge(a, b, d1 / (d1 - d3));
        }
        let cp = p - c;
        let d5 = ab.dot(&cp);
        let d6 = ac.dot(&cp);
        if d6 >= 0.0 && d5 <= d6 {
            break 'found (FeatureKind::Vertex, *c, None);
        }
        let vb = d5 * d2 - d1 * d6;
        if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
            break 'found edge(a, c, d2 / (d2 - d6));
        }
        let va = d3 * d6 - d5 * d4;
        if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
            break 'found edge(b, c, (d4 - d3) / ((d4 - d3) + (d5 - d6)));
        }
        let denom = 1.0 / (va + vb + vc);
        let v = vb * denom;
        let w = vc * denom;
        (FeatureKind::FaceInterior, a + ab * v + ac * w, None)
    };
    RawClosest {
        kind,
        point,
        tangent,
        dist2: (p - point).norm_squared(),
    }
}

pub(crate) fn element_closest(mesh: &InterfaceMesh, e: usize, x: &Vector3<f64>) -> RawClosest {
    let idx = mesh.element(e);
    match mesh.dim() {
        1 => {
            let p = *mesh.padded_vertex(idx[0]);
            RawClosest {
                kind: FeatureKind::Vertex,
                point: p,
                tangent: None,
                dist2: (x - p).norm_squared(),
            }
        }
        2 => segment_closest(mesh.padded_vertex(idx[0]), mesh.padded_vertex(idx[1]), x),
        _ => triangle_closest(
            mesh.padded_vertex(idx[0]),
            mesh.padded_vertex(idx[1]),
            mesh.padded_vertex(idx[2]),
            x,
        ),
    }
}

/// Scan `candidates` in the given order; strictly smaller distance wins, so
/// ascending candidate order yields lowest-index tie breaking.
pub(crate) fn closest_among<I: IntoIterator<Item = usize>>(
    mesh: &InterfaceMesh,
    x: &Vector3<f64>,
    candidates: I,
) -> Option<(usize, RawClosest)> {
    let mut best: Option<(usize, RawClosest)> = None;
    for e in candidates {
        let c = element_closest(mesh, e, x);
        match &best {
            Some((_, b)) if c.dist2 >= b.dist2 => {}
            _ => best = Some((e, c)),
        }
    }
    best
}

/// Distances below this snap to zero: the query is on the interface.
pub const ON_INTERFACE_TOLERANCE: f64 = 1e-12;

pub(crate) fn finish(mesh: &InterfaceMesh, element: usize, raw: RawClosest) -> ClosestFeature {
    let d = mesh.dim();
    let distance = raw.dist2.sqrt();
    ClosestFeature {
        element,
        kind: raw.kind,
        point: raw.point.as_slice()[..d].to_vec(),
        distance: if distance < ON_INTERFACE_TOLERANCE { 0.0 } else { distance },
        tangent: raw.tangent.map(|t| t.as_slice()[..d].to_vec()),
    }
}

pub(crate) fn check_query(mesh: &InterfaceMesh, x: &[f64]) -> Result<Vector3<f64>, GeometryError> {
    if x.len() != mesh.dim() {
        return Err(GeometryError::QueryDimension {
            expected: mesh.dim(),
            got: x.len(),
        });
    }
    if x.iter().any(|c| !c.is_finite()) {
        return Err(GeometryError::NonFiniteQuery);
    }
    Ok(pad(x))
}

/// Global closest point by exhaustive scan over all elements.
pub fn closest_point(mesh: &InterfaceMesh, x: &[f64]) -> Result<ClosestFeature, GeometryError> {
    if mesh.is_empty() {
        return Err(GeometryError::EmptyInterface);
    }
    let xp = check_query(mesh, x)?;
    let (e, raw) = closest_among(mesh, &xp, 0..mesh.element_count()).expect("non-empty mesh");
    Ok(finish(mesh, e, raw))
}

/// Gradient of the unsigned distance, `(x - p) / |x - p|`.
pub fn distance_gradient(feature: &ClosestFeature, x: &[f64]) -> Result<DVector<f64>, GeometryError> {
    if feature.distance <= 0.0 {
        return Err(GeometryError::OnInterface);
    }
    let r = DVector::from_iterator(
        x.len(),
        x.iter().zip(&feature.point).map(|(a, b)| a - b),
    );
    let n = r.norm();
    if n == 0.0 {
        return Err(GeometryError::OnInterface);
    }
    Ok(r / n)
}

/// Hessian of the unsigned distance at `x`.
///
/// Vertex features give the radial field `(I - r r^T) / D`; edge features in
/// 3D additionally drop the edge direction. Planar features (2D edges, 3D
/// faces) have zero curvature.
pub fn distance_hessian(feature: &ClosestFeature, x: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
    let r = distance_gradient(feature, x)?;
    let d = x.len();
    let dist = feature.distance;
    let m = match feature.kind {
        FeatureKind::Vertex => (DMatrix::identity(d, d) - &r * r.transpose()) / dist,
        FeatureKind::EdgeInterior if d == 3 => {
            let t = DVector::from_column_slice(feature.tangent.as_deref().expect("edge tangent"));
            (DMatrix::identity(d, d) - &r * r.transpose() - &t * t.transpose()) / dist
        }
        FeatureKind::EdgeInterior | FeatureKind::FaceInterior => DMatrix::zeros(d, d),
    };
    Ok(m)
}
