use nalgebra::Vector3;

use super::GeometryError;

/// Explicit interface mesh: points (1D), a polyline (2D) or a triangle soup (3D).
///
/// Coordinates are stored padded to three components so the closest-point
/// kernels are shared across dimensions; unused components are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceMesh {
    dim: usize,
    vertices: Vec<Vector3<f64>>,
    elements: Vec<[usize; 3]>,
}

pub(crate) fn pad(x: &[f64]) -> Vector3<f64> {
    let mut v = Vector3::zeros();
    for (i, c) in x.iter().take(3).enumerate() {
        v[i] = *c;
    }
    v
}

impl InterfaceMesh {
    /// Build and validate a mesh. `elements` entries use the first `dim`
    /// slots; the rest are ignored.
    pub fn new(
        dim: usize,
        vertices: Vec<Vec<f64>>,
        elements: Vec<Vec<usize>>,
    ) -> Result<Self, GeometryError> {
        if !(1..=3).contains(&dim) {
            return Err(GeometryError::Dimension(dim));
        }
        let mut verts = Vec::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if v.len() != dim {
                return Err(GeometryError::InvalidMesh(format!(
                    "vertex {i} has {} coordinates, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(GeometryError::InvalidMesh(format!(
                    "vertex {i} is not finite"
                )));
            }
            verts.push(pad(v));
        }
        let mut elems = Vec::with_capacity(elements.len());
        for (e, idx) in elements.iter().enumerate() {
            if idx.len() != dim {
                return Err(GeometryError::InvalidMesh(format!(
                    "element {e} has {} indices, expected {dim}",
                    idx.len()
                )));
            }
            let mut slot = [0usize; 3];
            for (k, &i) in idx.iter().enumerate() {
                if i >= verts.len() {
                    return Err(GeometryError::InvalidMesh(format!(
                        "element {e} references vertex {i} of {}",
                        verts.len()
                    )));
                }
                slot[k] = i;
            }
            elems.push(slot);
        }
        let mesh = InterfaceMesh {
            dim,
            vertices: verts,
            elements: elems,
        };
        for e in 0..mesh.elements.len() {
            mesh.check_element(e)?;
        }
        Ok(mesh)
    }

    /// Isolated interface points on the line.
    pub fn points_1d(points: &[f64]) -> Result<Self, GeometryError> {
        Self::new(
            1,
            points.iter().map(|p| vec![*p]).collect(),
            (0..points.len()).map(|i| vec![i]).collect(),
        )
    }

    /// Open polyline through `points` in order.
    pub fn polyline(points: &[[f64; 2]]) -> Result<Self, GeometryError> {
        let n = points.len();
        let segs = (1..n).map(|i| vec![i - 1, i]).collect();
        Self::new(2, points.iter().map(|p| p.to_vec()).collect(), segs)
    }

    /// Closed polyline; the last vertex connects back to the first.
    pub fn closed_polyline(points: &[[f64; 2]]) -> Result<Self, GeometryError> {
        let n = points.len();
        let segs = (0..n).map(|i| vec![i, (i + 1) % n]).collect();
        Self::new(2, points.iter().map(|p| p.to_vec()).collect(), segs)
    }

    pub fn triangles(vertices: &[[f64; 3]], faces: &[[usize; 3]]) -> Result<Self, GeometryError> {
        Self::new(
            3,
            vertices.iter().map(|v| v.to_vec()).collect(),
            faces.iter().map(|f| f.to_vec()).collect(),
        )
    }

    fn check_element(&self, e: usize) -> Result<(), GeometryError> {
        let idx = self.elements[e];
        match self.dim {
            2 => {
                let [a, b, _] = idx;
                if (self.vertices[a] - self.vertices[b]).norm() == 0.0 {
                    return Err(GeometryError::InvalidMesh(format!(
                        "segment {e} has zero length"
                    )));
                }
            }
            3 => {
                let [a, b, c] = idx;
                let (a, b, c) = (self.vertices[a], self.vertices[b], self.vertices[c]);
                if (b - a).cross(&(c - a)).norm() == 0.0 {
                    return Err(GeometryError::InvalidMesh(format!(
                        "triangle {e} is degenerate"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Vertex `i` with its `dim` meaningful coordinates.
    pub fn vertex(&self, i: usize) -> Vec<f64> {
        self.vertices[i].as_slice()[..self.dim].to_vec()
    }

    pub fn vertices(&self) -> Vec<Vec<f64>> {
        (0..self.vertices.len()).map(|i| self.vertex(i)).collect()
    }

    /// Indices of element `e` (length `dim`).
    pub fn element(&self, e: usize) -> &[usize] {
        &self.elements[e][..self.dim]
    }

    pub(crate) fn padded_vertex(&self, i: usize) -> &Vector3<f64> {
        &self.vertices[i]
    }

    /// Axis-aligned bounds of element `e` as (min, max), padded coordinates.
    pub(crate) fn element_bounds(&self, e: usize) -> (Vector3<f64>, Vector3<f64>) {
        let idx = self.element(e);
        let mut lo = self.vertices[idx[0]];
        let mut hi = lo;
        for &i in &idx[1..] {
            lo = lo.inf(&self.vertices[i]);
            hi = hi.sup(&self.vertices[i]);
        }
        (lo, hi)
    }

    /// Maximum vertex displacement between two meshes of identical topology,
    /// or `None` when the topologies differ.
    pub fn vertex_distance(&self, other: &InterfaceMesh) -> Option<f64> {
        if self.dim != other.dim
            || self.elements != other.elements
            || self.vertices.len() != other.vertices.len()
        {
            return None;
        }
        Some(
            self.vertices
                .iter()
                .zip(&other.vertices)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
        )
    }
}
