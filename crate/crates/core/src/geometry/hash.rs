//! Uniform spatial hash for distance queries clamped at a threshold `s`.
//!
//! Each element is registered in every cell overlapped by its bounding box
//! inflated by `s`. A point closer than `s` to an element lies inside that
//! inflated box, so the cell containing the query already lists every element
//! that can matter; farther elements only feed the plateau of the clamp.

use std::collections::HashMap;

use super::closest::{check_query, closest_among, finish, ClosestFeature};
use super::mesh::InterfaceMesh;
use super::GeometryError;

pub type CellKey = [i64; 3];

#[derive(Clone, Debug)]
pub struct SpatialHashGrid {
    cell_size: f64,
    dim: usize,
    cells: HashMap<CellKey, Vec<u32>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Result of a clamped query.
#[derive(Clone, Debug, PartialEq)]
pub enum HashQuery {
    Near(ClosestFeature),
    /// No element within the threshold.
    Far,
}

impl HashQuery {
    pub fn near(&self) -> Option<&ClosestFeature> {
        match self {
            HashQuery::Near(f) => Some(f),
            HashQuery::Far => None,
        }
    }
}

impl SpatialHashGrid {
    pub fn build(mesh: &InterfaceMesh, s: f64) -> Result<Self, GeometryError> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(GeometryError::InvalidThreshold(s));
        }
        if mesh.is_empty() {
            return Err(GeometryError::EmptyInterface);
        }
        let dim = mesh.dim();
        let mut cells: HashMap<CellKey, Vec<u32>> = HashMap::new();
        let mut lower = vec![f64::INFINITY; dim];
        let mut upper = vec![f64::NEG_INFINITY; dim];
        for e in 0..mesh.element_count() {
            let (lo, hi) = mesh.element_bounds(e);
            let mut from = [0i64; 3];
            let mut to = [0i64; 3];
            for a in 0..dim {
                lower[a] = lower[a].min(lo[a] - s);
                upper[a] = upper[a].max(hi[a] + s);
                from[a] = ((lo[a] - s) / s).floor() as i64;
                to[a] = ((hi[a] + s) / s).floor() as i64;
            }
            for i in from[0]..=to[0] {
                for j in from[1]..=to[1] {
                    for k in from[2]..=to[2] {
                        cells.entry([i, j, k]).or_default().push(e as u32);
                    }
                }
            }
        }
        Ok(SpatialHashGrid {
            cell_size: s,
            dim,
            cells,
            lower,
            upper,
        })
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn key(&self, x: &[f64]) -> CellKey {
        let mut key = [0i64; 3];
        for (a, c) in x.iter().take(self.dim).enumerate() {
            key[a] = (c / self.cell_size).floor() as i64;
        }
        key
    }

    /// Elements registered in the cell containing `x`, ascending.
    pub fn candidates(&self, x: &[f64]) -> &[u32] {
        self.cells.get(&self.key(x)).map_or(&[], Vec::as_slice)
    }

    pub fn cell(&self, key: &CellKey) -> Option<&[u32]> {
        self.cells.get(key).map(Vec::as_slice)
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Total number of (cell, element) registrations.
    pub fn entry_count(&self) -> usize {
        self.cells.values().map(Vec::len).sum()
    }

    /// Bounds of the inflated element boxes.
    pub fn extents(&self) -> (&[f64], &[f64]) {
        (&self.lower, &self.upper)
    }

    /// Closest feature if it lies strictly closer than the threshold, else `Far`.
    pub fn clamped_query(&self, mesh: &InterfaceMesh, x: &[f64]) -> Result<HashQuery, GeometryError> {
        let xp = check_query(mesh, x)?;
        let cands = self.candidates(x);
        if cands.is_empty() {
            return Ok(HashQuery::Far);
        }
        let (e, raw) = closest_among(mesh, &xp, cands.iter().map(|&e| e as usize)).expect("non-empty");
        let f = finish(mesh, e, raw);
        if f.distance < self.cell_size {
            Ok(HashQuery::Near(f))
        } else {
            Ok(HashQuery::Far)
        }
    }
}
