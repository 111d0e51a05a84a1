//! Explicit interface geometry: closest points with analytic distance
//! derivatives, a spatial hash for threshold-clamped queries, and
//! generalized winding numbers of 2D polylines.

mod bench;
mod closest;
mod hash;
mod io;
mod mesh;
mod winding;

pub use bench::{hash_benchmark, random_segments, HashBenchReport};
pub use closest::{closest_point, ON_INTERFACE_TOLERANCE, distance_gradient, distance_hessian, ClosestFeature, FeatureKind};
pub use hash::{CellKey, HashQuery, SpatialHashGrid};
pub use io::{parse_mesh, read_mesh, write_mesh};
pub use mesh::InterfaceMesh;
pub use winding::{generalized_winding_number, winding_jet, WindingJet, ON_CURVE_TOLERANCE};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("empty interface")]
    EmptyInterface,
    #[error("on-interface gradient undefined")]
    OnInterface,
    #[error("on-curve winding undefined")]
    OnCurve,
    #[error("unsupported dimension {0}")]
    Dimension(usize),
    #[error("query has {got} coordinates, mesh is {expected}D")]
    QueryDimension { expected: usize, got: usize },
    #[error("query is not finite")]
    NonFiniteQuery,
    #[error("hash threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("mesh parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
