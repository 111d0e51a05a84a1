//! The lifting map `L(x) = (x, H(x))`, where `H` is the smoothly clamped
//! unsigned distance to an explicit interface, optionally extended with a
//! winding-number coordinate for value discontinuities across a cut.

mod clamp;
mod family;
mod map;

pub use clamp::{smooth_clamp, Clamped};
pub use family::{
    finger_block_width, fit_alpha, interface_family, FamilyKind, ALL_FAMILIES, FINGER_BAR_HEIGHT,
    FINGER_BLOCK_CENTERS, FINGER_TOP,
};
pub use map::{combined_lift, HeightMode, LiftJet, LiftingMap};

use thiserror::Error;

use crate::geometry::GeometryError;

/// Default clamp threshold for 2D scenes.
pub const DEFAULT_THRESHOLD_2D: f64 = 1.0 / 8.0;
/// Default clamp threshold for 3D scenes.
pub const DEFAULT_THRESHOLD_3D: f64 = 1.0 / 16.0;

#[derive(Debug, Error)]
pub enum LiftError {
    #[error("clamp threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("negative distance {0}")]
    NegativeDistance(f64),
    #[error("point lies on the interface; lift derivatives undefined")]
    OnInterface,
    #[error("point has {got} coordinates, lift is {expected}D")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite point")]
    NonFinite,
    #[error("combined lift requires 2D crease and cut polylines")]
    CombinedNeeds2d,
    #[error("unknown interface family `{0}`")]
    UnknownFamily(String),
    #[error("alpha {0} outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("fixed family has no generator")]
    NoGenerator,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
