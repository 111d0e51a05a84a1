//! Built-in α-parameterized interface families.
//!
//! Each family maps α ∈ [0, 1] to an interface mesh whose vertices move
//! continuously with α. Families with α-dependent shapes also report their
//! occupancy (as a union of disjoint boxes) and a material region index.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::LiftError;
use crate::geometry::InterfaceMesh;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// Vertical crease `x = 0.25 + 0.5α` across the unit square.
    TranslatingCrease,
    /// Crease through the square's center at angle `απ`.
    RotatingCrease,
    /// Material interface point `x = 0.25 + 0.5α` on `[0, 1]`.
    #[serde(rename = "material-point-1d")]
    MaterialPoint1d,
    /// Bar `[0,1] x [0,0.25]` with a centered stiff block of half-width `0.1 + 0.2α`.
    TwoBlockBar,
    /// Soft bar with three stiff blocks on top whose width grows with α.
    Finger,
    /// α-independent interface given explicitly by the scene.
    Fixed,
}

pub const ALL_FAMILIES: [FamilyKind; 6] = [
    FamilyKind::TranslatingCrease,
    FamilyKind::RotatingCrease,
    FamilyKind::MaterialPoint1d,
    FamilyKind::TwoBlockBar,
    FamilyKind::Finger,
    FamilyKind::Fixed,
];

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::TranslatingCrease => "translating-crease",
            FamilyKind::RotatingCrease => "rotating-crease",
            FamilyKind::MaterialPoint1d => "material-point-1d",
            FamilyKind::TwoBlockBar => "two-block-bar",
            FamilyKind::Finger => "finger",
            FamilyKind::Fixed => "fixed",
        }
    }

    /// Spatial dimension of the family, `None` for `Fixed`.
    pub fn dim(self) -> Option<usize> {
        match self {
            FamilyKind::MaterialPoint1d => Some(1),
            FamilyKind::Fixed => None,
            _ => Some(2),
        }
    }

    /// Number of material regions distinguished by [`FamilyKind::region`].
    pub fn region_count(self) -> usize {
        match self {
            FamilyKind::TranslatingCrease | FamilyKind::RotatingCrease | FamilyKind::Fixed => 1,
            _ => 2,
        }
    }

    /// Material region index of `x` for parameter α.
    pub fn region(self, alpha: f64, x: &[f64]) -> usize {
        match self {
            FamilyKind::MaterialPoint1d => usize::from(x[0] >= split_1d(alpha)),
            FamilyKind::TwoBlockBar => {
                let half = block_half_width(alpha);
                usize::from((x[0] - 0.5).abs() < half)
            }
            FamilyKind::Finger => usize::from(x[1] >= FINGER_BAR_HEIGHT),
            _ => 0,
        }
    }

    /// Occupancy owned by the family, if its shape depends on α.
    pub fn occupancy(self, alpha: f64) -> Option<Vec<([f64; 2], [f64; 2])>> {
        match self {
            FamilyKind::Finger => {
                let mut boxes = vec![([0.0, 0.0], [1.0, FINGER_BAR_HEIGHT])];
                let w = finger_block_width(alpha);
                for c in FINGER_BLOCK_CENTERS {
                    boxes.push(([c - 0.5 * w, FINGER_BAR_HEIGHT], [c + 0.5 * w, FINGER_TOP]));
                }
                Some(boxes)
            }
            _ => None,
        }
    }

    /// Pairs of material points connected by actuation strings (finger only).
    pub fn strings(self, alpha: f64) -> Vec<([f64; 2], [f64; 2])> {
        match self {
            FamilyKind::Finger => {
                let w = finger_block_width(alpha);
                FINGER_BLOCK_CENTERS
                    .windows(2)
                    .map(|c| ([c[0] + 0.5 * w, FINGER_TOP], [c[1] - 0.5 * w, FINGER_TOP]))
                    .collect()
            }
            _ => vec![],
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = LiftError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_FAMILIES
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| LiftError::UnknownFamily(s.to_string()))
    }
}

pub const FINGER_BAR_HEIGHT: f64 = 0.1;
pub const FINGER_TOP: f64 = 0.2;
pub const FINGER_BLOCK_CENTERS: [f64; 3] = [0.2, 0.5, 0.8];

fn split_1d(alpha: f64) -> f64 {
    0.25 + 0.5 * alpha
}

fn block_half_width(alpha: f64) -> f64 {
    0.1 + 0.2 * alpha
}

pub fn finger_block_width(alpha: f64) -> f64 {
    0.08 + 0.12 * alpha
}

/// Interface mesh of a built-in family at α.
pub fn interface_family(kind: FamilyKind, alpha: f64) -> Result<InterfaceMesh, LiftError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(LiftError::AlphaOutOfRange(alpha));
    }
    let mesh = match kind {
        FamilyKind::TranslatingCrease => {
            let c = 0.25 + 0.5 * alpha;
            InterfaceMesh::polyline(&[[c, 0.0], [c, 1.0]])?
        }
        FamilyKind::RotatingCrease => {
            let theta = alpha * std::f64::consts::PI;
            let (dx, dy) = (0.75 * theta.cos(), 0.75 * theta.sin());
            InterfaceMesh::polyline(&[[0.5 - dx, 0.5 - dy], [0.5 + dx, 0.5 + dy]])?
        }
        FamilyKind::MaterialPoint1d => InterfaceMesh::points_1d(&[split_1d(alpha)])?,
        FamilyKind::TwoBlockBar => {
            let h = block_half_width(alpha);
            InterfaceMesh::new(
                2,
                vec![
                    vec![0.5 - h, 0.0],
                    vec![0.5 - h, 0.25],
                    vec![0.5 + h, 0.0],
                    vec![0.5 + h, 0.25],
                ],
                vec![vec![0, 1], vec![2, 3]],
            )?
        }
        FamilyKind::Finger => {
            let w = finger_block_width(alpha);
            let mut verts = vec![];
            let mut segs = vec![];
            for (i, c) in FINGER_BLOCK_CENTERS.iter().enumerate() {
                verts.push(vec![c - 0.5 * w, FINGER_BAR_HEIGHT]);
                verts.push(vec![c + 0.5 * w, FINGER_BAR_HEIGHT]);
                segs.push(vec![2 * i, 2 * i + 1]);
            }
            InterfaceMesh::new(2, verts, segs)?
        }
        FamilyKind::Fixed => return Err(LiftError::NoGenerator),
    };
    Ok(mesh)
}

/// Best α on a grid of `samples` points whose family mesh matches `mesh`
/// vertexwise, with the maximum vertex distance.
pub fn fit_alpha(kind: FamilyKind, mesh: &InterfaceMesh, samples: usize) -> Option<(f64, f64)> {
    let samples = samples.max(2);
    let mut best: Option<(f64, f64)> = None;
    for i in 0..samples {
        let alpha = i as f64 / (samples - 1) as f64;
        let Ok(candidate) = interface_family(kind, alpha) else {
            return None;
        };
        if let Some(dist) = candidate.vertex_distance(mesh) {
            if best.map_or(true, |(_, b)| dist < b) {
                best = Some((alpha, dist));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn translating_crease_endpoints() {
        let m = interface_family(FamilyKind::TranslatingCrease, 0.0).unwrap();
        assert_eq!(m.vertex(0), vec![0.25, 0.0]);
        assert_eq!(m.vertex(1), vec![0.25, 1.0]);
        let m = interface_family(FamilyKind::TranslatingCrease, 0.5).unwrap();
        assert_eq!(m.vertex(0)[0], 0.5);
        assert_eq!(m.vertex(1)[0], 0.5);
    }

    #[test]
    fn rotating_crease_quarter_turn() {
        let a = interface_family(FamilyKind::RotatingCrease, 0.0).unwrap();
        let b = interface_family(FamilyKind::RotatingCrease, 0.5).unwrap();
        let dir = |m: &InterfaceMesh| {
            let (p, q) = (m.vertex(0), m.vertex(1));
            [q[0] - p[0], q[1] - p[1]]
        };
        let (da, db) = (dir(&a), dir(&b));
        assert_relative_eq!(da[0] * db[0] + da[1] * db[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(db[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn material_point_and_regions() {
        let m = interface_family(FamilyKind::MaterialPoint1d, 0.5).unwrap();
        assert_eq!(m.vertex(0), vec![0.5]);
        assert_eq!(FamilyKind::MaterialPoint1d.region(0.5, &[0.4]), 0);
        assert_eq!(FamilyKind::MaterialPoint1d.region(0.5, &[0.6]), 1);
        assert_eq!(FamilyKind::TwoBlockBar.region(0.0, &[0.5, 0.1]), 1);
        assert_eq!(FamilyKind::TwoBlockBar.region(0.0, &[0.1, 0.1]), 0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            interface_family(FamilyKind::TranslatingCrease, 1.5),
            Err(LiftError::AlphaOutOfRange(_))
        ));
        assert!(matches!("spiral".parse::<FamilyKind>(), Err(LiftError::UnknownFamily(_))));
        assert_eq!("finger".parse::<FamilyKind>().unwrap(), FamilyKind::Finger);
    }

    #[test]
    fn families_are_continuous_in_alpha() {
        for kind in ALL_FAMILIES.into_iter().filter(|k| *k != FamilyKind::Fixed) {
            for i in 0..100 {
                let a = i as f64 / 100.0;
                let m0 = interface_family(kind, a).unwrap();
                let m1 = interface_family(kind, a + 0.01).unwrap();
                let jump = m0.vertex_distance(&m1).unwrap();
                assert!(jump < 0.03, "{kind} jumps {jump} at {a}");
            }
        }
    }

    #[test]
    fn fit_recovers_alpha() {
        let m = interface_family(FamilyKind::TranslatingCrease, 0.3).unwrap();
        let (alpha, dist) = fit_alpha(FamilyKind::TranslatingCrease, &m, 101).unwrap();
        assert_relative_eq!(alpha, 0.3, epsilon = 1e-12);
        assert!(dist < 1e-12);
    }

    #[test]
    fn finger_geometry() {
        let boxes = FamilyKind::Finger.occupancy(1.0).unwrap();
        assert_eq!(boxes.len(), 4);
        let strings = FamilyKind::Finger.strings(0.0);
        assert_eq!(strings.len(), 2);
        assert_relative_eq!(strings[0].1[0] - strings[0].0[0], 0.3 - 0.08, epsilon = 1e-12);
    }
}
