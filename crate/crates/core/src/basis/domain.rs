//! Domain occupancy, material weights and the α-parameterized scene family
//! the basis is trained over.

use serde::{Deserialize, Serialize};

use super::BasisError;
use crate::geometry::{closest_point, InterfaceMesh};
use crate::lifting::{interface_family, FamilyKind, HeightMode, LiftingMap};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Shape {
    Box { min: Vec<f64>, max: Vec<f64> },
    Polygon { vertices: Vec<[f64; 2]> },
}

impl Shape {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Box { min, .. } => min.len(),
            Shape::Polygon { .. } => 2,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Shape::Box { min, max } => x.iter().zip(min.iter().zip(max)).all(|(v, (a, b))| *v >= *a && *v <= *b),
            Shape::Polygon { vertices } => {
                // even-odd crossing test
                let mut inside = false;
                let n = vertices.len();
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + n - 1) % n]);
                    if (a[1] > x[1]) != (b[1] > x[1]) {
                        let t = (x[1] - a[1]) / (b[1] - a[1]);
                        if x[0] < a[0] + t * (b[0] - a[0]) {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
        }
    }

    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Shape::Box { min, max } => (min.clone(), max.clone()),
            Shape::Polygon { vertices } => {
                let mut lo = vec![f64::INFINITY; 2];
                let mut hi = vec![f64::NEG_INFINITY; 2];
                for v in vertices {
                    for c in 0..2 {
                        lo[c] = lo[c].min(v[c]);
                        hi[c] = hi[c].max(v[c]);
                    }
                }
                (lo, hi)
            }
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Shape::Box { min, max } => min.iter().zip(max).map(|(a, b)| b - a).product(),
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                let twice: f64 = (0..n)
                    .map(|i| {
                        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                        a[0] * b[1] - b[0] * a[1]
                    })
                    .sum();
                0.5 * twice.abs()
            }
        }
    }

    fn validate(&self) -> Result<(), BasisError> {
        let ok = match self {
            Shape::Box { min, max } => {
                !min.is_empty() && min.len() == max.len() && min.iter().zip(max).all(|(a, b)| a < b)
            }
            Shape::Polygon { vertices } => vertices.len() >= 3 && self.volume() > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(BasisError::InvalidDomain(format!("degenerate shape {self:?}")))
        }
    }
}

/// Union of shapes; volumes add, so the shapes are assumed not to overlap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub shapes: Vec<Shape>,
}

impl Domain {
    pub fn new(shapes: Vec<Shape>) -> Result<Self, BasisError> {
        if shapes.is_empty() {
            return Err(BasisError::InvalidDomain("domain has no shapes".into()));
        }
        let dim = shapes[0].dim();
        for s in &shapes {
            s.validate()?;
            if s.dim() != dim {
                return Err(BasisError::InvalidDomain("mixed shape dimensions".into()));
            }
        }
        Ok(Self { shapes })
    }

    pub fn unit_box(dim: usize) -> Self {
        Self {
            shapes: vec![Shape::Box {
                min: vec![0.0; dim],
                max: vec![1.0; dim],
            }],
        }
    }

    pub fn dim(&self) -> usize {
        self.shapes[0].dim()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.shapes.iter().any(|s| s.contains(x))
    }

    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let (mut lo, mut hi) = self.shapes[0].bounds();
        for s in &self.shapes[1..] {
            let (a, b) = s.bounds();
            for c in 0..lo.len() {
                lo[c] = lo[c].min(a[c]);
                hi[c] = hi[c].max(b[c]);
            }
        }
        (lo, hi)
    }

    pub fn volume(&self) -> f64 {
        self.shapes.iter().map(Shape::volume).sum()
    }
}

/// Piecewise-constant stiffness weight.
///
/// Families with α-dependent regions index `weights` by their region number;
/// otherwise `weights[0]` is the background and `weights[i + 1]` applies
/// inside `regions[i]` (first match wins).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialField {
    pub weights: Vec<f64>,
    #[serde(default)]
    pub regions: Vec<Shape>,
}

impl MaterialField {
    pub fn uniform(w: f64) -> Self {
        Self {
            weights: vec![w],
            regions: vec![],
        }
    }

    pub fn weight(&self, family: FamilyKind, alpha: f64, x: &[f64]) -> f64 {
        if family.region_count() > 1 {
            return self.weights[family.region(alpha, x)];
        }
        self.regions
            .iter()
            .position(|r| r.contains(x))
            .map_or(self.weights[0], |i| self.weights[i + 1])
    }

    fn validate(&self, family: FamilyKind) -> Result<(), BasisError> {
        if let Some(w) = self.weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(BasisError::NonPositiveWeight(*w));
        }
        let expected = if family.region_count() > 1 {
            family.region_count()
        } else {
            self.regions.len() + 1
        };
        if self.weights.len() != expected {
            return Err(BasisError::InvalidDomain(format!(
                "expected {expected} material weights, got {}",
                self.weights.len()
            )));
        }
        Ok(())
    }
}

/// Everything needed to build `Ω^α`, `Γ^α`, `w` and the lift for any α.
#[derive(Clone, Debug)]
pub struct ShapeFamily {
    pub domain: Domain,
    pub family: FamilyKind,
    /// Explicit interface; required for `Fixed`, and overrides the family
    /// generator otherwise (e.g. after an interactive edit).
    pub interface: Option<InterfaceMesh>,
    pub cut: Option<InterfaceMesh>,
    pub threshold: f64,
    pub materials: MaterialField,
    pub alpha_range: [f64; 2],
    pub height: HeightMode,
}

impl ShapeFamily {
    pub fn new(
        domain: Domain,
        family: FamilyKind,
        interface: Option<InterfaceMesh>,
        threshold: f64,
        materials: MaterialField,
        alpha_range: [f64; 2],
    ) -> Result<Self, BasisError> {
        let out = Self {
            domain,
            family,
            interface,
            cut: None,
            threshold,
            materials,
            alpha_range,
            height: HeightMode::ClampedDistance,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn with_cut(mut self, cut: InterfaceMesh) -> Result<Self, BasisError> {
        self.cut = Some(cut);
        self.validate()?;
        Ok(self)
    }

    /// Ablation: replace the lifted height by a constant.
    pub fn with_height(mut self, height: HeightMode) -> Self {
        self.height = height;
        self
    }

    /// Same family with the interface pinned to `mesh`.
    pub fn with_interface(&self, mesh: InterfaceMesh) -> Self {
        Self {
            interface: Some(mesh),
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<(), BasisError> {
        let [a, b] = self.alpha_range;
        if !(a <= b) || !a.is_finite() || !b.is_finite() {
            return Err(BasisError::InvalidDomain(format!("empty α range [{a}, {b}]")));
        }
        if self.family == FamilyKind::Fixed && self.interface.is_none() {
            return Err(BasisError::InvalidDomain("fixed family needs an explicit interface".into()));
        }
        if let Some(d) = self.family.dim() {
            if d != self.domain.dim() {
                return Err(BasisError::InvalidDomain(format!(
                    "family {} is {d}D but the domain is {}D",
                    self.family,
                    self.domain.dim()
                )));
            }
        }
        if self.cut.is_some() && self.dim() != 2 {
            return Err(BasisError::InvalidDomain("cuts are supported in 2D only".into()));
        }
        self.materials.validate(self.family)?;
        self.lifting_map(a)?;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Lifted coordinates beyond `x` (1, or 2 with a cut).
    pub fn extra_dims(&self) -> usize {
        1 + usize::from(self.cut.is_some())
    }

    pub fn contains_alpha(&self, alpha: f64) -> bool {
        alpha >= self.alpha_range[0] && alpha <= self.alpha_range[1]
    }

    pub fn interface_at(&self, alpha: f64) -> Result<InterfaceMesh, BasisError> {
        match &self.interface {
            Some(mesh) => Ok(mesh.clone()),
            None => Ok(interface_family(self.family, alpha)?),
        }
    }

    pub fn lifting_map(&self, alpha: f64) -> Result<LiftingMap, BasisError> {
        let crease = self.interface_at(alpha)?;
        let map = match &self.cut {
            Some(cut) => LiftingMap::combined(crease, cut.clone(), self.threshold)?,
            None => LiftingMap::new(crease, self.threshold)?,
        };
        Ok(map.with_height(self.height))
    }

    pub fn domain_at(&self, alpha: f64) -> Domain {
        match self.family.occupancy(alpha) {
            Some(boxes) => Domain {
                shapes: boxes
                    .into_iter()
                    .map(|(min, max)| Shape::Box {
                        min: min.to_vec(),
                        max: max.to_vec(),
                    })
                    .collect(),
            },
            None => self.domain.clone(),
        }
    }

    pub fn weight(&self, alpha: f64, x: &[f64]) -> f64 {
        self.materials.weight(self.family, alpha, x)
    }

    /// Distance to the nearest interface or cut; used to keep samples off Γ.
    pub fn interface_clearance(&self, map: &LiftingMap, x: &[f64]) -> Result<f64, BasisError> {
        let mut d = map.interface_distance(x)?;
        if let Some(cut) = &self.cut {
            d = d.min(closest_point(cut, x)?.distance);
        }
        Ok(d)
    }

    /// Distance to the nearest end of an open cut, infinite without a cut.
    pub fn cut_tip_distance(&self, x: &[f64]) -> f64 {
        let Some(cut) = &self.cut else { return f64::INFINITY };
        [0, cut.vertex_count() - 1]
            .iter()
            .map(|&i| cut.vertex(i).iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygon_area_and_containment() {
        let u = Shape::Polygon {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.7, 1.0], [0.7, 0.3], [0.3, 0.3], [0.3, 1.0], [0.0, 1.0]],
        };
        assert!((u.volume() - (1.0 - 0.4 * 0.7)).abs() < 1e-12);
        assert!(u.contains(&[0.1, 0.9]));
        assert!(!u.contains(&[0.5, 0.9]));
        assert!(u.contains(&[0.5, 0.1]));
    }

    #[test]
    fn material_regions() {
        let m = MaterialField {
            weights: vec![1.0, 100.0],
            regions: vec![Shape::Box {
                min: vec![0.0, 0.0],
                max: vec![0.5, 1.0],
            }],
        };
        assert_eq!(m.weight(FamilyKind::Fixed, 0.0, &[0.2, 0.5]), 100.0);
        assert_eq!(m.weight(FamilyKind::Fixed, 0.0, &[0.8, 0.5]), 1.0);
        let bar = MaterialField {
            weights: vec![1.0, 4.0],
            regions: vec![],
        };
        assert_eq!(bar.weight(FamilyKind::MaterialPoint1d, 0.5, &[0.7]), 4.0);
    }

    #[test]
    fn family_validation() {
        let fixed = ShapeFamily::new(
            Domain::unit_box(2),
            FamilyKind::Fixed,
            None,
            0.125,
            MaterialField::uniform(1.0),
            [0.0, 0.0],
        );
        assert!(matches!(fixed, Err(BasisError::InvalidDomain(_))));
        let wrong_dim = ShapeFamily::new(
            Domain::unit_box(2),
            FamilyKind::MaterialPoint1d,
            None,
            0.125,
            MaterialField {
                weights: vec![1.0, 4.0],
                regions: vec![],
            },
            [0.0, 1.0],
        );
        assert!(wrong_dim.is_err());
        let bad_weight = ShapeFamily::new(
            Domain::unit_box(1),
            FamilyKind::MaterialPoint1d,
            None,
            0.125,
            MaterialField {
                weights: vec![1.0, 0.0],
                regions: vec![],
            },
            [0.0, 1.0],
        );
        assert!(matches!(bad_weight, Err(BasisError::NonPositiveWeight(_))));
    }

    #[test]
    fn finger_domain_follows_alpha() {
        let fam = ShapeFamily::new(
            Domain::unit_box(2),
            FamilyKind::Finger,
            None,
            0.05,
            MaterialField {
                weights: vec![1.0, 10.0],
                regions: vec![],
            },
            [0.0, 1.0],
        )
        .unwrap();
        let (a, b) = (fam.domain_at(0.0).volume(), fam.domain_at(1.0).volume());
        assert!(b > a);
        assert!((a - (0.1 + 3.0 * 0.08 * 0.1)).abs() < 1e-12);
    }
}
