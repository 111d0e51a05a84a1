//! TOML scene schema.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SceneError;
use crate::basis::{Domain, MaterialField, Shape, ShapeFamily, TrainConfig};
use crate::field::{FieldNetwork, NetworkSpec};
use crate::geometry::InterfaceMesh;
use crate::lifting::{FamilyKind, HeightMode};
use crate::sim::{Handle, IntegratorParams, Material, OptimizeConfig, SimSetup};

pub const SCENE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub version: u32,
    #[serde(default)]
    pub name: String,
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
    /// Union of shapes making up `Ω`.
    pub domain: Vec<Shape>,
    pub lift: LiftSection,
    pub material: MaterialSection,
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub training: TrainConfig,
    #[serde(default)]
    pub integrator: IntegratorParams,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub handles: Vec<Handle>,
    #[serde(default)]
    pub optimize: OptimizeConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftSection {
    pub family: FamilyKind,
    pub alpha_range: [f64; 2],
    /// Initial α.
    pub alpha: f64,
    /// Clamp threshold `s`.
    pub threshold: f64,
    #[serde(default = "default_height")]
    pub height: HeightMode,
    /// Interface vertices for the `fixed` family (polyline in 2D, points in 1D).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interface: Option<Vec<Vec<f64>>>,
    /// Close the fixed polyline into a loop.
    #[serde(default)]
    pub closed: bool,
    /// Open polyline across which values jump.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut: Option<Vec<[f64; 2]>>,
}

fn default_height() -> HeightMode {
    HeightMode::ClampedDistance
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    pub young: f64,
    pub poisson: f64,
    /// Stiffness multipliers `w`: per family region, or background followed
    /// by one per entry of `regions`.
    pub weights: Vec<f64>,
    #[serde(default)]
    pub regions: Vec<Shape>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub k: usize,
    pub layers: usize,
    pub width: usize,
    pub frequencies: usize,
    pub omega0: f64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        let spec = NetworkSpec::new(1, 1, 3);
        Self {
            k: spec.outputs,
            layers: spec.layers,
            width: spec.width,
            frequencies: spec.frequencies,
            omega0: spec.omega0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub steps: usize,
    pub cubature_points: usize,
    pub tracer_spacing: f64,
    /// Stiffness of the family's actuation strings.
    pub string_stiffness: f64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            steps: 100,
            cubature_points: 1024,
            tracer_spacing: 0.05,
            string_stiffness: 0.0,
        }
    }
}

/// 1-based line of `key` inside `[table]` (or at top level), for error messages.
fn line_of(text: &str, table: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = Some(line.trim_matches(|c| c == '[' || c == ']').trim().to_string());
            continue;
        }
        let in_table = match (table, &current) {
            (None, None) => true,
            (Some(t), Some(c)) => t == c,
            _ => false,
        };
        if in_table && line.split('=').next().map(str::trim) == Some(key) {
            return Some(i + 1);
        }
    }
    table.and_then(|t| text.lines().position(|l| l.trim().trim_matches(|c| c == '[' || c == ']') == t).map(|i| i + 1))
}

impl Scene {
    pub fn parse(text: &str) -> Result<Self, SceneError> {
        let scene: Scene = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            SceneError::Parse {
                line,
                message: e.message().to_string(),
            }
        })?;
        if let Err(SceneError::Invalid { field, message, .. }) = scene.validate() {
            let (table, key) = match field.split_once('.') {
                Some((t, k)) => (Some(t), k),
                None => (None, field.as_str()),
            };
            return Err(SceneError::Invalid {
                line: line_of(text, table, key),
                field,
                message,
            });
        }
        Ok(scene)
    }

    pub fn to_toml(&self) -> Result<String, SceneError> {
        toml::to_string(self).map_err(|e| SceneError::Format(e.to_string()))
    }

    /// Structural validation beyond what the schema enforces.
    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |field: &str, message: String| {
            Err(SceneError::Invalid {
                line: None,
                field: field.to_string(),
                message,
            })
        };
        if self.version != SCENE_VERSION {
            return bad("version", format!("unsupported scene version {} (expected {SCENE_VERSION})", self.version));
        }
        if !(1..=3).contains(&self.dim) {
            return bad("dim", format!("dimension must be 1, 2 or 3, got {}", self.dim));
        }
        if let Some(d) = self.lift.family.dim() {
            if d != self.dim {
                return bad("lift.family", format!("family {} is {d}D but the scene is {}D", self.lift.family, self.dim));
            }
        }
        if !(self.lift.threshold > 0.0) || !self.lift.threshold.is_finite() {
            return bad("lift.threshold", format!("s must be positive, got {}", self.lift.threshold));
        }
        let [a, b] = self.lift.alpha_range;
        if !(a <= b) || a < 0.0 || b > 1.0 {
            return bad("lift.alpha_range", format!("α range [{a}, {b}] must be a non-empty subset of [0, 1]"));
        }
        if !(a..=b).contains(&self.lift.alpha) {
            return bad("lift.alpha", format!("initial α {} outside [{a}, {b}]", self.lift.alpha));
        }
        if self.lift.family == FamilyKind::Fixed && self.lift.interface.is_none() {
            return bad("lift.interface", "the fixed family needs explicit interface vertices".into());
        }
        if self.lift.cut.is_some() && self.dim != 2 {
            return bad("lift.cut", "cuts are supported in 2D only".into());
        }
        if let Some(w) = self.material.weights.iter().find(|w| !(**w > 0.0)) {
            return bad("material.weights", format!("weights must be positive, got {w}"));
        }
        if !(self.material.young > 0.0) || !(-1.0 < self.material.poisson && self.material.poisson < 0.5) {
            return bad("material.young", "need young > 0 and -1 < poisson < 0.5".into());
        }
        let n = &self.network;
        if n.k == 0 || n.layers == 0 || n.width == 0 || !(n.omega0 > 0.0) {
            return bad("network.k", "k, layers, width and omega0 must be positive".into());
        }
        let s = &self.simulation;
        if s.cubature_points == 0 || !(s.tracer_spacing > 0.0) || s.string_stiffness < 0.0 {
            return bad("simulation.cubature_points", "cubature points and tracer spacing must be positive".into());
        }
        if !(self.integrator.h > 0.0) {
            return bad("integrator.h", format!("time step must be positive, got {}", self.integrator.h));
        }
        for h in &self.handles {
            let ok = match h {
                Handle::PinSpring { anchor, target, stiffness } => {
                    anchor.len() == self.dim && target.as_ref().map_or(true, |t| t.len() == self.dim) && *stiffness >= 0.0
                }
                Handle::PairSpring { a, b, stiffness } => a.len() == self.dim && b.len() == self.dim && *stiffness >= 0.0,
                Handle::Gravity { acceleration } => acceleration.len() == self.dim,
            };
            if !ok {
                return bad("handles", format!("handle {h:?} has wrong dimension or negative stiffness"));
            }
        }
        let family = self.family().map_err(|e| SceneError::Invalid {
            line: None,
            field: "lift".into(),
            message: e.to_string(),
        })?;
        self.training.validate(&family).map_err(|e| SceneError::Invalid {
            line: None,
            field: "training".into(),
            message: e.to_string(),
        })?;
        Ok(())
    }

    pub fn family(&self) -> Result<ShapeFamily, SceneError> {
        let invalid = |field: &str, e: &dyn std::fmt::Display| SceneError::Invalid {
            line: None,
            field: field.into(),
            message: e.to_string(),
        };
        let domain = Domain::new(self.domain.clone()).map_err(|e| invalid("domain", &e))?;
        if domain.dim() != self.dim {
            return Err(invalid("domain", &format!("domain is {}D", domain.dim())));
        }
        let interface = match &self.lift.interface {
            None => None,
            Some(verts) => Some(interface_mesh(self.dim, verts, self.lift.closed).map_err(|e| invalid("lift.interface", &e))?),
        };
        let materials = MaterialField {
            weights: self.material.weights.clone(),
            regions: self.material.regions.clone(),
        };
        let mut family = ShapeFamily::new(domain, self.lift.family, interface, self.lift.threshold, materials, self.lift.alpha_range)
            .map_err(|e| invalid("lift", &e))?
            .with_height(self.lift.height);
        if let Some(cut) = &self.lift.cut {
            let mesh = InterfaceMesh::polyline(cut).map_err(|e| invalid("lift.cut", &e))?;
            family = family.with_cut(mesh).map_err(|e| invalid("lift.cut", &e))?;
        }
        Ok(family)
    }

    pub fn network_spec(&self) -> NetworkSpec {
        let n = &self.network;
        NetworkSpec {
            layers: n.layers,
            width: n.width,
            frequencies: n.frequencies,
            omega0: n.omega0,
            ..NetworkSpec::new(self.dim, 1 + usize::from(self.lift.cut.is_some()), n.k)
        }
    }

    pub fn material(&self) -> Material {
        Material::from_young_poisson(self.material.young, self.material.poisson)
    }

    pub fn sim_setup(&self, network: FieldNetwork) -> Result<SimSetup, SceneError> {
        Ok(SimSetup {
            family: self.family()?,
            network,
            material: self.material(),
            integrator: self.integrator.clone(),
            handles: self.handles.clone(),
            string_stiffness: self.simulation.string_stiffness,
            cubature_points: self.simulation.cubature_points,
            tracer_spacing: self.simulation.tracer_spacing,
            seed: self.seed,
            alpha: self.lift.alpha,
        })
    }
}

fn interface_mesh(dim: usize, verts: &[Vec<f64>], closed: bool) -> Result<InterfaceMesh, String> {
    if verts.iter().any(|v| v.len() != dim) {
        return Err(format!("interface vertices must have {dim} coordinates"));
    }
    match dim {
        1 => InterfaceMesh::points_1d(&verts.iter().map(|v| v[0]).collect::<Vec<_>>()).map_err(|e| e.to_string()),
        2 => {
            let pts: Vec<[f64; 2]> = verts.iter().map(|v| [v[0], v[1]]).collect();
            if closed {
                InterfaceMesh::closed_polyline(&pts)
            } else {
                InterfaceMesh::polyline(&pts)
            }
            .map_err(|e| e.to_string())
        }
        _ => Err("explicit 3D interfaces are read from mesh files, not scenes".into()),
    }
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene, SceneError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| SceneError::Io(format!("{}: {e}", path.display())))?;
    Scene::parse(&text)
}
