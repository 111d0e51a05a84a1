//! Simulation loop owner: basis refresh on α / interface edits, handles,
//! frames and trajectories.

use serde::{Deserialize, Serialize};

use super::energy::Material;
use super::forces::{CubatureSet, External, Handle, MaterialPoint, Spring};
use super::kinematics::{Reduced, ReducedState};
use super::step::{step, IntegratorParams, StepProblem, StepReport};
use super::SimError;
use crate::basis::{infer_basis, infer_values, sample_domain, ShapeFamily, INTERFACE_EXCLUSION};
use crate::field::FieldNetwork;
use crate::geometry::InterfaceMesh;
use crate::lifting::{fit_alpha, FamilyKind};

/// Vertex distance above which an edited crease counts as out of family.
pub const OUT_OF_FAMILY_TOLERANCE: f64 = 1e-3;

/// Everything the simulator needs besides the mutable state.
#[derive(Clone, Debug)]
pub struct SimSetup {
    pub family: ShapeFamily,
    pub network: FieldNetwork,
    pub material: Material,
    pub integrator: IntegratorParams,
    pub handles: Vec<Handle>,
    /// Stiffness of the family's actuation strings (0 disables them).
    pub string_stiffness: f64,
    pub cubature_points: usize,
    /// Spacing of the regular tracer grid.
    pub tracer_spacing: f64,
    pub seed: u64,
    pub alpha: f64,
}

/// One simulation frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub step: u64,
    pub alpha: f64,
    pub z: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dim: usize,
    pub k: usize,
    pub frames: Vec<Frame>,
}

/// Regular grid of tracer points inside `Ω^α`, away from cuts and creases.
fn tracer_grid(family: &ShapeFamily, alpha: f64, spacing: f64) -> Result<Vec<Vec<f64>>, SimError> {
    let domain = family.domain_at(alpha);
    let map = family.lifting_map(alpha)?;
    let (lo, hi) = domain.bounds();
    let counts: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| ((b - a) / spacing).floor() as usize + 1).collect();
    let total: usize = counts.iter().product();
    let mut out = vec![];
    for flat in 0..total {
        let mut rem = flat;
        let x: Vec<f64> = counts
            .iter()
            .zip(&lo)
            .map(|(&n, &a)| {
                let i = rem % n;
                rem /= n;
                a + i as f64 * spacing
            })
            .collect();
        if domain.contains(&x) && family.interface_clearance(&map, &x)? > INTERFACE_EXCLUSION {
            out.push(x);
        }
    }
    Ok(out)
}

#[derive(Clone)]
pub struct Simulator {
    setup: SimSetup,
    alpha: f64,
    crease: Option<InterfaceMesh>,
    out_of_family: bool,
    handles: Vec<Handle>,
    state: ReducedState,
    stale: bool,
    cubature: Option<CubatureSet>,
    tracers: Vec<MaterialPoint>,
    external: External,
    /// Index into `external.springs` for every pin handle.
    pin_springs: Vec<Option<usize>>,
}

impl Simulator {
    pub fn new(setup: SimSetup) -> Result<Self, SimError> {
        let k = setup.network.spec().outputs;
        let d = setup.family.dim();
        if !setup.family.contains_alpha(setup.alpha) {
            return Err(SimError::Invalid(format!("initial α {} outside the family range", setup.alpha)));
        }
        if setup.cubature_points < 1 || !(setup.tracer_spacing > 0.0) {
            return Err(SimError::Invalid("need cubature points and a positive tracer spacing".into()));
        }
        for h in &setup.handles {
            if h.stiffness() < 0.0 {
                return Err(SimError::Invalid("handle stiffness must be non-negative".into()));
            }
        }
        let mut sim = Self {
            alpha: setup.alpha,
            handles: setup.handles.clone(),
            state: ReducedState::at_rest(k, d),
            crease: None,
            out_of_family: false,
            stale: true,
            cubature: None,
            tracers: vec![],
            external: External::default(),
            pin_springs: vec![],
            setup,
        };
        sim.refresh()?;
        Ok(sim)
    }

    pub fn setup(&self) -> &SimSetup {
        &self.setup
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn state(&self) -> &ReducedState {
        &self.state
    }

    pub fn set_state(&mut self, state: ReducedState) {
        self.state = state;
    }

    pub fn handles(&self) -> &[Handle] {
        &self.handles
    }

    pub fn is_stale(&self) -> bool {
        self.stale
    }

    /// Whether the current crease came from an edit the family cannot represent.
    pub fn out_of_family(&self) -> bool {
        self.out_of_family
    }

    /// Family with any interactive crease edit applied.
    pub fn effective_family(&self) -> ShapeFamily {
        match &self.crease {
            Some(mesh) => self.setup.family.with_interface(mesh.clone()),
            None => self.setup.family.clone(),
        }
    }

    /// Crease vertices currently in effect.
    pub fn crease_vertices(&self) -> Result<Vec<Vec<f64>>, SimError> {
        Ok(self.effective_family().interface_at(self.alpha)?.vertices())
    }

    pub fn tracers(&self) -> &[MaterialPoint] {
        &self.tracers
    }

    pub fn cubature(&self) -> Option<&CubatureSet> {
        self.cubature.as_ref()
    }

    pub fn set_alpha(&mut self, alpha: f64) -> Result<(), SimError> {
        if !self.setup.family.contains_alpha(alpha) {
            return Err(SimError::Invalid(format!(
                "α = {alpha} outside [{}, {}]",
                self.setup.family.alpha_range[0], self.setup.family.alpha_range[1]
            )));
        }
        self.alpha = alpha;
        self.stale = true;
        Ok(())
    }

    /// Replace the crease by a free-form polyline. Returns whether the edit is
    /// out of family (not representable by the trained family).
    pub fn set_crease(&mut self, vertices: &[[f64; 2]]) -> Result<bool, SimError> {
        if self.setup.family.dim() != 2 {
            return Err(SimError::Invalid("crease edits need a 2D scene".into()));
        }
        if vertices.len() < 2 {
            return Err(SimError::Invalid(format!("a crease needs at least 2 vertices, got {}", vertices.len())));
        }
        let mesh = InterfaceMesh::polyline(vertices).map_err(|e| SimError::Invalid(e.to_string()))?;
        let kind = self.setup.family.family;
        self.out_of_family = kind == FamilyKind::Fixed
            || fit_alpha(kind, &mesh, 201).map_or(true, |(_, dist)| dist > OUT_OF_FAMILY_TOLERANCE);
        if self.out_of_family {
            log::warn!("crease edit is not representable by the {kind} family");
        }
        self.crease = Some(mesh);
        self.stale = true;
        Ok(self.out_of_family)
    }

    /// Move a pin handle's target; takes effect at the next step without a
    /// basis refresh.
    pub fn move_handle(&mut self, id: usize, target: Vec<f64>) -> Result<(), SimError> {
        let d = self.setup.family.dim();
        if target.len() != d || target.iter().any(|v| !v.is_finite()) {
            return Err(SimError::Invalid(format!("target must be {d} finite numbers")));
        }
        match self.handles.get_mut(id) {
            Some(Handle::PinSpring { target: t, .. }) => *t = Some(target.clone()),
            Some(_) => return Err(SimError::Invalid(format!("handle {id} is not a pin spring"))),
            None => return Err(SimError::Invalid(format!("no handle {id}"))),
        }
        if let Some(Some(s)) = self.pin_springs.get(id) {
            if let Spring::Pin { target: t, .. } = &mut self.external.springs[*s] {
                *t = target;
            }
        }
        Ok(())
    }

    pub fn reset(&mut self) {
        let (k, d) = (self.state.current.k, self.state.current.d);
        self.state = ReducedState::at_rest(k, d);
        self.alpha = self.setup.alpha;
        self.crease = None;
        self.out_of_family = false;
        self.handles = self.setup.handles.clone();
        self.stale = true;
    }

    /// Re-infer the basis at cubature points, tracers and handle anchors.
    pub fn refresh(&mut self) -> Result<(), SimError> {
        let family = self.effective_family();
        let alpha = self.alpha;
        let net = &self.setup.network;
        let points = sample_domain(&family, alpha, self.setup.cubature_points, self.setup.seed)?;
        let set = infer_basis(net, &family, &points, alpha)?;
        let weights = points.iter().map(|x| family.weight(alpha, x)).collect();
        let cubature = CubatureSet::from_basis(&set, weights, family.domain_at(alpha).volume());

        let tracer_x = tracer_grid(&family, alpha, self.setup.tracer_spacing)?;
        let values = |xs: &[Vec<f64>]| -> Result<Vec<MaterialPoint>, SimError> {
            if xs.is_empty() {
                return Ok(vec![]);
            }
            let v = infer_values(net, &family, xs, alpha)?;
            Ok(xs
                .iter()
                .zip(v.outer_iter())
                .map(|(x, row)| MaterialPoint {
                    x: x.clone(),
                    phi: row.to_vec(),
                })
                .collect())
        };
        let tracers = values(&tracer_x)?;

        let mut external = External::default();
        let mut pin_springs = vec![None; self.handles.len()];
        for (id, h) in self.handles.iter().enumerate() {
            match h {
                Handle::PinSpring { anchor, target, stiffness } => {
                    let point = values(std::slice::from_ref(anchor))?.remove(0);
                    pin_springs[id] = Some(external.springs.len());
                    external.springs.push(Spring::Pin {
                        target: target.clone().unwrap_or_else(|| anchor.clone()),
                        point,
                        stiffness: *stiffness,
                    });
                }
                Handle::PairSpring { a, b, stiffness } => {
                    let mut pts = values(&[a.clone(), b.clone()])?;
                    let (pb, pa) = (pts.pop().unwrap(), pts.pop().unwrap());
                    external.springs.push(Spring::Pair {
                        a: pa,
                        b: pb,
                        stiffness: *stiffness,
                    });
                }
                Handle::Gravity { acceleration } => external.gravity = Some(acceleration.clone()),
            }
        }
        if self.setup.string_stiffness > 0.0 {
            for (a, b) in self.setup.family.family.strings(alpha) {
                let mut pts = values(&[a.to_vec(), b.to_vec()])?;
                let (pb, pa) = (pts.pop().unwrap(), pts.pop().unwrap());
                external.springs.push(Spring::Pair {
                    a: pa,
                    b: pb,
                    stiffness: self.setup.string_stiffness,
                });
            }
        }
        self.cubature = Some(cubature);
        self.tracers = tracers;
        self.external = external;
        self.pin_springs = pin_springs;
        self.stale = false;
        log::debug!("basis refreshed at α = {alpha}");
        Ok(())
    }

    /// Advance one step, refreshing the basis first if an edit made it stale.
    pub fn step(&mut self) -> Result<StepReport, SimError> {
        if self.stale {
            self.refresh()?;
        }
        let cubature = self.cubature.as_ref().expect("refreshed");
        let problem = StepProblem {
            cubature,
            material: &self.setup.material,
            external: &self.external,
            h: self.setup.integrator.h,
        };
        step(&mut self.state, &problem, &self.setup.integrator)
    }

    /// Current frame; positions are the deformed tracers.
    pub fn frame(&self) -> Frame {
        let z = &self.state.current;
        Frame {
            step: self.state.step,
            alpha: self.alpha,
            z: z.data.clone(),
            positions: self.tracers.iter().map(|t| t.position(z)).collect(),
        }
    }

    /// Mean tracer displacement in the current state.
    pub fn mean_displacement(&self) -> Vec<f64> {
        let d = self.setup.family.dim();
        let mut mean = vec![0.0; d];
        let z = &self.state.current;
        for t in &self.tracers {
            for (m, (p, x)) in mean.iter_mut().zip(t.position(z).iter().zip(&t.x)) {
                *m += (p - x) / self.tracers.len() as f64;
            }
        }
        mean
    }

    pub fn reduced(&self) -> &Reduced {
        &self.state.current
    }
}

/// Run `steps` steps and collect the initial frame plus one per step.
pub fn simulate(sim: &mut Simulator, steps: usize) -> Result<Trajectory, SimError> {
    let mut frames = Vec::with_capacity(steps + 1);
    frames.push(sim.frame());
    for _ in 0..steps {
        sim.step()?;
        frames.push(sim.frame());
    }
    Ok(Trajectory {
        dim: sim.setup.family.dim(),
        k: sim.setup.network.spec().outputs,
        frames,
    })
}

/// `‖mean displacement after `steps` steps‖²` for a fresh run at α.
pub fn displacement_objective(setup: &SimSetup, alpha: f64, steps: usize) -> Result<f64, SimError> {
    let mut sim = Simulator::new(SimSetup {
        alpha,
        ..setup.clone()
    })?;
    for _ in 0..steps {
        sim.step()?;
    }
    Ok(sim.mean_displacement().iter().map(|v| v * v).sum())
}
