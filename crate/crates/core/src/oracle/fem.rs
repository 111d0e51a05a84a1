//! Dense finite-element references for the weighted Laplace eigenproblem
//! `-div(w grad u) = λ u` with free (natural) boundaries.

use serde::{Deserialize, Serialize};

use super::jacobi::symmetric_eigen;
use super::OracleError;

const MAX_SWEEPS: usize = 60;

/// Piecewise-constant weight on the line: `weights[i]` applies between
/// `breaks[i-1]` and `breaks[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    pub breaks: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightProfile {
    pub fn uniform(w: f64) -> Self {
        Self {
            breaks: vec![],
            weights: vec![w],
        }
    }

    pub fn split(at: f64, left: f64, right: f64) -> Self {
        Self {
            breaks: vec![at],
            weights: vec![left, right],
        }
    }

    pub fn at(&self, x: f64) -> f64 {
        self.weights[self.breaks.iter().filter(|b| x >= **b).count()]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fem1DProblem {
    pub elements: usize,
    pub profile: WeightProfile,
}

impl Fem1DProblem {
    fn validate(&self) -> Result<(), OracleError> {
        if self.elements < 16 {
            return Err(OracleError::Invalid(format!("need at least 16 elements, got {}", self.elements)));
        }
        let p = &self.profile;
        if p.weights.len() != p.breaks.len() + 1 || p.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(OracleError::Invalid("weights must be positive, one more than breaks".into()));
        }
        Ok(())
    }
}

/// Axis-aligned rectangle triangulated on an `nx x ny` grid with alternating
/// diagonals (mirror-symmetric for even counts).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRect {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub nx: usize,
    pub ny: usize,
}

impl GridRect {
    fn vertex(&self, i: usize, j: usize) -> [f64; 2] {
        let hx = (self.max[0] - self.min[0]) / self.nx as f64;
        let hy = (self.max[1] - self.min[1]) / self.ny as f64;
        [self.min[0] + i as f64 * hx, self.min[1] + j as f64 * hy]
    }

    fn index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    fn triangles(&self) -> Vec<[usize; 3]> {
        let mut out = Vec::with_capacity(2 * self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let (a, b, c, d) = (
                    self.index(i, j),
                    self.index(i + 1, j),
                    self.index(i + 1, j + 1),
                    self.index(i, j + 1),
                );
                if (i + j) % 2 == 0 {
                    out.push([a, b, c]);
                    out.push([a, c, d]);
                } else {
                    out.push([a, b, d]);
                    out.push([b, c, d]);
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub enum FemMesh {
    Line { nodes: Vec<f64> },
    Grid(GridRect),
}

/// Ascending eigenpairs with mass-orthonormal nodal vectors.
#[derive(Clone, Debug)]
pub struct FemModes {
    pub mesh: FemMesh,
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl FemModes {
    /// Piecewise-linear interpolation of `mode` at `x` (clamped to the mesh).
    pub fn eval(&self, mode: usize, x: &[f64]) -> f64 {
        let v = &self.vectors[mode];
        match &self.mesh {
            FemMesh::Line { nodes } => {
                let n = nodes.len() - 1;
                let (a, b) = (nodes[0], nodes[n]);
                let t = ((x[0] - a) / (b - a) * n as f64).clamp(0.0, n as f64);
                let e = (t.floor() as usize).min(n - 1);
                let f = t - e as f64;
                v[e] * (1.0 - f) + v[e + 1] * f
            }
            FemMesh::Grid(g) => {
                let tx = ((x[0] - g.min[0]) / (g.max[0] - g.min[0]) * g.nx as f64).clamp(0.0, g.nx as f64);
                let ty = ((x[1] - g.min[1]) / (g.max[1] - g.min[1]) * g.ny as f64).clamp(0.0, g.ny as f64);
                let (i, j) = ((tx.floor() as usize).min(g.nx - 1), (ty.floor() as usize).min(g.ny - 1));
                let (u, w) = (tx - i as f64, ty - j as f64);
                let at = |di: usize, dj: usize| v[g.index(i + di, j + dj)];
                if (i + j) % 2 == 0 {
                    // split along (0,0)-(1,1)
                    if u >= w {
                        at(0, 0) + u * (at(1, 0) - at(0, 0)) + w * (at(1, 1) - at(1, 0))
                    } else {
                        at(0, 0) + w * (at(0, 1) - at(0, 0)) + u * (at(1, 1) - at(0, 1))
                    }
                } else if u + w <= 1.0 {
                    at(0, 0) + u * (at(1, 0) - at(0, 0)) + w * (at(0, 1) - at(0, 0))
                } else {
                    at(1, 1) + (1.0 - u) * (at(0, 1) - at(1, 1)) + (1.0 - w) * (at(1, 0) - at(1, 1))
                }
            }
        }
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        match &self.mesh {
            FemMesh::Line { nodes } => nodes.iter().map(|x| vec![*x]).collect(),
            FemMesh::Grid(g) => (0..=g.ny)
                .flat_map(|j| (0..=g.nx).map(move |i| g.vertex(i, j).to_vec()))
                .collect(),
        }
    }
}

/// Solve `K u = λ M u` for dense `K` and lumped diagonal `M`.
fn solve(stiffness: &[f64], mass: &[f64], k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>), OracleError> {
    let n = mass.len();
    if k >= n {
        return Err(OracleError::Invalid(format!("requested {k} modes from {n} nodes")));
    }
    let inv_sqrt: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut a = stiffness.to_vec();
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let (vals, vecs) = symmetric_eigen(&a, n, MAX_SWEEPS)?;
    let vectors = vecs
        .into_iter()
        .take(k)
        .map(|v| v.iter().zip(&inv_sqrt).map(|(x, s)| x * s).collect())
        .collect();
    Ok((vals.into_iter().take(k).collect(), vectors))
}

/// Linear elements on `[0, 1]` with lumped mass.
pub fn fem_modes_1d(problem: &Fem1DProblem, k: usize) -> Result<FemModes, OracleError> {
    problem.validate()?;
    let ne = problem.elements;
    let n = ne + 1;
    let h = 1.0 / ne as f64;
    let mut kmat = vec![0.0; n * n];
    let mut mass = vec![0.0; n];
    for e in 0..ne {
        let w = problem.profile.at((e as f64 + 0.5) * h);
        let c = w / h;
        kmat[e * n + e] += c;
        kmat[(e + 1) * n + e + 1] += c;
        kmat[e * n + e + 1] -= c;
        kmat[(e + 1) * n + e] -= c;
        mass[e] += 0.5 * h;
        mass[e + 1] += 0.5 * h;
    }
    let (eigenvalues, vectors) = solve(&kmat, &mass, k)?;
    Ok(FemModes {
        mesh: FemMesh::Line {
            nodes: (0..n).map(|i| i as f64 * h).collect(),
        },
        eigenvalues,
        vectors,
    })
}

/// Cotangent stiffness scaled by the weight at each triangle centroid.
pub fn fem_modes_2d(grid: &GridRect, weight: &dyn Fn(&[f64]) -> f64, k: usize) -> Result<FemModes, OracleError> {
    if grid.nx == 0 || grid.ny == 0 || !(grid.max[0] > grid.min[0] && grid.max[1] > grid.min[1]) {
        return Err(OracleError::Invalid("degenerate grid".into()));
    }
    let n = (grid.nx + 1) * (grid.ny + 1);
    if n > 2500 {
        return Err(OracleError::Invalid(format!("{n} vertices is beyond desk scale")));
    }
    let verts: Vec<[f64; 2]> = (0..=grid.ny)
        .flat_map(|j| (0..=grid.nx).map(move |i| (i, j)))
        .map(|(i, j)| grid.vertex(i, j))
        .collect();
    let mut kmat = vec![0.0; n * n];
    let mut mass = vec![0.0; n];
    for tri in grid.triangles() {
        let p = tri.map(|i| verts[i]);
        let centroid = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
        let w = weight(&centroid);
        if !(w > 0.0) {
            return Err(OracleError::Invalid(format!("non-positive weight {w} at {centroid:?}")));
        }
        let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs();
        for c in 0..3 {
            let (a, b) = ((c + 1) % 3, (c + 2) % 3);
            let u = [p[a][0] - p[c][0], p[a][1] - p[c][1]];
            let v = [p[b][0] - p[c][0], p[b][1] - p[c][1]];
            let cot = (u[0] * v[0] + u[1] * v[1]) / (u[0] * v[1] - u[1] * v[0]).abs();
            let coef = 0.5 * w * cot;
            let (i, j) = (tri[a], tri[b]);
            kmat[i * n + j] -= coef;
            kmat[j * n + i] -= coef;
            kmat[i * n + i] += coef;
            kmat[j * n + j] += coef;
            mass[tri[c]] += area / 3.0;
        }
    }
    let (eigenvalues, vectors) = solve(&kmat, &mass, k)?;
    Ok(FemModes {
        mesh: FemMesh::Grid(*grid),
        eigenvalues,
        vectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn slope_ratio(modes: &FemModes, at: f64) -> f64 {
        let FemMesh::Line { nodes } = &modes.mesh else { unreachable!() };
        let h = nodes[1] - nodes[0];
        let i = (at / h).round() as usize;
        let v = &modes.vectors[1];
        (v[i] - v[i - 1]) / (v[i + 1] - v[i])
    }

    #[test]
    fn free_rod_spectrum() {
        let modes = fem_modes_1d(
            &Fem1DProblem {
                elements: 200,
                profile: WeightProfile::uniform(1.0),
            },
            3,
        )
        .unwrap();
        assert!(modes.eigenvalues[0].abs() < 1e-9);
        assert!((modes.eigenvalues[1] / (PI * PI) - 1.0).abs() < 0.01);
        // mode 2 is cos(pi x) up to sign and mass normalization (∫cos² = 1/2)
        let v = &modes.vectors[1];
        let sign = v[0].signum();
        for (i, vi) in v.iter().enumerate() {
            let x = i as f64 / 200.0;
            assert!((sign * vi - 2f64.sqrt() * (PI * x).cos()).abs() < 0.01);
        }
    }

    #[test]
    fn heterogeneous_slope_ratio() {
        let modes = fem_modes_1d(
            &Fem1DProblem {
                elements: 400,
                profile: WeightProfile::split(0.5, 1.0, 4.0),
            },
            2,
        )
        .unwrap();
        let r = slope_ratio(&modes, 0.5);
        assert!((r - 4.0).abs() < 0.08, "ratio {r}");
    }

    #[test]
    fn eigenvalues_scale_with_weight() {
        let p = |s: f64| Fem1DProblem {
            elements: 32,
            profile: WeightProfile::split(0.5, s, 3.0 * s),
        };
        let a = fem_modes_1d(&p(1.0), 4).unwrap();
        let b = fem_modes_1d(&p(2.0), 4).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues).skip(1) {
            assert!((y / x - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn too_coarse_rejected() {
        let p = Fem1DProblem {
            elements: 8,
            profile: WeightProfile::uniform(1.0),
        };
        assert!(matches!(fem_modes_1d(&p, 2), Err(OracleError::Invalid(_))));
    }

    fn square(n: usize) -> GridRect {
        GridRect {
            min: [0.0, 0.0],
            max: [1.0, 1.0],
            nx: n,
            ny: n,
        }
    }

    #[test]
    fn unit_square_neumann() {
        let modes = fem_modes_2d(&square(16), &|_| 1.0, 3).unwrap();
        assert!(modes.eigenvalues[0].abs() < 1e-8);
        assert!((modes.eigenvalues[1] / (PI * PI) - 1.0).abs() < 0.05, "{:?}", modes.eigenvalues);
    }

    #[test]
    fn refinement_converges() {
        let a = fem_modes_2d(&square(12), &|_| 1.0, 2).unwrap().eigenvalues[1];
        let b = fem_modes_2d(&square(20), &|_| 1.0, 2).unwrap().eigenvalues[1];
        assert!(((a - b) / b).abs() < 0.01, "{a} vs {b}");
    }

    #[test]
    fn mirror_symmetry() {
        let grid = GridRect {
            min: [0.0, 0.0],
            max: [2.0, 1.0],
            nx: 16,
            ny: 8,
        };
        let stiff = |x: &[f64]| if (x[0] - 1.0).abs() < 0.3 { 4.0 } else { 1.0 };
        let modes = fem_modes_2d(&grid, &stiff, 2).unwrap();
        let (l1, l2) = (modes.eval(1, &[0.3, 0.4]), modes.eval(1, &[1.7, 0.4]));
        assert!((l1.abs() - l2.abs()).abs() < 1e-8 * l1.abs().max(1.0), "{l1} {l2}");
        // mass-orthonormal
        let nodes = modes.nodes();
        assert_eq!(nodes.len(), 17 * 9);
    }

    #[test]
    fn interpolation_reproduces_nodes() {
        let modes = fem_modes_2d(&square(6), &|x| 1.0 + x[0], 3).unwrap();
        for (i, x) in modes.nodes().iter().enumerate() {
            assert!((modes.eval(2, x) - modes.vectors[2][i]).abs() < 1e-12);
        }
    }
}
