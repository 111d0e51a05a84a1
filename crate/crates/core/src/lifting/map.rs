use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::clamp::smooth_clamp;
use super::LiftError;
use crate::geometry::{winding_jet, HashQuery, InterfaceMesh, SpatialHashGrid};

/// How the height coordinate is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeightMode {
    /// Smoothly clamped unsigned distance to the interface.
    ClampedDistance,
    /// Constant plateau value `s/2`; the lift carries no interface information.
    Constant,
}

/// Closed-form lifting map `x -> (x, H_d(x) [, H_gwn(x)])`.
#[derive(Clone, Debug)]
pub struct LiftingMap {
    interface: InterfaceMesh,
    grid: SpatialHashGrid,
    s: f64,
    height: HeightMode,
    cut: Option<InterfaceMesh>,
}

/// Lifted point with Jacobian (lifted x spatial) and one spatial Hessian per
/// lifted coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftJet {
    pub value: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub hessians: Vec<DMatrix<f64>>,
}

impl LiftingMap {
    /// Gradient-only lift `(x, H_d)`.
    pub fn new(interface: InterfaceMesh, s: f64) -> Result<Self, LiftError> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(LiftError::InvalidThreshold(s));
        }
        let grid = SpatialHashGrid::build(&interface, s)?;
        Ok(LiftingMap {
            interface,
            grid,
            s,
            height: HeightMode::ClampedDistance,
            cut: None,
        })
    }

    /// Combined lift `(x, H_d, H_gwn)` with a 2D cut polyline.
    pub fn combined(crease: InterfaceMesh, cut: InterfaceMesh, s: f64) -> Result<Self, LiftError> {
        if crease.dim() != 2 || cut.dim() != 2 {
            return Err(LiftError::CombinedNeeds2d);
        }
        if cut.is_empty() {
            return Err(LiftError::Geometry(crate::geometry::GeometryError::EmptyInterface));
        }
        let mut map = Self::new(crease, s)?;
        map.cut = Some(cut);
        Ok(map)
    }

    /// Same map with the height coordinate replaced by its plateau constant.
    pub fn with_height(mut self, height: HeightMode) -> Self {
        self.height = height;
        self
    }

    pub fn dim(&self) -> usize {
        self.interface.dim()
    }

    pub fn threshold(&self) -> f64 {
        self.s
    }

    pub fn height_mode(&self) -> HeightMode {
        self.height
    }

    pub fn interface(&self) -> &InterfaceMesh {
        &self.interface
    }

    pub fn cut(&self) -> Option<&InterfaceMesh> {
        self.cut.as_ref()
    }

    pub fn grid(&self) -> &SpatialHashGrid {
        &self.grid
    }

    /// Number of lifted coordinates beyond the spatial ones.
    pub fn extra_dims(&self) -> usize {
        if self.cut.is_some() {
            2
        } else {
            1
        }
    }

    pub fn lifted_dim(&self) -> usize {
        self.dim() + self.extra_dims()
    }

    fn check(&self, x: &[f64]) -> Result<(), LiftError> {
        if x.len() != self.dim() {
            return Err(LiftError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(LiftError::NonFinite);
        }
        Ok(())
    }

    /// Clamped-distance height and the hash query result behind it.
    fn height_query(&self, x: &[f64]) -> Result<(f64, HashQuery), LiftError> {
        if self.height == HeightMode::Constant {
            return Ok((0.5 * self.s, HashQuery::Far));
        }
        let q = self.grid.clamped_query(&self.interface, x)?;
        let h = match &q {
            HashQuery::Near(f) => smooth_clamp(f.distance, self.s)?.value,
            HashQuery::Far => 0.5 * self.s,
        };
        Ok((h, q))
    }

    pub fn lift(&self, x: &[f64]) -> Result<Vec<f64>, LiftError> {
        self.check(x)?;
        let mut out = x.to_vec();
        out.push(self.height_query(x)?.0);
        if let Some(cut) = &self.cut {
            out.push(crate::geometry::generalized_winding_number(cut, x)?);
        }
        Ok(out)
    }

    /// Lift with first and second spatial derivatives.
    ///
    /// Beyond the threshold the height row and its Hessian are exactly zero.
    pub fn lift_derivatives(&self, x: &[f64]) -> Result<LiftJet, LiftError> {
        self.check(x)?;
        let d = self.dim();
        let m = self.lifted_dim();
        let mut value = x.to_vec();
        let mut jacobian = DMatrix::zeros(m, d);
        for i in 0..d {
            jacobian[(i, i)] = 1.0;
        }
        let mut hessians = vec![DMatrix::zeros(d, d); m];

        let (h, q) = self.height_query(x)?;
        value.push(h);
        if let HashQuery::Near(f) = &q {
            if f.distance <= 0.0 {
                return Err(LiftError::OnInterface);
            }
            let c = smooth_clamp(f.distance, self.s)?;
            let grad = crate::geometry::distance_gradient(f, x)?;
            let hess = crate::geometry::distance_hessian(f, x)?;
            for j in 0..d {
                jacobian[(d, j)] = c.slope * grad[j];
            }
            hessians[d] = hess * c.slope + &grad * grad.transpose() * c.curvature;
        }
        if let Some(cut) = &self.cut {
            let w = winding_jet(cut, x)?;
            value.push(w.value);
            for j in 0..d {
                jacobian[(d + 1, j)] = w.gradient[j];
                for k in 0..d {
                    hessians[d + 1][(j, k)] = w.hessian[(j, k)];
                }
            }
        }
        Ok(LiftJet {
            value,
            jacobian,
            hessians,
        })
    }

    /// Unclamped distance to the interface (brute force), for diagnostics.
    pub fn interface_distance(&self, x: &[f64]) -> Result<f64, LiftError> {
        Ok(crate::geometry::closest_point(&self.interface, x)?.distance)
    }
}

/// Combined lift as a free function: `(x, H_d, H_gwn)`.
pub fn combined_lift(
    crease: &InterfaceMesh,
    cut: &InterfaceMesh,
    s: f64,
    x: &[f64],
) -> Result<Vec<f64>, LiftError> {
    LiftingMap::combined(crease.clone(), cut.clone(), s)?.lift(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn crease() -> InterfaceMesh {
        InterfaceMesh::polyline(&[[0.5, -0.5], [0.5, 1.5]]).unwrap()
    }

    #[test]
    fn lift_values() {
        let map = LiftingMap::new(crease(), 0.125).unwrap();
        assert_eq!(map.lift(&[0.5, 0.3]).unwrap(), vec![0.5, 0.3, 0.0]);
        assert_eq!(map.lift(&[0.9, 0.3]).unwrap(), vec![0.9, 0.3, 0.0625]);
        assert_eq!(map.lift(&[0.5625, 0.3]).unwrap(), vec![0.5625, 0.3, 0.046875]);
        assert_eq!(map.lifted_dim(), 3);
    }

    #[test]
    fn plateau_derivatives_are_zero() {
        let map = LiftingMap::new(crease(), 0.125).unwrap();
        let jet = map.lift_derivatives(&[0.9, 0.3]).unwrap();
        assert_eq!(jet.jacobian.row(2).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0]);
        assert_eq!(jet.hessians[2], DMatrix::zeros(2, 2));
        assert_eq!(jet.jacobian.rows(0, 2).into_owned(), DMatrix::identity(2, 2));
        assert!(map.lift_derivatives(&[0.5, 0.2]).is_err());
    }

    #[test]
    fn half_threshold_on_straight_segment() {
        let s = 0.125;
        let map = LiftingMap::new(crease(), s).unwrap();
        // normal n = (1, 0) on the right side
        let jet = map.lift_derivatives(&[0.5 + s / 2.0, 0.4]).unwrap();
        assert_relative_eq!(jet.jacobian[(2, 0)], 0.5, epsilon = 1e-15);
        assert_eq!(jet.jacobian[(2, 1)], 0.0);
        let expected = DMatrix::from_row_slice(2, 2, &[-1.0 / s, 0.0, 0.0, 0.0]);
        assert_relative_eq!(jet.hessians[2], expected, epsilon = 1e-12);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mesh = InterfaceMesh::polyline(&[[0.1, 0.2], [0.4, 0.6], [0.8, 0.5], [0.9, 0.9]]).unwrap();
        let cut = InterfaceMesh::polyline(&[[0.2, 0.9], [0.6, 0.95]]).unwrap();
        let s = 0.125;
        for map in [
            LiftingMap::new(mesh.clone(), s).unwrap(),
            LiftingMap::combined(mesh.clone(), cut, s).unwrap(),
        ] {
            let eps = 1e-6;
            let mut n = 0;
            while n < 100 {
                let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
                let dist = map.interface_distance(&x).unwrap();
                if dist < 1e-2 || (dist - s).abs() < 1e-2 {
                    continue;
                }
                if map.cut().is_some()
                    && crate::geometry::closest_point(map.cut().unwrap(), &x).unwrap().distance < 0.05
                {
                    continue;
                }
                let jet = map.lift_derivatives(&x).unwrap();
                for j in 0..2 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[j] += eps;
                    xm[j] -= eps;
                    let lp = map.lift(&xp).unwrap();
                    let lm = map.lift(&xm).unwrap();
                    let jp = map.lift_derivatives(&xp).unwrap();
                    let jm = map.lift_derivatives(&xm).unwrap();
                    for m in 0..map.lifted_dim() {
                        let fd = (lp[m] - lm[m]) / (2.0 * eps);
                        let scale = fd.abs().max(1.0);
                        assert!((jet.jacobian[(m, j)] - fd).abs() / scale < 1e-5);
                        for i in 0..2 {
                            let fd2 = (jp.jacobian[(m, i)] - jm.jacobian[(m, i)]) / (2.0 * eps);
                            let scale = fd2.abs().max(1.0);
                            assert!((jet.hessians[m][(i, j)] - fd2).abs() / scale < 1e-4);
                        }
                    }
                }
                n += 1;
            }
        }
    }

    #[test]
    fn gradient_flips_across_interface() {
        let s = 0.125;
        let map = LiftingMap::new(crease(), s).unwrap();
        for t in [1e-3, 1e-6] {
            let right = map.lift_derivatives(&[0.5 + t, 0.2]).unwrap();
            let left = map.lift_derivatives(&[0.5 - t, 0.2]).unwrap();
            assert_relative_eq!(right.jacobian[(2, 0)], 1.0 - t / s, epsilon = 1e-9);
            assert_relative_eq!(left.jacobian[(2, 0)], -(1.0 - t / s), epsilon = 1e-9);
        }
    }

    #[test]
    fn constant_height_ignores_interface() {
        let map = LiftingMap::new(crease(), 0.125).unwrap().with_height(HeightMode::Constant);
        assert_eq!(map.lift(&[0.5, 0.1]).unwrap()[2], 0.0625);
        let jet = map.lift_derivatives(&[0.5001, 0.1]).unwrap();
        assert_eq!(jet.jacobian[(2, 0)], 0.0);
    }

    #[test]
    fn combined_lift_examples() {
        let s = 0.125;
        let cr = InterfaceMesh::polyline(&[[0.0, 0.0], [0.2, 0.0]]).unwrap();
        let square = InterfaceMesh::closed_polyline(&[[1.0, 1.0], [2.0, 1.0], [2.0, 2.0], [1.0, 2.0]]).unwrap();
        let out = combined_lift(&cr, &square, s, &[3.0, 3.0]).unwrap();
        assert_eq!(out[2], 0.0625);
        assert_relative_eq!(out[3], 0.0, epsilon = 1e-14);
        let inside = combined_lift(&cr, &square, s, &[1.5, 1.5]).unwrap();
        assert_relative_eq!(inside[3], 1.0, epsilon = 1e-14);

        let slit = InterfaceMesh::polyline(&[[1.0, 0.5], [2.0, 0.5]]).unwrap();
        let above = combined_lift(&cr, &slit, s, &[1.5, 0.5 + 1e-4]).unwrap()[3];
        let below = combined_lift(&cr, &slit, s, &[1.5, 0.5 - 1e-4]).unwrap()[3];
        // Oracle: subtended angles approach pi from either side.
        let angle = |y: f64| {
            let a = [1.0 - 1.5, 0.5 - y];
            let b = [2.0 - 1.5, 0.5 - y];
            (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]) / (2.0 * std::f64::consts::PI)
        };
        assert_relative_eq!(above - below, angle(0.5 + 1e-4) - angle(0.5 - 1e-4), epsilon = 1e-12);
        assert!(((above - below).abs() - 1.0).abs() < 1e-3);
        assert!(combined_lift(&cr, &slit, s, &[1.5, 0.5]).is_err());
    }

    proptest! {
        #[test]
        fn height_is_one_lipschitz(x0 in 0.0f64..1.0, y0 in 0.0f64..1.0, dx in -0.01f64..0.01, dy in -0.01f64..0.01) {
            let map = LiftingMap::new(crease(), 0.125).unwrap();
            let a = map.lift(&[x0, y0]).unwrap()[2];
            let b = map.lift(&[x0 + dx, y0 + dy]).unwrap()[2];
            prop_assert!((a - b).abs() <= (dx * dx + dy * dy).sqrt() + 1e-15);
            prop_assert!((0.0..=0.0625).contains(&a));
        }
    }
}
