//! Stable Neo-Hookean density with a finite barrier for inverted elements.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Below this determinant `log J` is continued by its quadratic Taylor
/// expansion, keeping energy and stress finite for inverted elements.
pub const BARRIER_J: f64 = 1e-3;

/// Lamé parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub mu: f64,
    pub lambda: f64,
}

impl Material {
    pub fn from_young_poisson(young: f64, poisson: f64) -> Self {
        Self {
            mu: young / (2.0 * (1.0 + poisson)),
            lambda: young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson)),
        }
    }
}

/// `log J` and its derivative, with the quadratic continuation below
/// [`BARRIER_J`]; the flag reports whether the continuation was used.
pub fn barrier_log(j: f64) -> (f64, f64, bool) {
    if j >= BARRIER_J {
        (j.ln(), 1.0 / j, false)
    } else {
        let e = BARRIER_J;
        let t = j - e;
        (e.ln() + t / e - t * t / (2.0 * e * e), 1.0 / e - t / (e * e), true)
    }
}

/// Cofactor matrix `∂J/∂F` for `d <= 3`.
pub fn cofactor(f: &DMatrix<f64>) -> DMatrix<f64> {
    match f.nrows() {
        1 => DMatrix::from_element(1, 1, 1.0),
        2 => DMatrix::from_row_slice(2, 2, &[f[(1, 1)], -f[(1, 0)], -f[(0, 1)], f[(0, 0)]]),
        3 => DMatrix::from_fn(3, 3, |r, c| {
            let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
            let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
            f[(r1, c1)] * f[(r2, c2)] - f[(r1, c2)] * f[(r2, c1)]
        }),
        d => panic!("cofactor supports d <= 3, got {d}"),
    }
}

/// Result of evaluating the density at one `F`.
#[derive(Clone, Debug)]
pub struct Density {
    pub value: f64,
    /// First Piola stress `∂Ψ/∂F`.
    pub stress: DMatrix<f64>,
    pub barrier: bool,
}

/// `Ψ = w (μ/2 (‖F‖² − d) − μ log J + λ/2 (log J)²)` and its stress.
pub fn energy_density(f: &DMatrix<f64>, material: &Material, w: f64) -> Density {
    let d = f.nrows() as f64;
    let j = f.determinant();
    let (l, dl, barrier) = barrier_log(j);
    let Material { mu, lambda } = *material;
    let value = w * (0.5 * mu * (f.norm_squared() - d) - mu * l + 0.5 * lambda * l * l);
    let stress = (f * mu + cofactor(f) * ((lambda * l - mu) * dl)) * w;
    Density { value, stress, barrier }
}

#[cfg(test)]
mod tests {
    use super::*;

    const STEEL: Material = Material { mu: 3.0, lambda: 5.0 };

    #[test]
    fn rest_state_is_zero() {
        for d in 1..=3 {
            let e = energy_density(&DMatrix::identity(d, d), &STEEL, 2.0);
            assert!(e.value.abs() < 1e-14);
            assert!(e.stress.norm() < 1e-14);
        }
    }

    #[test]
    fn linear_in_weight() {
        let f = DMatrix::from_row_slice(2, 2, &[1.1, 0.2, -0.1, 0.9]);
        let a = energy_density(&f, &STEEL, 1.0);
        let b = energy_density(&f, &STEEL, 2.0);
        assert_eq!(b.value, 2.0 * a.value);
    }

    fn check_stress(f: DMatrix<f64>) {
        let e = energy_density(&f, &STEEL, 1.5);
        let eps = 1e-6;
        for r in 0..f.nrows() {
            for c in 0..f.ncols() {
                let mut a = f.clone();
                a[(r, c)] += eps;
                let mut b = f.clone();
                b[(r, c)] -= eps;
                let fd = (energy_density(&a, &STEEL, 1.5).value - energy_density(&b, &STEEL, 1.5).value) / (2.0 * eps);
                let rel = (e.stress[(r, c)] - fd).abs() / fd.abs().max(1e-8);
                assert!(rel < 1e-5, "({r},{c}): {} vs {fd}", e.stress[(r, c)]);
            }
        }
    }

    #[test]
    fn stress_matches_fd() {
        check_stress(DMatrix::from_row_slice(2, 2, &[1.1, 0.0, 0.0, 1.0]));
        check_stress(DMatrix::from_row_slice(2, 2, &[1.1, 0.3, -0.2, 0.8]));
        check_stress(DMatrix::from_row_slice(3, 3, &[1.0, 0.1, 0.0, 0.2, 0.9, 0.1, 0.0, -0.1, 1.2]));
        check_stress(DMatrix::from_row_slice(1, 1, &[1.3]));
    }

    #[test]
    fn barrier_is_finite_and_smooth() {
        let inverted = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        let e = energy_density(&inverted, &STEEL, 1.0);
        assert!(e.barrier && e.value.is_finite() && e.value > 1e3);
        assert!(e.stress.iter().all(|v| v.is_finite()));
        check_stress(DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1e-3 * 0.5]));
        // continuity at the switch
        let (a, da, _) = barrier_log(BARRIER_J * (1.0 + 1e-12));
        let (b, db, _) = barrier_log(BARRIER_J * (1.0 - 1e-12));
        assert!((a - b).abs() < 1e-9 && (da - db).abs() < 1e-6 * da);
    }

    #[test]
    fn lame_from_young_poisson() {
        let m = Material::from_young_poisson(1.0, 0.25);
        assert!((m.mu - 0.4).abs() < 1e-15);
        assert!((m.lambda - 0.4).abs() < 1e-15);
    }
}
