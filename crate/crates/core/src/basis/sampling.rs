use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BasisError, ShapeFamily};
use crate::lifting::LiftingMap;

/// Points closer than this to an interface or cut are redrawn.
pub const INTERFACE_EXCLUSION: f64 = 1e-9;

/// Points closer than this fraction of the threshold to a cut end are
/// redrawn: the winding-number lift's curvature blows up like `1/r²` there and
/// a single sample would dominate a Hessian-energy estimate.
pub const CUT_TIP_EXCLUSION: f64 = 0.25;

const MIN_ACCEPTANCE: f64 = 0.01;
const ACCEPTANCE_WINDOW: usize = 1000;

/// `n` uniform points in `Ω^α`, deterministic in `seed`.
pub fn sample_domain(family: &ShapeFamily, alpha: f64, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, BasisError> {
    let map = family.lifting_map(alpha)?;
    sample_domain_with(family, &map, alpha, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Rejection sampling against the bounding box of `Ω^α`.
pub fn sample_domain_with<R: Rng>(
    family: &ShapeFamily,
    map: &LiftingMap,
    alpha: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>, BasisError> {
    let domain = family.domain_at(alpha);
    let (lo, hi) = domain.bounds();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        let x: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| rng.gen_range(*a..*b)).collect();
        if domain.contains(&x)
            && family.interface_clearance(map, &x)? > INTERFACE_EXCLUSION
            && family.cut_tip_distance(&x) > CUT_TIP_EXCLUSION * family.threshold
        {
            out.push(x);
        }
        if attempts >= ACCEPTANCE_WINDOW && (out.len() as f64) < MIN_ACCEPTANCE * attempts as f64 {
            return Err(BasisError::DegenerateOccupancy {
                accepted: out.len(),
                attempts,
            });
        }
    }
    log::trace!("sampled {n} points in {attempts} draws");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{Domain, MaterialField, Shape};
    use crate::geometry::InterfaceMesh;
    use crate::lifting::FamilyKind;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn square_family(shapes: Vec<Shape>) -> ShapeFamily {
        ShapeFamily::new(
            Domain::new(shapes).unwrap(),
            FamilyKind::TranslatingCrease,
            None,
            0.125,
            MaterialField::uniform(1.0),
            [0.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn uniform_on_unit_square() {
        let fam = square_family(Domain::unit_box(2).shapes);
        let pts = sample_domain(&fam, 0.3, 20_000, 11).unwrap();
        let mut counts = [0f64; 100];
        for p in &pts {
            assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
            let (i, j) = ((p[0] * 10.0) as usize, (p[1] * 10.0) as usize);
            counts[i.min(9) * 10 + j.min(9)] += 1.0;
        }
        let expected = pts.len() as f64 / 100.0;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        let p_value = 1.0 - ChiSquared::new(99.0).unwrap().cdf(chi2);
        assert!(p_value > 0.01, "chi2 {chi2}, p {p_value}");
    }

    #[test]
    fn deterministic() {
        let fam = square_family(Domain::unit_box(2).shapes);
        assert_eq!(sample_domain(&fam, 0.5, 50, 3).unwrap(), sample_domain(&fam, 0.5, 50, 3).unwrap());
        assert_ne!(sample_domain(&fam, 0.5, 50, 3).unwrap(), sample_domain(&fam, 0.5, 50, 4).unwrap());
    }

    #[test]
    fn tiny_occupancy_is_degenerate() {
        let fam = square_family(vec![
            Shape::Box {
                min: vec![0.0, 0.0],
                max: vec![1.0, 1.0],
            },
            Shape::Box {
                min: vec![500.0, 500.0],
                max: vec![500.5, 500.5],
            },
        ]);
        assert!(matches!(
            sample_domain(&fam, 0.5, 100, 1),
            Err(BasisError::DegenerateOccupancy { .. })
        ));
    }

    #[test]
    fn samples_avoid_interfaces() {
        // all points are near the crease at x = 0.5; none closer than the exclusion
        let fam = square_family(vec![Shape::Box {
            min: vec![0.5 - 1e-8, 0.0],
            max: vec![0.5 + 1e-8, 1.0],
        }]);
        let pts = sample_domain(&fam, 0.5, 200, 5).unwrap();
        assert!(pts.iter().all(|p| (p[0] - 0.5).abs() > INTERFACE_EXCLUSION));
        let fixed = fam.with_interface(InterfaceMesh::polyline(&[[0.0, 0.5], [1.0, 0.5]]).unwrap());
        assert!(sample_domain(&fixed, 0.5, 10, 5).is_ok());
    }

    #[test]
    fn samples_keep_clear_of_cut_tips() {
        let fam = square_family(vec![Shape::Box {
            min: vec![0.0, 0.0],
            max: vec![1.0, 1.0],
        }])
        .with_cut(InterfaceMesh::polyline(&[[0.7, -0.1], [0.7, 0.6]]).unwrap())
        .unwrap();
        let pts = sample_domain(&fam, 0.5, 4000, 9).unwrap();
        let r = CUT_TIP_EXCLUSION * fam.threshold;
        let near_tip = |p: &Vec<f64>| ((p[0] - 0.7).powi(2) + (p[1] - 0.6).powi(2)).sqrt();
        assert!(pts.iter().all(|p| near_tip(p) > r));
        // the excluded disc is small: points just outside it still appear
        assert!(pts.iter().any(|p| near_tip(p) < 2.0 * r));
    }
}
