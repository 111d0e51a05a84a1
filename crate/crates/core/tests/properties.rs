use liftfield::geometry::{closest_point, distance_gradient, distance_hessian, FeatureKind, InterfaceMesh, SpatialHashGrid};
use liftfield::sim::{deformation_gradient, displacement, Reduced};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn polyline() -> impl Strategy<Value = InterfaceMesh> {
    prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..12).prop_filter_map("degenerate segment", |pts| {
        let pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
        InterfaceMesh::polyline(&pts).ok()
    })
}

fn element_distance(mesh: &InterfaceMesh, e: usize, x: &[f64]) -> f64 {
    let v: Vec<[f64; 2]> = mesh.element(e).iter().map(|&i| {
        let p = mesh.vertex(i);
        [p[0], p[1]]
    }).collect();
    closest_point(&InterfaceMesh::polyline(&v).unwrap(), x).unwrap().distance
}

proptest! {
    #[test]
    fn clamped_query_agrees_with_closest_point(
        mesh in polyline(),
        s in 0.02f64..0.3,
        queries in prop::collection::vec((-0.2f64..1.2, -0.2f64..1.2), 1..20),
    ) {
        let grid = SpatialHashGrid::build(&mesh, s).unwrap();
        for (x, y) in queries {
            let exact = closest_point(&mesh, &[x, y]).unwrap();
            let hashed = grid.clamped_query(&mesh, &[x, y]).unwrap();
            match hashed.near() {
                Some(f) => prop_assert!((f.distance - exact.distance).abs() <= 1e-12),
                None => prop_assert!(exact.distance >= s - 1e-12),
            }
        }
    }

    #[test]
    fn closest_point_is_a_lower_bound(mesh in polyline(), x in -0.5f64..1.5, y in -0.5f64..1.5) {
        let best = closest_point(&mesh, &[x, y]).unwrap();
        for e in 0..mesh.element_count() {
            prop_assert!(best.distance <= element_distance(&mesh, e, &[x, y]) + 1e-15);
        }
        prop_assert!(element_distance(&mesh, best.element, &[x, y]) == best.distance);
    }

    #[test]
    fn distance_derivatives(mesh in polyline(), x in -0.5f64..1.5, y in -0.5f64..1.5) {
        let f = closest_point(&mesh, &[x, y]).unwrap();
        prop_assume!(f.distance > 1e-6);
        let g = distance_gradient(&f, &[x, y]).unwrap();
        prop_assert!((g.norm() - 1.0).abs() < 1e-12);
        let h = distance_hessian(&f, &[x, y]).unwrap();
        prop_assert!((h[(0, 1)] - h[(1, 0)]).abs() < 1e-12);
        if f.kind == FeatureKind::Vertex {
            let eig = h.symmetric_eigen().eigenvalues;
            prop_assert!(eig.iter().all(|l| *l >= -1e-12));
        }
    }

    #[test]
    fn translation_column_moves_points_rigidly(
        data in prop::collection::vec(-1.0f64..1.0, 18),
        phi in prop::collection::vec(-1.0f64..1.0, 2),
        grad in prop::collection::vec(-2.0f64..2.0, 4),
        shift in (-1.0f64..1.0, -1.0f64..1.0),
        x in (0.0f64..1.0, 0.0f64..1.0),
    ) {
        // mode 0 is the constant field, so its translation column is a rigid shift
        let z = Reduced::from_vec(3, 2, data).unwrap();
        let phi = [1.0, phi[0], phi[1]];
        let grad = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, grad[0], grad[1], grad[2], grad[3]]);
        let x = [x.0, x.1];
        let mut moved = z.clone();
        *moved.at_mut(0, 0, 2) += shift.0;
        *moved.at_mut(0, 1, 2) += shift.1;
        let (u0, u1) = (displacement(&z, &phi, &x), displacement(&moved, &phi, &x));
        prop_assert!((u1[0] - u0[0] - shift.0).abs() < 1e-12);
        prop_assert!((u1[1] - u0[1] - shift.1).abs() < 1e-12);
        let (f0, f1) = (deformation_gradient(&z, &phi, &grad, &x), deformation_gradient(&moved, &phi, &grad, &x));
        prop_assert!((f0 - f1).abs().max() < 1e-12);
    }
}
