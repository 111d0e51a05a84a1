use super::*;
use crate::field::{field_jet, Activation, Dense, FieldJet, FieldNetwork, NetworkSpec, Order};
use crate::lifting::{FamilyKind, LiftingMap};
use approx::assert_relative_eq;
use ndarray::{array, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn crease_family() -> ShapeFamily {
    ShapeFamily::new(
        Domain::unit_box(2),
        FamilyKind::TranslatingCrease,
        None,
        0.125,
        MaterialField::uniform(1.0),
        [0.0, 1.0],
    )
    .unwrap()
}

fn bar_family(alpha_range: [f64; 2]) -> ShapeFamily {
    ShapeFamily::new(
        Domain::unit_box(1),
        FamilyKind::MaterialPoint1d,
        None,
        0.125,
        MaterialField {
            weights: vec![1.0, 4.0],
            regions: vec![],
        },
        alpha_range,
    )
    .unwrap()
}

/// Single affine layer on the raw lifted coordinates.
fn affine_net(dim: usize, weight: Array2<f64>, bias: Array1<f64>) -> FieldNetwork {
    let spec = NetworkSpec {
        layers: 1,
        frequencies: 0,
        conditioned: false,
        activation: Activation::Identity,
        ..NetworkSpec::new(dim, 1, weight.nrows())
    };
    FieldNetwork::from_layers(spec, vec![Dense { weight, bias }]).unwrap()
}

fn small_net(seed: u64, dim: usize, k: usize) -> FieldNetwork {
    let spec = NetworkSpec {
        width: 24,
        ..NetworkSpec::new(dim, 1, k)
    };
    FieldNetwork::new(spec, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

#[test]
fn gram_penalty_examples() {
    // orthonormal columns under (1/n)ΦᵀΦ
    let phi = array![[1.0, 1.0], [1.0, -1.0]];
    assert_relative_eq!(gram_penalty(phi.view()).unwrap(), 0.0);
    assert_relative_eq!(gram_penalty(Array2::<f64>::zeros((5, 3)).view()).unwrap(), 3.0);
    let dup = array![[1.0, 1.0], [1.0, 1.0], [-1.0, -1.0]];
    assert_relative_eq!(gram_penalty(dup.view()).unwrap(), 2.0, epsilon = 1e-12);
    assert!(matches!(
        gram_penalty(Array2::<f64>::zeros((2, 3)).view()),
        Err(BasisError::TooFewSamples { .. })
    ));
}

#[test]
fn gram_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let phi = Array2::from_shape_fn((7, 3), |_| rng.gen_range(-1.0..1.0));
    let (_, grad) = gram_terms(phi.view()).unwrap();
    let eps = 1e-6;
    for ((s, i), g) in grad.indexed_iter() {
        let mut p = phi.clone();
        p[[s, i]] += eps;
        let up = gram_penalty(p.view()).unwrap();
        p[[s, i]] -= 2.0 * eps;
        let down = gram_penalty(p.view()).unwrap();
        assert_relative_eq!(*g, (up - down) / (2.0 * eps), epsilon = 1e-8);
    }
}

#[test]
fn constant_output_has_only_gram_loss() {
    let fam = crease_family();
    let map = fam.lifting_map(0.5).unwrap();
    let net = affine_net(2, Array2::zeros((2, 3)), array![0.5, -1.0]);
    let pts = sample_domain(&fam, 0.5, 64, 2).unwrap();
    let loss = dirichlet_loss(&net, &map, &pts, &vec![1.0; 64], 0.5, 10.0).unwrap();
    assert_eq!(loss.energy, 0.0);
    // G = φφᵀ with φ = (0.5, -1)
    let g = [[0.25 - 1.0, -0.5], [-0.5, 1.0 - 1.0]];
    let expected: f64 = g.iter().flatten().map(|v| v * v).sum();
    assert_relative_eq!(loss.total, 10.0 * expected, epsilon = 1e-12);
}

#[test]
fn unit_slope_dirichlet_is_half() {
    let fam = crease_family();
    let map = fam.lifting_map(0.5).unwrap();
    let net = affine_net(2, array![[1.0, 0.0, 0.0]], array![0.0]);
    let pts = sample_domain(&fam, 0.5, 32, 3).unwrap();
    let w = vec![1.0; 32];
    let loss = dirichlet_loss(&net, &map, &pts, &w, 0.5, 0.0).unwrap();
    assert_relative_eq!(loss.energy, 0.5, epsilon = 1e-14);
    let doubled = dirichlet_loss(&net, &map, &pts, &vec![2.0; 32], 0.5, 3.0).unwrap();
    let base = dirichlet_loss(&net, &map, &pts, &w, 0.5, 3.0).unwrap();
    assert_eq!(doubled.energy, 2.0 * base.energy);
    assert_eq!(doubled.gram, base.gram);
    let bad = dirichlet_loss(&net, &map, &pts, &vec![0.0; 32], 0.5, 0.0);
    assert!(matches!(bad, Err(BasisError::NonPositiveWeight(_))));
}

#[test]
fn linear_field_has_no_hessian_energy() {
    let fam = crease_family();
    let map = fam.lifting_map(0.5).unwrap();
    let net = affine_net(2, array![[1.0, -2.0, 0.0], [0.3, 0.1, 0.0]], array![0.0, 1.0]);
    let pts = sample_domain(&fam, 0.5, 16, 4).unwrap();
    let loss = hessian_energy_loss(&net, &map, &pts, 0.5, 0.0).unwrap();
    assert_eq!(loss.energy, 0.0);
}

#[test]
fn quadratic_injection_density() {
    // φ = x₁²: ∇²φ = diag(2, 0)
    let n = 3;
    let jet = FieldJet {
        order: Order::Hessian,
        values: Array2::zeros((n, 1)),
        grads: vec![Array2::zeros((n, 1)); 2],
        hess: vec![Array2::from_elem((n, 1), 2.0), Array2::zeros((n, 1)), Array2::zeros((n, 1))],
    };
    assert_relative_eq!(hessian_terms(&jet).unwrap().0, 4.0);
    let mut mixed = jet.clone();
    mixed.hess = vec![Array2::zeros((n, 1)), Array2::from_elem((n, 1), 1.0), Array2::zeros((n, 1))];
    assert_relative_eq!(hessian_terms(&mixed).unwrap().0, 2.0);
    let shallow = FieldJet {
        order: Order::Gradient,
        hess: vec![],
        ..jet
    };
    assert!(hessian_terms(&shallow).is_err());
}

/// Weight gradient of a single-point density against central differences.
fn check_density_gradient(kind: LossKind, seed: u64) {
    let fam = crease_family();
    let map = fam.lifting_map(0.5).unwrap();
    let mut net = FieldNetwork::new(NetworkSpec::new(2, 1, 2), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let x = vec![vec![0.43, 0.61]];
    let density = |net: &FieldNetwork, with_adjoint: bool| {
        let order = if kind == LossKind::Dirichlet { Order::Gradient } else { Order::Hessian };
        let (jet, tape) = field_jet(net, &map, &x, &[0.5], order).unwrap();
        let (v, adj) = match kind {
            LossKind::Dirichlet => dirichlet_terms(&jet, &[3.0]).unwrap(),
            LossKind::Hessian => hessian_terms(&jet).unwrap(),
        };
        let grad = with_adjoint.then(|| net.backward(&tape, &adj).unwrap().flatten());
        (v, grad)
    };
    let grad = density(&net, true).1.unwrap();
    let params = net.parameters();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let i = rng.gen_range(0..params.len());
        let mut p = params.clone();
        p[i] += eps;
        net.set_parameters(&p).unwrap();
        let up = density(&net, false).0;
        p[i] -= 2.0 * eps;
        net.set_parameters(&p).unwrap();
        let down = density(&net, false).0;
        net.set_parameters(&params).unwrap();
        let fd = (up - down) / (2.0 * eps);
        let scale = grad[i].abs().max(fd.abs()).max(1e-3 * grad.iter().fold(0.0f64, |m, g| m.max(g.abs())));
        worst = worst.max((grad[i] - fd).abs() / scale);
    }
    assert!(worst < 1e-3, "{kind:?}: worst relative error {worst}");
}

#[test]
fn dirichlet_density_weight_gradient() {
    check_density_gradient(LossKind::Dirichlet, 21);
}

#[test]
fn hessian_density_weight_gradient() {
    check_density_gradient(LossKind::Hessian, 22);
}

#[test]
fn batch_loss_gradient_with_penalty() {
    for kind in [LossKind::Dirichlet, LossKind::Hessian] {
        let fam = crease_family();
        let map = fam.lifting_map(0.3).unwrap();
        let mut net = small_net(5, 2, 3);
        let pts = sample_domain(&fam, 0.3, 12, 6).unwrap();
        let w: Vec<f64> = pts.iter().map(|x| 1.0 + x[0]).collect();
        let (_, grad) = loss_and_gradient(&net, kind, &map, &pts, &w, 0.3, 5.0).unwrap();
        let grad = grad.flatten();
        let params = net.parameters();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let i = rng.gen_range(0..params.len());
            let eval = |net: &FieldNetwork| loss_and_gradient(net, kind, &map, &pts, &w, 0.3, 5.0).unwrap().0.total;
            let mut p = params.clone();
            p[i] += 1e-6;
            net.set_parameters(&p).unwrap();
            let up = eval(&net);
            p[i] -= 2e-6;
            net.set_parameters(&p).unwrap();
            let down = eval(&net);
            net.set_parameters(&params).unwrap();
            let fd = (up - down) / 2e-6;
            assert!((grad[i] - fd).abs() < 1e-4 * fd.abs().max(1.0), "{kind:?} param {i}: {} vs {fd}", grad[i]);
        }
    }
}

#[test]
fn sign_flip_leaves_losses_unchanged() {
    let fam = crease_family();
    let map = fam.lifting_map(0.5).unwrap();
    let net = small_net(7, 2, 3);
    let mut flipped = net.clone();
    let last = flipped.layers_mut().last_mut().unwrap();
    last.weight.row_mut(1).mapv_inplace(|v| -v);
    last.bias[1] = -last.bias[1];
    let pts = sample_domain(&fam, 0.5, 40, 8).unwrap();
    let w = vec![1.0; 40];
    let a = dirichlet_loss(&net, &map, &pts, &w, 0.5, 10.0).unwrap();
    let b = dirichlet_loss(&flipped, &map, &pts, &w, 0.5, 10.0).unwrap();
    assert_relative_eq!(a.total, b.total, max_relative = 1e-12);
    let a = hessian_energy_loss(&net, &map, &pts, 0.5, 10.0).unwrap();
    let b = hessian_energy_loss(&flipped, &map, &pts, 0.5, 10.0).unwrap();
    assert_relative_eq!(a.total, b.total, max_relative = 1e-12);
}

fn tiny_config(loss: LossKind, lambda_gram: f64, epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        batch: 64,
        alpha_samples: 2,
        learning_rate: 1e-3,
        lambda_gram,
        loss,
        seed: 3,
        ..TrainConfig::default()
    }
}

#[test]
fn training_without_penalty_flattens_the_field() {
    let fam = crease_family();
    let spec = small_net(0, 2, 2).spec().clone();
    let out = train_basis(&fam, spec, &tiny_config(LossKind::Dirichlet, 0.0, 150)).unwrap();
    let first = out.trace[..10].iter().map(|r| r.loss).sum::<f64>();
    let last = out.trace[out.trace.len() - 10..].iter().map(|r| r.loss).sum::<f64>();
    assert!(last < 0.05 * first, "{first} -> {last}");
}

#[test]
fn training_is_deterministic() {
    let fam = bar_family([0.0, 1.0]);
    let spec = small_net(0, 1, 2).spec().clone();
    let cfg = tiny_config(LossKind::Dirichlet, 10.0, 5);
    let a = train_basis(&fam, spec.clone(), &cfg).unwrap();
    let b = train_basis(&fam, spec, &cfg).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.network, b.network);
}

#[test]
fn training_rejects_bad_configs() {
    let fam = crease_family();
    let spec = small_net(0, 2, 2).spec().clone();
    let mut cfg = tiny_config(LossKind::Dirichlet, 1.0, 2);
    cfg.alpha_grid = Some(vec![2.0]);
    assert!(matches!(train_basis(&fam, spec.clone(), &cfg), Err(BasisError::InvalidConfig(_))));
    cfg.alpha_grid = None;
    cfg.batch = 3;
    assert!(train_basis(&fam, spec.clone(), &cfg).is_err());
    let spec1d = small_net(0, 1, 2).spec().clone();
    assert!(train_basis(&fam, spec1d, &tiny_config(LossKind::Dirichlet, 1.0, 2)).is_err());
}

#[test]
fn nan_loss_aborts_with_epoch() {
    let fam = crease_family();
    let mut net = small_net(0, 2, 2);
    net.layers_mut()[1].weight[[0, 0]] = f64::NAN;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let err = train_from(&fam, net, &tiny_config(LossKind::Dirichlet, 1.0, 3), &mut rng, |_| {}).unwrap_err();
    assert!(matches!(err, BasisError::NonFinite { epoch: 0, group: 0 }), "{err}");
}

#[test]
fn inference_shapes_and_repeatability() {
    let fam = crease_family();
    let net = small_net(1, 2, 3);
    let pts = sample_domain(&fam, 0.2, 50, 1).unwrap();
    let a = infer_basis(&net, &fam, &pts, 0.2).unwrap();
    let b = infer_basis(&net, &fam, &pts, 0.2).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.values.dim(), (50, 3));
    assert_eq!(a.gradient(0).shape(), (3, 2));
    let values = infer_values(&net, &fam, &pts, 0.2).unwrap();
    assert_eq!(values, a.values);
    assert!(matches!(
        infer_basis(&net, &fam, &pts, 1.5),
        Err(BasisError::AlphaOutOfRange { .. })
    ));
}

#[test]
fn alpha_change_moves_the_kink() {
    // Field = |lift height| plus a smooth part: the kink follows the interface.
    let fam = bar_family([0.0, 1.0]);
    let net = affine_net(1, array![[0.3, 1.0]], array![0.0]);
    for alpha in [0.2, 0.7] {
        let pts: Vec<Vec<f64>> = (0..=200).map(|i| vec![i as f64 / 200.0]).collect();
        let values = infer_values(&net, &fam, &pts, alpha).unwrap();
        let rows: Vec<Vec<f64>> = values.outer_iter().map(|r| r.to_vec()).collect();
        let at = crate::oracle::locate_kink(&rows).unwrap() as f64 / 200.0;
        assert!((at - (0.25 + 0.5 * alpha)).abs() <= 1.0 / 200.0, "α {alpha}: kink at {at}");
    }
}

#[test]
fn ritz_recovers_rotated_modes() {
    // Basis spanning {1, cos πx} mixed by a rotation: Ritz undoes the mixing.
    let pts: Vec<Vec<f64>> = (0..2000).map(|i| vec![(i as f64 + 0.5) / 2000.0]).collect();
    let pi = std::f64::consts::PI;
    let (c, s) = (0.6f64, 0.8f64);
    let modes = |x: f64| (1.0, 2f64.sqrt() * (pi * x).cos(), -2f64.sqrt() * pi * (pi * x).sin());
    let mut values = Array2::zeros((2000, 2));
    let mut grad = Array2::zeros((2000, 2));
    for (i, p) in pts.iter().enumerate() {
        let (a, b, db) = modes(p[0]);
        values[[i, 0]] = c * a + s * b;
        values[[i, 1]] = -s * a + c * b;
        grad[[i, 0]] = s * db;
        grad[[i, 1]] = c * db;
    }
    let set = BasisSet {
        alpha: 0.0,
        points: pts.clone(),
        values,
        grads: vec![grad],
    };
    let ritz = ritz_modes(&set, &vec![1.0; 2000]).unwrap();
    assert!(ritz.eigenvalues[0].abs() < 1e-8);
    assert_relative_eq!(ritz.eigenvalues[1], pi * pi, max_relative = 1e-5);
    let mode = ritz.mode_values(&set, 1);
    let sign = mode[0].signum();
    for (p, m) in pts.iter().zip(&mode) {
        assert!((sign * m - modes(p[0]).1).abs() < 1e-6);
    }
}

#[test]
fn lifting_map_matches_family() {
    let fam = bar_family([0.0, 1.0]);
    let map: LiftingMap = fam.lifting_map(0.5).unwrap();
    assert_eq!(map.interface().vertex(0), vec![0.5]);
}
