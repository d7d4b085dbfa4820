use std::sync::Arc;

use transport_control::fem::{assemble_fem, build_structured_mesh, DesiredState, TrackingObjective};
use transport_control::geometry::{ConvexPolygon, Point2};
use transport_control::ObjectiveModel;

fn system(beta: Point2, observation: Option<&ConvexPolygon>) -> transport_control::fem::FemSystem {
    let mesh = build_structured_mesh(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0), 3).unwrap();
    assemble_fem(mesh, beta, observation).unwrap()
}

#[test]
fn diffusion_stiffness_is_symmetric() {
    let sys = system(Point2::ORIGIN, None);
    let k = sys.stiffness();
    for (i, j, v) in k.triplets() {
        assert!((v - k.get(j, i)).abs() <= 1e-12 * v.abs().max(1.0));
    }
}

#[test]
fn convection_adds_a_skew_part() {
    let beta = Point2::new(16.0, 32.0);
    let (k0, kb) = (system(Point2::ORIGIN, None), system(beta, None));
    let (k0, kb) = (k0.stiffness(), kb.stiffness());
    let mut asymmetric = false;
    for (i, j, v) in kb.triplets() {
        let c = v - k0.get(i, j);
        let ct = kb.get(j, i) - k0.get(j, i);
        assert!((c + ct).abs() <= 1e-10, "convection part not skew at ({i}, {j})");
        asymmetric |= (v - kb.get(j, i)).abs() > 1e-6;
    }
    assert!(asymmetric);
}

#[test]
fn tracking_gradient_and_hessian_match_differences() {
    let obs = ConvexPolygon::rectangle(Point2::new(0.55, 0.7), Point2::new(0.65, 0.8)).unwrap();
    let sys = Arc::new(system(Point2::new(1.0, 2.0), Some(&obs)));
    let g = TrackingObjective::from_state(sys.clone(), DesiredState::Standard);
    let n = g.dim();
    let u: Vec<f64> = (0..n).map(|i| ((i * 7 % 13) as f64) / 13.0).collect();
    let v: Vec<f64> = (0..n).map(|i| ((i * 5 % 11) as f64) / 11.0 - 0.5).collect();
    let h = 1e-6;
    let at = |t: f64| -> Vec<f64> { u.iter().zip(&v).map(|(a, b)| a + t * b).collect() };
    let fd = (g.value(&at(h)).unwrap() - g.value(&at(-h)).unwrap()) / (2.0 * h);
    let exact: f64 = g.grad(&u).unwrap().iter().zip(&v).map(|(a, b)| a * b).sum();
    assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-8), "{fd} vs {exact}");
    let (gp, gm) = (g.grad(&at(h)).unwrap(), g.grad(&at(-h)).unwrap());
    let hv = g.hess_apply(&u, &v).unwrap();
    let scale = hv.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-12);
    for i in 0..n {
        assert!(((gp[i] - gm[i]) / (2.0 * h) - hv[i]).abs() <= 1e-6 * scale);
    }
}

#[test]
fn unit_mass_at_an_interior_node_gives_a_positive_state() {
    let sys = system(Point2::ORIGIN, None);
    let mut u = vec![0.0; sys.num_controls()];
    let centre = sys
        .control_nodes()
        .iter()
        .position(|&k| sys.mesh().nodes()[k].distance(Point2::new(0.5, 0.5)) < 1e-12)
        .unwrap();
    u[centre] = 1.0;
    let y = sys.solve_state(&u).unwrap();
    assert!(y.iter().all(|&v| v >= -1e-14));
    assert!(y.iter().any(|&v| v > 0.0));
}
