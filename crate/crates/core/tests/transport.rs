use std::sync::Arc;

use proptest::prelude::*;
use transport_control::geometry::{ConvexPolygon, Point2, SiteSet};
use transport_control::objective::ZeroObjective;
use transport_control::oracle::oracle_w2;
use transport_control::{DensityModel, TransportProblem};

fn problem(points: Vec<Point2>, density: DensityModel) -> TransportProblem {
    let n = points.len();
    let domain = ConvexPolygon::rectangle(Point2::new(-1.0, -1.0), Point2::new(1.0, 1.0)).unwrap();
    TransportProblem::new(domain, SiteSet::new(points).unwrap(), density, 1.0, Arc::new(ZeroObjective::new(n))).unwrap()
}

fn instance() -> impl Strategy<Value = (Vec<Point2>, Vec<f64>)> {
    (2usize..12).prop_flat_map(|n| {
        (
            prop::collection::vec((-0.95f64..0.95, -0.95f64..0.95).prop_map(|(x, y)| Point2::new(x, y)), n),
            prop::collection::vec(-0.3f64..0.3, n),
        )
    })
}

fn separated(points: &[Point2]) -> bool {
    points.iter().enumerate().all(|(i, p)| points[..i].iter().all(|q| p.distance(*q) > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn theta_is_symmetric_with_zero_row_sums((points, dxi) in instance()) {
        prop_assume!(separated(&points));
        let p = problem(points, DensityModel::lebesgue());
        let xi: Vec<f64> = p.a_vector().iter().zip(&dxi).map(|(a, d)| a + d).collect();
        let theta = p.theta(&xi).unwrap().to_dense();
        let n = p.n();
        for i in 0..n {
            let row: f64 = (0..n).map(|j| theta[(i, j)]).sum();
            let scale = theta[(i, i)].abs().max(1.0);
            prop_assert!(row.abs() <= 1e-12 * scale, "row {} sums to {}", i, row);
            prop_assert!(theta[(i, i)] <= 0.0);
            for j in 0..n {
                prop_assert!((theta[(i, j)] - theta[(j, i)]).abs() <= 1e-12 * scale);
                if i != j {
                    prop_assert!(theta[(i, j)] >= 0.0);
                }
            }
        }
    }

    #[test]
    fn masses_and_cost_ignore_a_common_shift((points, dxi) in instance(), shift in -3.0f64..3.0) {
        prop_assume!(separated(&points));
        let p = problem(points, DensityModel::lebesgue());
        let xi: Vec<f64> = p.a_vector().iter().zip(&dxi).map(|(a, d)| a + d).collect();
        let moved: Vec<f64> = xi.iter().map(|v| v + shift).collect();
        let (u, v) = (p.u_tilde(&xi).unwrap(), p.u_tilde(&moved).unwrap());
        for (a, b) in u.iter().zip(v.iter()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        prop_assert!((p.w_value(&xi).unwrap() - p.w_value(&moved).unwrap()).abs() <= 1e-12);
        prop_assert!(p.w_value(&xi).unwrap() >= 0.0);
    }
}

#[test]
fn single_site_at_the_origin() {
    let p = problem(vec![Point2::ORIGIN], DensityModel::lebesgue());
    assert_eq!(p.u_tilde(&[0.3]).unwrap().total(), 4.0);
    assert!((p.w_value(&[0.3]).unwrap() - 8.0 / 3.0).abs() < 1e-15);
}

#[test]
fn oracle_agrees_for_a_smooth_density() {
    let rho = DensityModel::evaluable(|p: Point2| 1.0 + 0.5 * p.x * p.y + 0.25 * p.x, 6);
    let points = vec![Point2::new(-0.5, -0.4), Point2::new(0.6, -0.2), Point2::new(0.1, 0.7), Point2::new(-0.3, 0.3)];
    let p = problem(points, rho);
    let xi: Vec<f64> = p.a_vector().iter().zip([0.05, -0.1, 0.0, 0.08]).map(|(a, d)| a + d).collect();
    let w = p.w_value(&xi).unwrap();
    let errors: Vec<f64> = [32, 64, 128].iter().map(|&m| (oracle_w2(&p, &xi, m).unwrap() - w).abs() / w).collect();
    assert!(errors[2] <= 2e-2, "{errors:?}");
    assert!(errors[2] <= errors[0], "{errors:?}");
}
