//! Property checks on small built-in instances.

use std::sync::Arc;

use anyhow::Result;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use transport_control::geometry::{dc_diagnostic, ConvexPolygon, Point2, SiteSet};
use transport_control::linalg::{norm_inf, DenseMatrix};
use transport_control::objective::{ObjectiveModel, QuadraticObjective};
use transport_control::oracle::{min_cost_transport, sample_density};
use transport_control::quadrature::DensityModel;
use transport_control::TransportProblem;

/// Relative tolerance of the oracle comparison at `m = 64`. The sampling
/// error is second order in the grid width, about `3e-4` on these
/// instances.
pub const ORACLE_TOL: f64 = 1e-2;
const FD_TOL: f64 = 1e-5;
const MASS_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug)]
pub struct Options {
    /// Multiplies `Theta` before it is compared with finite differences;
    /// `-1` plants a sign error to check that the suite notices.
    pub theta_sign: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self { theta_sign: 1.0 }
    }
}

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn square() -> ConvexPolygon {
    ConvexPolygon::rectangle(Point2::new(-1.0, -1.0), Point2::new(1.0, 1.0)).expect("square")
}

/// Six sites with a quadratic objective and weights near the Voronoi
/// weights, resampled until the differentiability condition holds.
fn instances(count: usize) -> Result<Vec<(TransportProblem, Vec<f64>)>> {
    let mut rng = StdRng::seed_from_u64(7);
    let mut out = Vec::new();
    while out.len() < count {
        let n = 6;
        let pts: Vec<Point2> =
            (0..n).map(|_| Point2::new(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9))).collect();
        if (0..n).any(|i| (i + 1..n).any(|j| pts[i].distance(pts[j]) < 0.1)) {
            continue;
        }
        let mut q = DenseMatrix::zeros(n);
        for i in 0..n {
            q[(i, i)] = 1.0 + i as f64 / n as f64;
        }
        let g: Arc<dyn ObjectiveModel> = Arc::new(QuadraticObjective::new(q, vec![0.5; n])?);
        let prob = TransportProblem::new(square(), SiteSet::new(pts)?, DensityModel::lebesgue(), 0.5, g)?;
        let xi: Vec<f64> = prob.a_vector().iter().map(|a| a + rng.gen_range(-0.1..0.1)).collect();
        if dc_diagnostic(&prob.evaluate(&xi)?.tessellation, 1e-4).is_empty() {
            out.push((prob, xi));
        }
    }
    Ok(out)
}

fn shifted(xi: &[f64], j: usize, h: f64) -> Vec<f64> {
    let mut v = xi.to_vec();
    v[j] += h;
    v
}

fn fd_jacobian(opts: Options) -> Result<Check> {
    let h = 1e-6;
    let (mut theta_err, mut grad_err) = (0.0f64, 0.0f64);
    for (prob, xi) in instances(4)? {
        let n = prob.n();
        let theta = prob.theta(&xi)?.to_dense();
        let grad = prob.j_grad(&xi)?;
        let mut fd_grad = Vec::with_capacity(n);
        for j in 0..n {
            let (p, m) = (shifted(&xi, j, h), shifted(&xi, j, -h));
            let (up, down) = (prob.u_tilde(&p)?, prob.u_tilde(&m)?);
            for i in 0..n {
                let fd = (up[i] - down[i]) / (2.0 * h);
                theta_err = theta_err.max((fd - opts.theta_sign * theta[(i, j)]).abs());
            }
            fd_grad.push((prob.j_value(&p)? - prob.j_value(&m)?) / (2.0 * h));
        }
        let diff: Vec<f64> = fd_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        grad_err = grad_err.max(norm_inf(&diff) / norm_inf(&grad).max(1e-12));
    }
    Ok(Check {
        name: "finite-difference Jacobian",
        pass: theta_err <= FD_TOL && grad_err <= FD_TOL,
        detail: format!("Theta deviation {theta_err:.1e}, J gradient rel. deviation {grad_err:.1e} (tol {FD_TOL:.0e})"),
    })
}

fn oracle() -> Result<Check> {
    let m = 64;
    let (mut worst, mut gap) = (0.0f64, 0.0f64);
    let cloud = sample_density(&square(), &DensityModel::lebesgue(), m)?;
    for (prob, xi) in instances(3)? {
        let ev = prob.evaluate(&xi)?;
        let plan = min_cost_transport(&cloud, prob.sites().points(), &ev.mass)?;
        worst = worst.max((plan.cost - ev.w).abs() / ev.w);
        gap = gap.max(plan.duality_gap() / (1.0 + plan.cost));
    }
    Ok(Check {
        name: "transport-cost oracle",
        pass: worst <= ORACLE_TOL && gap <= 1e-9,
        detail: format!("rel. deviation at m = {m}: {worst:.1e} (tol {ORACLE_TOL:.0e}), duality gap {gap:.1e}"),
    })
}

fn conservation() -> Result<Check> {
    let mut rng = StdRng::seed_from_u64(11);
    let (mut worst, mut negative) = (0.0f64, false);
    for (prob, _) in instances(2)? {
        for _ in 0..25 {
            let xi: Vec<f64> = (0..prob.n()).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let u = prob.u_tilde(&xi)?;
            worst = worst.max((u.total() - prob.total_mass()).abs() / prob.total_mass());
            negative |= u.iter().any(|&v| v < 0.0);
        }
    }
    Ok(Check {
        name: "mass conservation",
        pass: worst <= MASS_TOL && !negative,
        detail: format!("rel. mass defect {worst:.1e} (tol {MASS_TOL:.0e}), negative masses: {negative}"),
    })
}

pub fn run(opts: Options) -> Result<Vec<Check>> {
    Ok(vec![fd_jacobian(opts)?, oracle()?, conservation()?])
}
