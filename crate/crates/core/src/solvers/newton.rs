use super::fixed_point::search_along;
use super::{initial_xi, Iterate, LinearSolver, Method, Recorder, SolverConfig, SolverReport, SolverStatus};
use crate::error::{Error, Result};
use crate::linalg::{dot, gmres, norm2};
use crate::transport::TransportProblem;

fn breakdown(iteration: usize, reason: impl std::fmt::Display) -> Error {
    Error::NewtonBreakdown { iteration, reason: reason.to_string() }
}

/// Solves `Dr(xi) delta = -r(xi)`.
fn newton_direction(prob: &TransportProblem, it: &Iterate, config: &SolverConfig, k: usize) -> Result<Vec<f64>> {
    let rhs: Vec<f64> = it.residual().iter().map(|v| -v).collect();
    let dense = match config.linear_solver {
        LinearSolver::Dense => true,
        LinearSolver::Krylov => false,
        LinearSolver::Auto => prob.n() <= config.dense_cap,
    };
    if dense {
        let dr = prob.dense_dr(&it.ev).map_err(|e| breakdown(k, e))?;
        return dr.solve(&rhs).map_err(|e| breakdown(k, e));
    }
    let eta = config.forcing.eta(it.residual_inf);
    let tol = eta * norm2(&rhs);
    let out = gmres(|v| prob.dr_apply_at(&it.ev, v), &rhs, tol, config.gmres_restart, config.gmres_max_iter)
        .map_err(|e| breakdown(k, e))?;
    log::debug!("GMRES: {} iterations, relative residual {:.2e}", out.iterations, out.residual_norm / norm2(&rhs));
    if !out.converged {
        if out.residual_norm < norm2(&rhs) {
            log::warn!("GMRES stopped at relative residual {:.2e} (target {eta:.2e})", out.residual_norm / norm2(&rhs));
        } else {
            return Err(breakdown(k, "GMRES made no progress"));
        }
    }
    Ok(out.x)
}

/// Semismooth Newton iteration on `r`, globalized by a strong Wolfe search
/// on `J` that always tries the unit step first. A direction with positive
/// slope of `J` is replaced by `r(xi_k)` for that iteration.
pub fn newton_solve(prob: &TransportProblem, config: &SolverConfig) -> Result<SolverReport> {
    config.validate()?;
    let mut rec = Recorder::new();
    let mut it = Iterate::at(prob, &initial_xi(prob, &config.xi0)?)?;
    rec.record(&it, 0.0);
    let mut fallbacks = 0;
    let mut k = 0;
    let status = loop {
        if it.residual_inf < config.tol_inf {
            break SolverStatus::Converged;
        }
        if k >= config.max_iter {
            break SolverStatus::MaxIterations;
        }
        let mut d = newton_direction(prob, &it, config, k)?;
        let slope = dot(&it.assessment.j_grad, &d);
        if !(slope <= 0.0) {
            log::warn!("Newton direction is not a descent direction at iteration {k} (slope {slope:.3e}); using r");
            fallbacks += 1;
            d = it.residual().to_vec();
        }
        let (t, next, evals) = search_along(prob, &it, &d, 1.0, config).map_err(|e| breakdown(k, e))?;
        rec.evaluations += evals;
        it = next;
        k += 1;
        rec.record(&it, t);
    };
    Ok(rec.finish(Method::Newton, status, it, fallbacks, config))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{ConvexPolygon, Point2, SiteSet};
    use crate::objective::ZeroObjective;
    use crate::quadrature::DensityModel;
    use crate::solvers::InitialGuess;

    #[test]
    fn one_step_for_zero_objective() {
        let sites = SiteSet::new(vec![Point2::new(0.3, 0.2), Point2::new(-0.5, 0.1), Point2::new(0.1, -0.7)]).unwrap();
        let d = ConvexPolygon::rectangle(Point2::new(-1.0, -1.0), Point2::new(1.0, 1.0)).unwrap();
        let prob =
            TransportProblem::new(d, sites, DensityModel::lebesgue(), 1e-3, Arc::new(ZeroObjective::new(3))).unwrap();
        for linear_solver in [LinearSolver::Dense, LinearSolver::Krylov] {
            let mut cfg = SolverConfig::new(Method::Newton);
            cfg.linear_solver = linear_solver;
            cfg.xi0 = InitialGuess::Explicit(vec![0.2, -0.1, 0.3]);
            let rep = newton_solve(&prob, &cfg).unwrap();
            assert!(rep.converged());
            assert_eq!(rep.iterations, 1);
            assert_eq!(rep.log[1].step, 1.0);
        }
    }
}
