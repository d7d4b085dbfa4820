use super::{initial_xi, Iterate, Method, Recorder, SolverConfig, SolverReport, SolverStatus};
use crate::error::Result;
use crate::linalg::{dot, norm_inf};
use crate::solvers::wolfe::wolfe_line_search;
use crate::transport::TransportProblem;

/// `xi_{k+1} = xi_k + t_k d` evaluated into a fresh iterate.
pub(crate) fn step_along(prob: &TransportProblem, xi: &[f64], d: &[f64], t: f64) -> Result<Iterate> {
    let next: Vec<f64> = xi.iter().zip(d).map(|(x, di)| x + t * di).collect();
    Iterate::at(prob, &next)
}

/// Strong Wolfe search for `t -> J(xi + t d)` starting at `t_init`.
/// A zero slope (the direction only shifts all weights equally, which
/// leaves the diagram unchanged) takes the full step.
pub(crate) fn search_along(
    prob: &TransportProblem,
    it: &Iterate,
    d: &[f64],
    t_init: f64,
    config: &SolverConfig,
) -> Result<(f64, Iterate, usize)> {
    let dphi0 = dot(&it.assessment.j_grad, d);
    let outcome = wolfe_line_search(
        |t| {
            let next = step_along(prob, it.xi(), d, t)?;
            let slope = dot(&next.assessment.j_grad, d);
            Ok((next.j(), slope, next))
        },
        it.j(),
        dphi0.min(0.0),
        t_init,
        &config.wolfe,
    )?;
    if outcome.t == 0.0 {
        return Ok((1.0, step_along(prob, it.xi(), d, 1.0)?, 1));
    }
    match outcome.data {
        Some(next) => Ok((outcome.t, next, outcome.evaluations)),
        None => Ok((outcome.t, step_along(prob, it.xi(), d, outcome.t)?, outcome.evaluations + 1)),
    }
}

/// Fixed-point iteration `xi_{k+1} = xi_k + t_k r(xi_k)` with strong Wolfe
/// steps on `J`. Each search starts at the previously accepted step.
pub fn fixed_point_solve(prob: &TransportProblem, config: &SolverConfig) -> Result<SolverReport> {
    config.validate()?;
    let mut rec = Recorder::new();
    let mut it = Iterate::at(prob, &initial_xi(prob, &config.xi0)?)?;
    rec.record(&it, 0.0);
    let mut t_prev = 1.0;
    let mut k = 0;
    let status = loop {
        if it.residual_inf < config.tol_inf {
            break SolverStatus::Converged;
        }
        if k >= config.max_iter {
            break SolverStatus::MaxIterations;
        }
        let d = it.residual().to_vec();
        let (t, next, evals) = search_along(prob, &it, &d, t_prev, config)?;
        rec.evaluations += evals;
        t_prev = t;
        it = next;
        k += 1;
        rec.record(&it, t);
    };
    Ok(rec.finish(Method::FixedPoint, status, it, 0, config))
}

/// Constant-step iteration `xi_{k+1} = xi_k + tau r(xi_k)`.
///
/// Reports [`SolverStatus::Diverged`] when `|xi|_inf` leaves the ball of
/// radius `divergence_factor (1 + |xi0|_inf)`, when the residual grows by
/// `residual_growth_factor` over its smallest value so far, when the
/// smallest residual fails to halve within `stall_window` steps, or when
/// values stop being finite.
pub fn fixed_step_solve(prob: &TransportProblem, config: &SolverConfig) -> Result<SolverReport> {
    config.validate()?;
    let xi0 = initial_xi(prob, &config.xi0)?;
    let radius = config.divergence_factor * (1.0 + norm_inf(&xi0));
    let mut rec = Recorder::new();
    let mut it = Iterate::at(prob, &xi0)?;
    rec.record(&it, 0.0);
    let mut best = it.residual_inf;
    let (mut anchor, mut anchor_iter) = (it.residual_inf, 0);
    let mut k = 0;
    let status = loop {
        if it.residual_inf < config.tol_inf {
            break SolverStatus::Converged;
        }
        if k >= config.max_iter {
            break SolverStatus::MaxIterations;
        }
        let d = it.residual().to_vec();
        it = step_along(prob, it.xi(), &d, config.tau)?;
        rec.evaluations += 1;
        k += 1;
        rec.record(&it, config.tau);
        let blown_up = norm_inf(it.xi()) > radius || !it.residual_inf.is_finite() || !it.j().is_finite();
        if blown_up || it.residual_inf > config.residual_growth_factor * best {
            log::warn!("fixed-step iteration diverged at step {k}: |r| = {:.3e}", it.residual_inf);
            break SolverStatus::Diverged;
        }
        best = best.min(it.residual_inf);
        if best <= 0.5 * anchor {
            (anchor, anchor_iter) = (best, k);
        } else if config.stall_window > 0 && k - anchor_iter >= config.stall_window {
            log::warn!(
                "fixed-step iteration stalled: |r| has not halved in {} steps (best {best:.3e})",
                config.stall_window
            );
            break SolverStatus::Diverged;
        }
    };
    Ok(rec.finish(Method::FixedStep, status, it, 0, config))
}
