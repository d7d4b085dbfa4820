//! Root finders for the residual `r(xi) = 0`.

mod config;
mod fixed_point;
mod newton;
mod wolfe;

use std::time::Instant;

pub use config::{ForcingRule, InitialGuess, LinearSolver, Method, SolverConfig};
pub use fixed_point::{fixed_point_solve, fixed_step_solve};
pub use newton::newton_solve;
pub use wolfe::{wolfe_line_search, LineSearchOutcome, WolfeParams};

use crate::error::{check_len, Result};
use crate::geometry::{dc_diagnostic, Point2};
use crate::linalg::norm_inf;
use crate::transport::{Assessment, Evaluation, TransportProblem};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverStatus {
    Converged,
    MaxIterations,
    Diverged,
}

impl SolverStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::MaxIterations => "max_iterations",
            Self::Diverged => "diverged",
        }
    }
}

/// One row of the iteration log; row `k` describes iterate `xi_k` and the
/// step that produced it (`0` for the initial guess).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub residual_inf: f64,
    pub j: f64,
    pub step: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct SolverReport {
    pub method: Method,
    pub status: SolverStatus,
    /// Number of steps taken; the log has `iterations + 1` rows.
    pub iterations: usize,
    pub log: Vec<IterationRecord>,
    pub xi: Vec<f64>,
    pub u: Vec<f64>,
    pub residual_inf: f64,
    pub j: f64,
    /// Evaluations of the tessellation and residual, including the initial
    /// guess and all line-search trials.
    pub evaluations: usize,
    /// Iterations in which the Newton direction was replaced by `r`.
    pub descent_fallbacks: usize,
    /// Points violating the differentiability condition at the final iterate.
    pub dc_violations: Vec<Point2>,
    pub seconds: f64,
}

impl SolverReport {
    pub fn converged(&self) -> bool {
        self.status == SolverStatus::Converged
    }

    /// `|r_{k+1}|_inf / |r_k|_inf` along the log.
    pub fn residual_ratios(&self) -> Vec<f64> {
        self.log.windows(2).map(|w| w[1].residual_inf / w[0].residual_inf).collect()
    }
}

/// Runs the method selected in `config`.
pub fn solve(prob: &TransportProblem, config: &SolverConfig) -> Result<SolverReport> {
    match config.method {
        Method::FixedPoint => fixed_point_solve(prob, config),
        Method::FixedStep => fixed_step_solve(prob, config),
        Method::Newton => newton_solve(prob, config),
    }
}

/// Evaluation plus objective-dependent quantities at one iterate.
#[derive(Clone, Debug)]
pub(crate) struct Iterate {
    pub ev: Evaluation,
    pub assessment: Assessment,
    pub residual_inf: f64,
}

impl Iterate {
    pub fn at(prob: &TransportProblem, xi: &[f64]) -> Result<Self> {
        let ev = prob.evaluate(xi)?;
        let assessment = prob.assess(&ev)?;
        let residual_inf = norm_inf(&assessment.residual);
        Ok(Self { ev, assessment, residual_inf })
    }

    pub fn xi(&self) -> &[f64] {
        &self.ev.xi
    }

    pub fn residual(&self) -> &[f64] {
        &self.assessment.residual
    }

    pub fn j(&self) -> f64 {
        self.assessment.j
    }
}

pub(crate) fn initial_xi(prob: &TransportProblem, rule: &InitialGuess) -> Result<Vec<f64>> {
    Ok(match rule {
        InitialGuess::A => prob.a_vector().to_vec(),
        InitialGuess::Zeros => vec![0.0; prob.n()],
        InitialGuess::Explicit(v) => {
            check_len(prob.n(), v.len())?;
            v.clone()
        }
    })
}

/// Accumulates the iteration log.
pub(crate) struct Recorder {
    start: Instant,
    log: Vec<IterationRecord>,
    pub evaluations: usize,
}

impl Recorder {
    pub fn new() -> Self {
        Self { start: Instant::now(), log: Vec::new(), evaluations: 1 }
    }

    pub fn record(&mut self, it: &Iterate, step: f64) {
        let rec = IterationRecord {
            iter: self.log.len(),
            residual_inf: it.residual_inf,
            j: it.j(),
            step,
            seconds: self.start.elapsed().as_secs_f64(),
        };
        log::debug!("iter {:>5}  |r| {:.3e}  J {:.10e}  step {:.3e}", rec.iter, rec.residual_inf, rec.j, rec.step);
        self.log.push(rec);
    }

    pub fn finish(
        self,
        method: Method,
        status: SolverStatus,
        it: Iterate,
        descent_fallbacks: usize,
        config: &SolverConfig,
    ) -> SolverReport {
        let tol = config.dc_tol * it.ev.tessellation.domain().diameter();
        let dc_violations = dc_diagnostic(&it.ev.tessellation, tol);
        let seconds = self.start.elapsed().as_secs_f64();
        log::info!(
            "{method:?}: {} after {} iterations, |r| = {:.3e}, {:.2}s",
            status.as_str(),
            self.log.len().saturating_sub(1),
            it.residual_inf,
            seconds
        );
        SolverReport {
            method,
            status,
            iterations: self.log.len().saturating_sub(1),
            log: self.log,
            residual_inf: it.residual_inf,
            j: it.j(),
            u: it.ev.mass.to_vec(),
            xi: it.ev.xi,
            evaluations: self.evaluations,
            descent_fallbacks,
            dc_violations,
            seconds,
        }
    }
}
