use crate::error::{Error, Result};

use super::wolfe::WolfeParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// `xi + t r(xi)` with a strong Wolfe step on `J`.
    FixedPoint,
    /// `xi + tau r(xi)` with constant `tau`.
    FixedStep,
    /// Semismooth Newton globalized by a strong Wolfe search on `J`.
    Newton,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::FixedPoint => "fixed-point",
            Method::FixedStep => "fixed-step",
            Method::Newton => "newton",
        }
    }
}

/// How the Newton system `Dr delta = -r` is solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearSolver {
    /// Dense LU up to `dense_cap` unknowns, GMRES beyond.
    Auto,
    Dense,
    Krylov,
}

/// Relative GMRES tolerance per Newton step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ForcingRule {
    /// `min(0.1, |r|_inf)`
    Superlinear,
    Constant(f64),
}

impl ForcingRule {
    pub fn eta(&self, residual_inf: f64) -> f64 {
        match *self {
            Self::Superlinear => residual_inf.min(0.1),
            Self::Constant(eta) => eta,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialGuess {
    /// `xi0 = A`, the Voronoi diagram of the sites.
    A,
    Zeros,
    Explicit(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub tol_inf: f64,
    pub max_iter: usize,
    /// Constant step of [`Method::FixedStep`].
    pub tau: f64,
    pub wolfe: WolfeParams,
    pub linear_solver: LinearSolver,
    pub dense_cap: usize,
    pub forcing: ForcingRule,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
    pub xi0: InitialGuess,
    /// Fixed-step runs stop as diverged once `|xi|_inf` exceeds this factor
    /// times `1 + |xi0|_inf`.
    pub divergence_factor: f64,
    /// Fixed-step runs also stop as diverged once `|r|_inf` exceeds this
    /// factor times the smallest residual seen so far.
    pub residual_growth_factor: f64,
    /// Fixed-step runs stop as diverged when the smallest residual has not
    /// halved for this many steps, which catches bounded oscillation. Zero
    /// disables the check.
    pub stall_window: usize,
    /// Tolerance of the degeneracy diagnostic at the final iterate,
    /// relative to the domain diameter.
    pub dc_tol: f64,
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            tol_inf: 1e-6,
            max_iter: match method {
                Method::FixedPoint => 5000,
                Method::FixedStep => 20000,
                Method::Newton => 100,
            },
            tau: 1e-2,
            wolfe: WolfeParams::default(),
            linear_solver: LinearSolver::Auto,
            dense_cap: 2000,
            forcing: ForcingRule::Superlinear,
            gmres_restart: 100,
            gmres_max_iter: 2000,
            xi0: InitialGuess::A,
            divergence_factor: 1e6,
            residual_growth_factor: 1e3,
            stall_window: 500,
            dc_tol: 1e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.wolfe.validate()?;
        if !(self.tol_inf > 0.0) {
            return Err(Error::InvalidInput(format!("tol_inf must be positive, got {}", self.tol_inf)));
        }
        if self.method == Method::FixedStep && !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidInput(format!("tau must be positive, got {}", self.tau)));
        }
        if let ForcingRule::Constant(eta) = self.forcing {
            if !(eta > 0.0 && eta < 1.0) {
                return Err(Error::InvalidInput(format!("forcing term must lie in (0, 1), got {eta}")));
            }
        }
        if self.gmres_restart == 0 {
            return Err(Error::InvalidInput("GMRES restart must be positive".into()));
        }
        if !(self.divergence_factor > 1.0 && self.residual_growth_factor > 1.0) {
            return Err(Error::InvalidInput("divergence factors must exceed 1".into()));
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::new(Method::Newton)
    }
}
