use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::Arc;

use super::system::FemSystem;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::linalg::dot;
use crate::objective::ObjectiveModel;

/// Closed-form desired states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DesiredState {
    /// `1/2 cos(π x/2) cos(π y/2) exp(y)`
    Standard,
    Zero,
    /// `1/4 cos(π x/2 + π) sin(π y)`
    Second,
}

impl DesiredState {
    pub fn eval(self, p: Point2) -> f64 {
        match self {
            Self::Standard => 0.5 * (PI * p.x / 2.0).cos() * (PI * p.y / 2.0).cos() * p.y.exp(),
            Self::Zero => 0.0,
            Self::Second => 0.25 * (PI * p.x / 2.0 + PI).cos() * (PI * p.y).sin(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Standard => "standard",
            Self::Zero => "zero",
            Self::Second => "second",
        }
    }
}

impl FromStr for DesiredState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "zero" => Ok(Self::Zero),
            "second" => Ok(Self::Second),
            other => Err(Error::InvalidInput(format!("unknown desired state '{other}'"))),
        }
    }
}

/// `g(u) = 1/2 (y - y_d)^T M (y - y_d)` with `K y = B u`.
#[derive(Clone, Debug)]
pub struct TrackingObjective {
    system: Arc<FemSystem>,
    y_d: Vec<f64>,
}

impl TrackingObjective {
    /// `y_d` holds interior nodal values.
    pub fn new(system: Arc<FemSystem>, y_d: Vec<f64>) -> Result<Self> {
        crate::error::check_len(system.num_dofs(), y_d.len())?;
        Ok(Self { system, y_d })
    }

    pub fn from_state(system: Arc<FemSystem>, desired: DesiredState) -> Self {
        let y_d = system.interpolate(|p| desired.eval(p));
        Self { system, y_d }
    }

    pub fn system(&self) -> &Arc<FemSystem> {
        &self.system
    }

    pub fn desired(&self) -> &[f64] {
        &self.y_d
    }

    /// Interior state `K^{-1} B u`.
    pub fn state(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.system.solve_state(u)
    }

    fn misfit(&self, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let y = self.state(u)?;
        let e: Vec<f64> = y.iter().zip(&self.y_d).map(|(a, b)| a - b).collect();
        let me = self.system.mass().matvec(&e);
        Ok((e, me))
    }

    fn gradient_from(&self, me: &[f64]) -> Result<Vec<f64>> {
        self.system.apply_bt(&self.system.solve_transpose(me)?)
    }
}

impl ObjectiveModel for TrackingObjective {
    fn dim(&self) -> usize {
        self.system.num_controls()
    }

    fn value(&self, u: &[f64]) -> Result<f64> {
        let (e, me) = self.misfit(u)?;
        Ok(0.5 * dot(&e, &me))
    }

    fn grad(&self, u: &[f64]) -> Result<Vec<f64>> {
        let (_, me) = self.misfit(u)?;
        self.gradient_from(&me)
    }

    fn value_and_grad(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (e, me) = self.misfit(u)?;
        Ok((0.5 * dot(&e, &me), self.gradient_from(&me)?))
    }

    /// `B^T K^{-T} M K^{-1} B v`; independent of `u`.
    fn hess_apply(&self, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_len(self.dim(), u.len())?;
        let w = self.system.solve_state(v)?;
        self.gradient_from(&self.system.mass().matvec(&w))
    }
}

/// Product of two tracking terms sharing one state equation.
#[derive(Clone, Debug)]
pub struct ProductObjective {
    first: TrackingObjective,
    second: TrackingObjective,
}

impl ProductObjective {
    pub fn new(first: TrackingObjective, second: TrackingObjective) -> Result<Self> {
        if !Arc::ptr_eq(first.system(), second.system()) {
            return Err(Error::InvalidInput("product factors must share one FEM system".into()));
        }
        Ok(Self { first, second })
    }

    pub fn factors(&self) -> (&TrackingObjective, &TrackingObjective) {
        (&self.first, &self.second)
    }
}

impl ObjectiveModel for ProductObjective {
    fn dim(&self) -> usize {
        self.first.dim()
    }

    fn value(&self, u: &[f64]) -> Result<f64> {
        Ok(self.first.value(u)? * self.second.value(u)?)
    }

    fn grad(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.value_and_grad(u)?.1)
    }

    fn value_and_grad(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        // both factors share the state solve
        let y = self.first.state(u)?;
        let sys = self.first.system();
        let parts = |y_d: &[f64]| -> Result<(f64, Vec<f64>)> {
            let e: Vec<f64> = y.iter().zip(y_d).map(|(a, b)| a - b).collect();
            let me = sys.mass().matvec(&e);
            Ok((0.5 * dot(&e, &me), sys.apply_bt(&sys.solve_transpose(&me)?)?))
        };
        let (g1, d1) = parts(self.first.desired())?;
        let (g2, d2) = parts(self.second.desired())?;
        let grad = d1.iter().zip(&d2).map(|(a, b)| g2 * a + g1 * b).collect();
        Ok((g1 * g2, grad))
    }

    fn hess_apply(&self, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let (g1, d1) = self.first.value_and_grad(u)?;
        let (g2, d2) = self.second.value_and_grad(u)?;
        // both factors have the same Hessian
        let hv = self.first.hess_apply(u, v)?;
        let (s1, s2) = (dot(&d1, v), dot(&d2, v));
        Ok((0..hv.len()).map(|k| (g1 + g2) * hv[k] + s1 * d2[k] + s2 * d1[k]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{assemble_fem, build_structured_mesh};
    use super::*;

    fn system(beta: Point2) -> Arc<FemSystem> {
        let mesh = build_structured_mesh(Point2::new(-1.0, -1.0), Point2::new(1.0, 1.0), 2).unwrap();
        Arc::new(assemble_fem(mesh, beta, None).unwrap())
    }

    fn sample(n: usize, seed: f64) -> Vec<f64> {
        (0..n).map(|k| ((k as f64 + 1.0) * seed).sin().abs() * 0.1).collect()
    }

    fn fd_check(g: &dyn ObjectiveModel, u: &[f64], tol: f64) {
        let grad = g.grad(u).unwrap();
        let dir = sample(u.len(), 0.71);
        let h = 1e-5;
        let shift = |s: f64| u.iter().zip(&dir).map(|(a, d)| a + s * d).collect::<Vec<_>>();
        let fd = (g.value(&shift(h)).unwrap() - g.value(&shift(-h)).unwrap()) / (2.0 * h);
        let an = dot(&grad, &dir);
        assert!((fd - an).abs() <= tol * an.abs().max(1e-8), "fd {fd} vs {an}");
        let hv = g.hess_apply(u, &dir).unwrap();
        let gp = g.grad(&shift(h)).unwrap();
        let gm = g.grad(&shift(-h)).unwrap();
        for k in 0..u.len() {
            let fdk = (gp[k] - gm[k]) / (2.0 * h);
            assert!((fdk - hv[k]).abs() <= 1e-5 * hv.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-10));
        }
    }

    #[test]
    fn desired_states() {
        assert!((DesiredState::Standard.eval(Point2::ORIGIN) - 0.5).abs() < 1e-15);
        for y in [-1.0, 0.0, 1.0] {
            assert!(DesiredState::Second.eval(Point2::new(0.3, y)).abs() < 1e-15);
        }
        assert_eq!("second".parse::<DesiredState>().unwrap(), DesiredState::Second);
        assert!("sinusoid".parse::<DesiredState>().is_err());
    }

    #[test]
    fn tracking_value_at_zero_control() {
        let sys = system(Point2::ORIGIN);
        let g = TrackingObjective::from_state(sys.clone(), DesiredState::Standard);
        let yd = g.desired().to_vec();
        let expected = 0.5 * dot(&yd, &sys.mass().matvec(&yd));
        assert!((g.value(&vec![0.0; g.dim()]).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn tracking_derivatives_match_finite_differences() {
        for beta in [Point2::ORIGIN, Point2::new(16.0, 32.0)] {
            let g = TrackingObjective::from_state(system(beta), DesiredState::Standard);
            fd_check(&g, &sample(g.dim(), 0.37), 1e-6);
        }
    }

    #[test]
    fn tracking_hessian_is_symmetric_and_psd() {
        let g = TrackingObjective::from_state(system(Point2::new(1.0, 2.0)), DesiredState::Standard);
        let u = sample(g.dim(), 0.2);
        let (v, w) = (sample(g.dim(), 1.3), sample(g.dim(), 2.9));
        let hv = g.hess_apply(&u, &v).unwrap();
        let hw = g.hess_apply(&u, &w).unwrap();
        assert!((dot(&hv, &w) - dot(&v, &hw)).abs() < 1e-10);
        assert!(dot(&hv, &v) >= -1e-10);
    }

    #[test]
    fn product_derivatives_match_finite_differences() {
        let sys = system(Point2::ORIGIN);
        let g = ProductObjective::new(
            TrackingObjective::from_state(sys.clone(), DesiredState::Standard),
            TrackingObjective::from_state(sys, DesiredState::Second),
        )
        .unwrap();
        fd_check(&g, &sample(g.dim(), 0.53), 1e-6);
    }

    #[test]
    fn product_requires_a_shared_system() {
        let a = TrackingObjective::from_state(system(Point2::ORIGIN), DesiredState::Standard);
        let b = TrackingObjective::from_state(system(Point2::ORIGIN), DesiredState::Second);
        assert!(ProductObjective::new(a, b).is_err());
    }
}
