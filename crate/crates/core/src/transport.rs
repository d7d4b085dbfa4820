//! Mass map, transport cost, generalized Jacobian and residual of the
//! weight-parametrized control problem.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::geometry::{build_tessellation, ConvexPolygon, Point2, SiteSet, Tessellation};
use crate::linalg::{dot, DenseMatrix};
use crate::objective::ObjectiveModel;
use crate::quadrature::{mass_and_moment, polygon_density_integral, segment_density_integral, DensityModel, Integrand};

/// Masses of the prior inside the cells, one entry per site.
#[derive(Clone, Debug, PartialEq)]
pub struct MassVector(Vec<f64>);

impl MassVector {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for MassVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Symmetric sparse matrix `Theta`: nonnegative off-diagonal entries on the
/// inner edges and diagonal equal to the negative row sum.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaMatrix {
    n: usize,
    off_diagonal: Vec<(usize, usize, f64)>,
    diagonal: Vec<f64>,
}

impl ThetaMatrix {
    /// Assembles the matrix from `(i, j, weight)` with `i < j`.
    pub fn from_edges(n: usize, off_diagonal: Vec<(usize, usize, f64)>) -> Self {
        let mut diagonal = vec![0.0; n];
        for &(i, j, w) in &off_diagonal {
            diagonal[i] -= w;
            diagonal[j] -= w;
        }
        Self { n, off_diagonal, diagonal }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Upper-triangular off-diagonal entries `(i, j, Q_ij)`.
    pub fn off_diagonal(&self) -> &[(usize, usize, f64)] {
        &self.off_diagonal
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.diagonal.iter().zip(v).map(|(d, x)| d * x).collect();
        for &(i, j, w) in &self.off_diagonal {
            out[i] += w * v[j];
            out[j] += w * v[i];
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n);
        for (i, &d) in self.diagonal.iter().enumerate() {
            m[(i, i)] = d;
        }
        for &(i, j, w) in &self.off_diagonal {
            m[(i, j)] += w;
            m[(j, i)] += w;
        }
        m
    }

    /// Column `k` as a sparse list.
    fn column(&self, k: usize, adjacency: &[Vec<(usize, f64)>]) -> Vec<(usize, f64)> {
        let mut col = vec![(k, self.diagonal[k])];
        col.extend(adjacency[k].iter().copied());
        col
    }

    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j, w) in &self.off_diagonal {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        adj
    }
}

/// Everything that depends on `xi` alone (not on the objective).
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub xi: Vec<f64>,
    pub tessellation: Tessellation,
    pub mass: MassVector,
    /// `int_{D_i} x du_d` per cell.
    pub moments: Vec<Point2>,
    /// Transport cost `W(xi)`.
    pub w: f64,
    pub theta: ThetaMatrix,
}

/// Objective-dependent quantities at an evaluation point.
#[derive(Clone, Debug)]
pub struct Assessment {
    pub g: f64,
    pub grad_g: Vec<f64>,
    pub residual: Vec<f64>,
    /// `J = g(u(xi)) + alpha/2 W(xi)`
    pub j: f64,
    /// `alpha Theta r`
    pub j_grad: Vec<f64>,
}

/// Sites, prior and objective of the weight-parametrized problem
/// `min_xi g(u(xi)) + alpha/2 W(xi)`.
#[derive(Clone)]
pub struct TransportProblem {
    domain: ConvexPolygon,
    sites: SiteSet,
    density: DensityModel,
    alpha: f64,
    a: Vec<f64>,
    objective: Arc<dyn ObjectiveModel>,
    total_mass: f64,
    second_moment: f64,
}

impl fmt::Debug for TransportProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransportProblem")
            .field("n", &self.sites.len())
            .field("alpha", &self.alpha)
            .field("density", &self.density)
            .field("total_mass", &self.total_mass)
            .finish_non_exhaustive()
    }
}

impl TransportProblem {
    pub fn new(
        domain: ConvexPolygon,
        sites: SiteSet,
        density: DensityModel,
        alpha: f64,
        objective: Arc<dyn ObjectiveModel>,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
        }
        if domain.is_empty() {
            return Err(Error::InvalidInput("prior domain is empty".into()));
        }
        check_len(sites.len(), objective.dim())?;
        let total_mass = polygon_density_integral(&domain, &density, Integrand::One);
        if !(total_mass > 0.0) {
            return Err(Error::InvalidInput("prior has no mass on the domain".into()));
        }
        let second_moment = polygon_density_integral(&domain, &density, Integrand::QuadraticRadial);
        let a = sites.half_square_norms();
        Ok(Self { domain, sites, density, alpha, a, objective, total_mass, second_moment })
    }

    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn domain(&self) -> &ConvexPolygon {
        &self.domain
    }

    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    pub fn density(&self) -> &DensityModel {
        &self.density
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `A_i = |a_i|^2 / 2`.
    pub fn a_vector(&self) -> &[f64] {
        &self.a
    }

    pub fn objective(&self) -> &Arc<dyn ObjectiveModel> {
        &self.objective
    }

    /// `u_d(D)`.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// `int_D |x|^2 du_d`.
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    /// Builds the tessellation and all objective-independent quantities.
    pub fn evaluate(&self, xi: &[f64]) -> Result<Evaluation> {
        let tessellation = build_tessellation(&self.domain, &self.sites, xi)?;
        let (mass, moments): (Vec<f64>, Vec<Point2>) =
            tessellation.cells().par_iter().map(|cell| mass_and_moment(cell, &self.density)).unzip();
        let mut w = self.second_moment;
        for ((a, m0), m1) in self.sites.iter().zip(&mass).zip(&moments) {
            w += a.norm_sq() * m0 - 2.0 * a.dot(*m1);
        }
        let theta = self.assemble_theta(&tessellation, &mass);
        Ok(Evaluation { xi: xi.to_vec(), tessellation, mass: MassVector(mass), moments, w, theta })
    }

    fn assemble_theta(&self, tess: &Tessellation, mass: &[f64]) -> ThetaMatrix {
        let sites = self.sites.points();
        let entries = tess
            .edges()
            .iter()
            .filter(|e| mass[e.i] > 0.0 && mass[e.j] > 0.0)
            .map(|e| {
                let weight = segment_density_integral(e.p, e.q, &self.density) / sites[e.i].distance(sites[e.j]);
                (e.i, e.j, weight)
            })
            .collect();
        ThetaMatrix::from_edges(self.n(), entries)
    }

    /// Objective value, gradient, residual and reduced gradient at `ev`.
    pub fn assess(&self, ev: &Evaluation) -> Result<Assessment> {
        let (g, grad_g) = self.objective.value_and_grad(&ev.mass)?;
        let residual = self.residual_from(&ev.xi, &grad_g);
        let j = g + 0.5 * self.alpha * ev.w;
        let j_grad = self.j_grad_from(ev, &residual);
        Ok(Assessment { g, grad_g, residual, j, j_grad })
    }

    /// `r = A + grad g / alpha - xi`.
    pub fn residual_from(&self, xi: &[f64], grad_g: &[f64]) -> Vec<f64> {
        self.a.iter().zip(grad_g).zip(xi).map(|((a, g), x)| a + g / self.alpha - x).collect()
    }

    /// `alpha Theta^T r`.
    pub fn j_grad_from(&self, ev: &Evaluation, residual: &[f64]) -> Vec<f64> {
        ev.theta.apply(residual).into_iter().map(|v| self.alpha * v).collect()
    }

    /// `(1/alpha) Hess g(u) Theta v - v`.
    pub fn dr_apply_at(&self, ev: &Evaluation, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), v.len())?;
        let tv = ev.theta.apply(v);
        let htv = self.objective.hess_apply(&ev.mass, &tv)?;
        Ok(htv.iter().zip(v).map(|(h, x)| h / self.alpha - x).collect())
    }

    /// Dense `Dr`, assembled column by column from sparse columns of
    /// `Theta`.
    pub fn dense_dr(&self, ev: &Evaluation) -> Result<DenseMatrix> {
        let n = self.n();
        let adjacency = ev.theta.adjacency();
        let columns: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let sparse = ev.theta.column(k, &adjacency);
                let mut col = if sparse.iter().all(|&(_, w)| w == 0.0) {
                    vec![0.0; n]
                } else {
                    let mut tv = vec![0.0; n];
                    for (i, w) in sparse {
                        tv[i] = w;
                    }
                    let h = self.objective.hess_apply(&ev.mass, &tv)?;
                    h.into_iter().map(|x| x / self.alpha).collect()
                };
                col[k] -= 1.0;
                Ok(col)
            })
            .collect::<Result<_>>()?;
        Ok(DenseMatrix::from_columns(&columns))
    }

    pub fn u_tilde(&self, xi: &[f64]) -> Result<MassVector> {
        Ok(self.evaluate(xi)?.mass)
    }

    pub fn w_value(&self, xi: &[f64]) -> Result<f64> {
        Ok(self.evaluate(xi)?.w)
    }

    pub fn theta(&self, xi: &[f64]) -> Result<ThetaMatrix> {
        Ok(self.evaluate(xi)?.theta)
    }

    pub fn residual(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let ev = self.evaluate(xi)?;
        let grad = self.objective.grad(&ev.mass)?;
        Ok(self.residual_from(xi, &grad))
    }

    pub fn j_value(&self, xi: &[f64]) -> Result<f64> {
        let ev = self.evaluate(xi)?;
        Ok(self.objective.value(&ev.mass)? + 0.5 * self.alpha * ev.w)
    }

    pub fn j_grad(&self, xi: &[f64]) -> Result<Vec<f64>> {
        Ok(self.assess(&self.evaluate(xi)?)?.j_grad)
    }

    pub fn dr_apply(&self, xi: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.dr_apply_at(&self.evaluate(xi)?, v)
    }

    /// `W'(xi) = 2 Theta (A - xi)`.
    pub fn w_grad_at(&self, ev: &Evaluation) -> Vec<f64> {
        let d: Vec<f64> = self.a.iter().zip(&ev.xi).map(|(a, x)| 2.0 * (a - x)).collect();
        ev.theta.apply(&d)
    }

    /// Directional derivative `J'(xi) d` from the reduced gradient.
    pub fn j_directional(&self, assessment: &Assessment, d: &[f64]) -> f64 {
        dot(&assessment.j_grad, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{QuadraticObjective, ZeroObjective};

    fn square() -> ConvexPolygon {
        ConvexPolygon::rectangle(Point2::new(-1.0, -1.0), Point2::new(1.0, 1.0)).unwrap()
    }

    fn problem(pts: &[(f64, f64)], objective: Arc<dyn ObjectiveModel>, alpha: f64) -> TransportProblem {
        let s = SiteSet::new(pts.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap();
        TransportProblem::new(square(), s, DensityModel::lebesgue(), alpha, objective).unwrap()
    }

    fn zero(pts: &[(f64, f64)]) -> TransportProblem {
        problem(pts, Arc::new(ZeroObjective::new(pts.len())), 1.0)
    }

    #[test]
    fn single_site_masses_and_cost() {
        let p = zero(&[(0.0, 0.0)]);
        assert_eq!(&*p.u_tilde(&[0.7]).unwrap(), &[4.0]);
        assert!((p.w_value(&[-3.0]).unwrap() - 8.0 / 3.0).abs() < 1e-14);
        let p = zero(&[(1.0, 1.0)]);
        assert!((p.w_value(&[0.0]).unwrap() - 32.0 / 3.0).abs() < 1e-13);
        let theta = p.theta(&[0.0]).unwrap();
        assert_eq!(theta.to_dense()[(0, 0)], 0.0);
    }

    #[test]
    fn symmetric_pair() {
        let p = zero(&[(-1.0, 0.0), (1.0, 0.0)]);
        let ev = p.evaluate(&[0.0, 0.0]).unwrap();
        assert!((ev.mass[0] - 2.0).abs() < 1e-14 && (ev.mass[1] - 2.0).abs() < 1e-14);
        assert!((ev.w - 8.0 / 3.0).abs() < 1e-14);
        let t = ev.theta.to_dense();
        for (i, j, v) in [(0, 0, -1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, -1.0)] {
            assert!((t[(i, j)] - v).abs() < 1e-14);
        }
        // g = 0, alpha = 1: r(0) = A = (1/2, 1/2), so Theta r = 0
        let a = p.assess(&ev).unwrap();
        assert_eq!(a.residual, vec![0.5, 0.5]);
        assert!(a.j_grad.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn mass_is_linear_in_the_middle_weight() {
        let p = zero(&[(1.0, 0.0), (-1.0, 0.0), (0.0, 0.0)]);
        for s in [-1.0, -0.5, -0.1] {
            let u = p.u_tilde(&[0.0, 0.0, s]).unwrap();
            assert!((u[2] + 4.0 * s).abs() < 1e-15, "s={s}: {}", u[2]);
        }
        for s in [0.0, 0.5] {
            assert_eq!(p.u_tilde(&[0.0, 0.0, s]).unwrap()[2], 0.0);
        }
    }

    #[test]
    fn empty_cell_has_zero_theta_row() {
        let p = zero(&[(-1.0, 0.0), (1.0, 0.0), (0.0, 0.5)]);
        let t = p.theta(&[0.0, 0.0, 10.0]).unwrap().to_dense();
        for k in 0..3 {
            assert_eq!(t[(2, k)], 0.0);
            assert_eq!(t[(k, 2)], 0.0);
        }
    }

    #[test]
    fn residual_with_quadratic_objective() {
        let mut q = DenseMatrix::zeros(1);
        q[(0, 0)] = 1.0;
        let g = Arc::new(QuadraticObjective::new(q, vec![0.0]).unwrap());
        let p = problem(&[(0.0, 0.0)], g, 1.0);
        assert_eq!(p.residual(&[0.0]).unwrap(), vec![4.0]);
    }

    #[test]
    fn zero_objective_residual_and_newton_operator() {
        let p = zero(&[(0.3, 0.2), (-0.4, 0.1)]);
        let xi = [0.1, -0.2];
        let r = p.residual(&xi).unwrap();
        for k in 0..2 {
            assert_eq!(r[k], p.a_vector()[k] - xi[k]);
        }
        assert_eq!(p.dr_apply(&xi, &[1.0, -2.0]).unwrap(), vec![-1.0, 2.0]);
        assert_eq!(p.dr_apply(&xi, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert!(p.j_grad(&xi).unwrap().iter().all(|v| v.is_finite()));
        assert!((p.j_value(&[4.0, 1.0]).unwrap() - 0.5 * p.w_value(&[4.0, 1.0]).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn dr_matches_dense_oracle() {
        let pts = [(0.3, 0.2), (-0.4, 0.1), (0.1, -0.6), (-0.2, 0.7)];
        let mut q = DenseMatrix::zeros(4);
        for i in 0..4 {
            for j in 0..4 {
                q[(i, j)] = 1.0 / (1.0 + (i + j) as f64);
            }
        }
        let alpha = 0.3;
        let g = Arc::new(QuadraticObjective::new(q.clone(), vec![1.0; 4]).unwrap());
        let p = problem(&pts, g, alpha);
        let xi = [0.05, 0.1, -0.02, 0.0];
        let ev = p.evaluate(&xi).unwrap();
        let theta = ev.theta.to_dense();
        let v = [0.3, -1.0, 0.25, 2.0];
        let tv = theta.matvec(&v);
        let qtv = q.matvec(&tv);
        let expected: Vec<f64> = qtv.iter().zip(&v).map(|(a, b)| a / alpha - b).collect();
        let got = p.dr_apply_at(&ev, &v).unwrap();
        let dense = p.dense_dr(&ev).unwrap().matvec(&v);
        for k in 0..4 {
            assert!((got[k] - expected[k]).abs() < 1e-12);
            assert!((dense[k] - expected[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_alpha_and_dimension() {
        let s = SiteSet::new(vec![Point2::ORIGIN]).unwrap();
        let g: Arc<dyn ObjectiveModel> = Arc::new(ZeroObjective::new(1));
        assert!(TransportProblem::new(square(), s.clone(), DensityModel::lebesgue(), 0.0, g.clone()).is_err());
        let g2: Arc<dyn ObjectiveModel> = Arc::new(ZeroObjective::new(2));
        assert!(TransportProblem::new(square(), s, DensityModel::lebesgue(), 1.0, g2).is_err());
    }
}
