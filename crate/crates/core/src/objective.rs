//! The control objective `g` acting on mass vectors.

use crate::error::{check_len, Result};
use crate::linalg::{dot, DenseMatrix};

/// Twice differentiable objective on mass vectors of fixed length.
///
/// `hess_apply(u, v)` applies the Hessian at `u` to `v` without forming it.
pub trait ObjectiveModel: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, u: &[f64]) -> Result<f64>;

    fn grad(&self, u: &[f64]) -> Result<Vec<f64>>;

    fn value_and_grad(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((self.value(u)?, self.grad(u)?))
    }

    fn hess_apply(&self, u: &[f64], v: &[f64]) -> Result<Vec<f64>>;
}

/// `g = 0`.
#[derive(Clone, Debug)]
pub struct ZeroObjective {
    n: usize,
}

impl ZeroObjective {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl ObjectiveModel for ZeroObjective {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, u: &[f64]) -> Result<f64> {
        check_len(self.n, u.len())?;
        Ok(0.0)
    }

    fn grad(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, u.len())?;
        Ok(vec![0.0; self.n])
    }

    fn hess_apply(&self, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, u.len())?;
        check_len(self.n, v.len())?;
        Ok(vec![0.0; self.n])
    }
}

/// `g(u) = 1/2 (u - c)^T Q (u - c)` with a dense symmetric `Q`.
#[derive(Clone, Debug)]
pub struct QuadraticObjective {
    q: DenseMatrix,
    center: Vec<f64>,
}

impl QuadraticObjective {
    pub fn new(q: DenseMatrix, center: Vec<f64>) -> Result<Self> {
        check_len(q.dim(), center.len())?;
        Ok(Self { q, center })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.q
    }

    fn shifted(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.center.len(), u.len())?;
        Ok(u.iter().zip(&self.center).map(|(a, b)| a - b).collect())
    }
}

impl ObjectiveModel for QuadraticObjective {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, u: &[f64]) -> Result<f64> {
        let d = self.shifted(u)?;
        Ok(0.5 * dot(&d, &self.q.matvec(&d)))
    }

    fn grad(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.q.matvec(&self.shifted(u)?))
    }

    fn hess_apply(&self, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), u.len())?;
        check_len(self.dim(), v.len())?;
        Ok(self.q.matvec(v))
    }
}
