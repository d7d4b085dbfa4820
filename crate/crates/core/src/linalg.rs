//! Vector helpers, dense factorizations and restarted GMRES.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Mat, Side};

use crate::error::{Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `y += s * x`
#[inline]
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// Dense row-major square matrix, used where `n` is small.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let n = columns.len();
        let mut m = Self::zeros(n);
        for (j, col) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(&self.data[i * self.n..(i + 1) * self.n], x)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    fn to_faer(&self) -> Mat<f64> {
        Mat::from_fn(self.n, self.n, |i, j| self[(i, j)])
    }

    /// Solves `self x = b` by LU with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, actual: b.len() });
        }
        let lu = PartialPivLu::new(self.to_faer().as_ref());
        let rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = lu.solve(&rhs);
        let x: Vec<f64> = (0..self.n).map(|i| x[(i, 0)]).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("dense LU produced non-finite values".into()));
        }
        Ok(x)
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn symmetric_eigenvalues(&self) -> Result<Vec<f64>> {
        let sym = Mat::from_fn(self.n, self.n, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]));
        let mut ev = sym
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::LinearSolver(format!("eigenvalue solver: {e:?}")))?;
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Compressed sparse row matrix; duplicate triplets are summed.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_start = vec![0; nrows + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_start[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_start[i + 1] += row_start[i];
        }
        Self { nrows, ncols, row_start, cols, vals }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Stored entries `(i, j, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows)
            .flat_map(move |i| (self.row_start[i]..self.row_start[i + 1]).map(move |k| (i, self.cols[k], self.vals[k])))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = self.row_start[i]..self.row_start[i + 1];
        match self.cols[row.clone()].binary_search(&j) {
            Ok(k) => self.vals[row.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| (self.row_start[i]..self.row_start[i + 1]).map(|k| self.vals[k] * x[self.cols[k]]).sum())
            .collect()
    }

    pub fn transpose_matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (i, j, v) in self.triplets() {
            out[j] += v * x[i];
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.triplets().map(|(i, j, v)| (j, i, v)).collect())
    }
}

/// Outcome of a GMRES solve.
#[derive(Clone, Debug)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Restarted GMRES for `A x = b` from `x = 0` with a matrix-free operator.
/// Stops once `|b - A x|_2 <= tol`.
pub fn gmres(
    mut apply: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    b: &[f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<GmresOutcome> {
    let n = b.len();
    let restart = restart.clamp(1, n.max(1));
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut beta = norm2(&r);
    let mut total = 0;
    if beta <= tol {
        return Ok(GmresOutcome { x, residual_norm: beta, iterations: 0, converged: true });
    }
    while total < max_iter {
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess: Vec<Vec<f64>> = Vec::new(); // column k has k + 2 entries
        let (mut cs, mut sn) = (Vec::<f64>::new(), Vec::<f64>::new());
        let mut g = vec![beta];
        let mut k = 0;
        while k < restart && total < max_iter {
            let mut w = apply(&basis[k])?;
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::LinearSolver("operator returned non-finite values".into()));
            }
            let mut h = vec![0.0; k + 2];
            for (i, v) in basis.iter().enumerate() {
                h[i] = dot(&w, v);
                axpy(-h[i], v, &mut w);
            }
            // second Gram-Schmidt pass
            for (i, v) in basis.iter().enumerate() {
                let c = dot(&w, v);
                h[i] += c;
                axpy(-c, v, &mut w);
            }
            h[k + 1] = norm2(&w);
            for i in 0..k {
                let t = cs[i] * h[i] + sn[i] * h[i + 1];
                h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
                h[i] = t;
            }
            let denom = h[k].hypot(h[k + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (h[k] / denom, h[k + 1] / denom) };
            let hk1 = h[k + 1];
            h[k] = c * h[k] + s * hk1;
            h[k + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g.push(-s * g[k]);
            g[k] *= c;
            let breakdown = hk1 <= 1e-14 * h[k].abs().max(f64::MIN_POSITIVE);
            if !breakdown {
                basis.push(w.iter().map(|v| v / hk1).collect());
            }
            hess.push(h);
            k += 1;
            total += 1;
            if g[k].abs() <= tol || breakdown {
                break;
            }
        }
        // back substitution for the least-squares coefficients
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= hess[j][i] * y[j];
            }
            if hess[i][i] == 0.0 {
                return Err(Error::LinearSolver("GMRES Hessenberg matrix is singular".into()));
            }
            y[i] = s / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &basis[j], &mut x);
        }
        let ax = apply(&x)?;
        r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        beta = norm2(&r);
        if beta <= tol {
            return Ok(GmresOutcome { x, residual_norm: beta, iterations: total, converged: true });
        }
    }
    Ok(GmresOutcome { x, residual_norm: beta, iterations: total, converged: false })
}
