use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use super::mesh::TriMesh;
use crate::error::{check_len, Error, Result};
use crate::geometry::{halfplane_clip, ConvexPolygon, Point2};
use crate::linalg::CsrMatrix;
use crate::quadrature::TriangleRule;

/// P1 discretization of `-Δy + β·∇y = Bu` with homogeneous Dirichlet data,
/// reduced to the interior nodes, together with the mass matrix of an
/// observation region and the control-to-node map `B`.
pub struct FemSystem {
    mesh: TriMesh,
    beta: Point2,
    dof_of_node: Vec<Option<usize>>,
    interior: Vec<usize>,
    stiffness: CsrMatrix,
    mass: CsrMatrix,
    lu: Lu<usize, f64>,
    control_nodes: Vec<usize>,
}

impl std::fmt::Debug for FemSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FemSystem")
            .field("nodes", &self.mesh.num_nodes())
            .field("interior", &self.interior.len())
            .field("beta", &self.beta)
            .field("controls", &self.control_nodes.len())
            .finish_non_exhaustive()
    }
}

/// Barycentric gradients and area of a triangle.
fn p1_gradients(p: &[Point2; 3]) -> ([Point2; 3], f64) {
    let area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]);
    let grads = std::array::from_fn(|i| {
        let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        Point2::new(a.y - b.y, b.x - a.x) / (2.0 * area)
    });
    (grads, area)
}

/// Barycentric coordinates of `x` with respect to `p`.
pub(crate) fn barycentric(p: &[Point2; 3], x: Point2) -> [f64; 3] {
    let twice = (p[1] - p[0]).cross(p[2] - p[0]);
    [(p[1] - x).cross(p[2] - x) / twice, (p[2] - x).cross(p[0] - x) / twice, (p[0] - x).cross(p[1] - x) / twice]
}

/// `int_{T ∩ O} φ_i φ_j`, exact: the clipped region is fanned into
/// triangles and integrated with a degree-2 rule.
fn local_mass(p: &[Point2; 3], observation: Option<&ConvexPolygon>) -> [[f64; 3]; 3] {
    let (_, area) = p1_gradients(p);
    let full = |a: f64| std::array::from_fn(|i| std::array::from_fn(|j| if i == j { a / 6.0 } else { a / 12.0 }));
    let Some(obs) = observation else {
        return full(area);
    };
    let tol = 1e-12 * obs.diameter().max(1.0);
    if p.iter().all(|&v| obs.contains(v, tol)) {
        return full(area);
    }
    let mut piece = ConvexPolygon::from_ccw_unchecked(p.to_vec());
    for hp in obs.half_planes() {
        piece = halfplane_clip(&piece, hp.normal, hp.offset);
        if piece.is_empty() {
            return [[0.0; 3]; 3];
        }
    }
    let rule = TriangleRule::with_degree(2);
    let v = piece.vertices();
    let mut out = [[0.0; 3]; 3];
    for k in 1..v.len() - 1 {
        let sub = [v[0], v[k], v[k + 1]];
        let sub_area = 0.5 * (sub[1] - sub[0]).cross(sub[2] - sub[0]);
        for (bc, w) in rule.points.iter().zip(&rule.weights) {
            let x = sub[0] * bc[0] + sub[1] * bc[1] + sub[2] * bc[2];
            let l = barycentric(p, x);
            for i in 0..3 {
                for j in 0..3 {
                    out[i][j] += sub_area * w * l[i] * l[j];
                }
            }
        }
    }
    out
}

/// Assembles stiffness plus convection and the observation mass matrix on
/// the interior nodes and factorizes the stiffness matrix. Every mesh node
/// is a control site until [`FemSystem::with_control_nodes`] is called.
///
/// `observation = None` observes the whole mesh. A polygon that does not
/// follow the triangle edges is integrated exactly over its intersection
/// with each triangle.
pub fn assemble_fem(mesh: TriMesh, beta: Point2, observation: Option<&ConvexPolygon>) -> Result<FemSystem> {
    if !beta.is_finite() {
        return Err(Error::InvalidInput("convection field is not finite".into()));
    }
    if observation.is_some_and(|o| o.is_empty()) {
        return Err(Error::InvalidInput("observation region is empty".into()));
    }
    let mut dof_of_node = vec![None; mesh.num_nodes()];
    let mut interior = Vec::new();
    for k in 0..mesh.num_nodes() {
        if !mesh.is_boundary(k) {
            dof_of_node[k] = Some(interior.len());
            interior.push(k);
        }
    }
    let n = interior.len();
    if n == 0 {
        return Err(Error::InvalidInput("mesh has no interior nodes".into()));
    }
    let mut k_trip = Vec::with_capacity(9 * mesh.triangles().len());
    let mut m_trip = Vec::with_capacity(9 * mesh.triangles().len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let (grads, area) = p1_gradients(&p);
        let mloc = local_mass(&p, observation);
        for i in 0..3 {
            let Some(di) = dof_of_node[tri[i]] else { continue };
            for j in 0..3 {
                let Some(dj) = dof_of_node[tri[j]] else { continue };
                let kij = area * grads[i].dot(grads[j]) + area / 3.0 * beta.dot(grads[j]);
                k_trip.push((di, dj, kij));
                if mloc[i][j] != 0.0 {
                    m_trip.push((di, dj, mloc[i][j]));
                }
            }
        }
    }
    let stiffness = CsrMatrix::from_triplets(n, n, k_trip);
    let mass = CsrMatrix::from_triplets(n, n, m_trip);
    let lu = factorize(&stiffness)?;
    let control_nodes = (0..mesh.num_nodes()).collect();
    Ok(FemSystem { mesh, beta, dof_of_node, interior, stiffness, mass, lu, control_nodes })
}

fn factorize(a: &CsrMatrix) -> Result<Lu<usize, f64>> {
    let n = a.nrows();
    let trip: Vec<Triplet<usize, usize, f64>> = a.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
        .map_err(|e| Error::LinearSolver(format!("sparse assembly: {e:?}")))?;
    let symbolic =
        SymbolicLu::try_new(mat.symbolic()).map_err(|e| Error::LinearSolver(format!("symbolic LU: {e:?}")))?;
    Lu::try_new_with_symbolic(symbolic, mat.as_ref())
        .map_err(|e| Error::Singular(format!("stiffness factorization: {e:?}")))
}

fn to_column(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

fn from_column(m: &Mat<f64>) -> Result<Vec<f64>> {
    let out: Vec<f64> = (0..m.nrows()).map(|i| m[(i, 0)]).collect();
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(Error::LinearSolver("sparse solve produced non-finite values".into()))
    }
}

impl FemSystem {
    /// Restricts the controls to the given mesh nodes (in site order).
    /// Boundary nodes are allowed; their columns of `B` vanish.
    pub fn with_control_nodes(mut self, nodes: Vec<usize>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidInput("control set is empty".into()));
        }
        if let Some(&bad) = nodes.iter().find(|&&k| k >= self.mesh.num_nodes()) {
            return Err(Error::InvalidInput(format!("control node {bad} is not a mesh node")));
        }
        let mut seen = vec![false; self.mesh.num_nodes()];
        for &k in &nodes {
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::InvalidInput(format!("control node {k} repeated")));
            }
        }
        self.control_nodes = nodes;
        Ok(self)
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn beta(&self) -> Point2 {
        self.beta
    }

    /// Number of interior degrees of freedom.
    pub fn num_dofs(&self) -> usize {
        self.interior.len()
    }

    /// Mesh node of each interior degree of freedom.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    pub fn dof_of_node(&self, node: usize) -> Option<usize> {
        self.dof_of_node[node]
    }

    pub fn num_controls(&self) -> usize {
        self.control_nodes.len()
    }

    pub fn control_nodes(&self) -> &[usize] {
        &self.control_nodes
    }

    /// Coordinates of the control sites.
    pub fn control_points(&self) -> Vec<Point2> {
        self.control_nodes.iter().map(|&k| self.mesh.nodes()[k]).collect()
    }

    /// Stiffness plus convection matrix `K` on interior nodes.
    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    /// Observation mass matrix `M` on interior nodes.
    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// `K^{-1} b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.num_dofs(), b.len())?;
        from_column(&self.lu.solve(to_column(b)))
    }

    /// `K^{-T} b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.num_dofs(), b.len())?;
        let mut x = to_column(b);
        self.lu.solve_transpose_in_place(x.as_mut());
        from_column(&x)
    }

    /// `B u`: site masses placed on their interior nodes.
    pub fn apply_b(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.num_controls(), u.len())?;
        let mut out = vec![0.0; self.num_dofs()];
        for (&node, &ui) in self.control_nodes.iter().zip(u) {
            if let Some(d) = self.dof_of_node[node] {
                out[d] += ui;
            }
        }
        Ok(out)
    }

    /// `B^T p`.
    pub fn apply_bt(&self, p: &[f64]) -> Result<Vec<f64>> {
        check_len(self.num_dofs(), p.len())?;
        Ok(self.control_nodes.iter().map(|&node| self.dof_of_node[node].map_or(0.0, |d| p[d])).collect())
    }

    /// `y = K^{-1} B u` on interior nodes.
    pub fn solve_state(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.solve(&self.apply_b(u)?)
    }

    /// Extends an interior vector by zero boundary values to all mesh nodes.
    pub fn to_nodal(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.num_dofs(), y.len())?;
        let mut out = vec![0.0; self.mesh.num_nodes()];
        for (&node, &v) in self.interior.iter().zip(y) {
            out[node] = v;
        }
        Ok(out)
    }

    /// Nodal interpolant of `f` on the interior nodes.
    pub fn interpolate(&self, f: impl Fn(Point2) -> f64) -> Vec<f64> {
        self.interior.iter().map(|&k| f(self.mesh.nodes()[k])).collect()
    }

    /// `int f φ_i` for every interior node.
    pub fn load_vector(&self, f: impl Fn(Point2) -> f64, degree: usize) -> Vec<f64> {
        let rule = TriangleRule::with_degree(degree);
        let mut out = vec![0.0; self.num_dofs()];
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let p = self.mesh.triangle_points(t);
            let (_, area) = p1_gradients(&p);
            for (bc, w) in rule.points.iter().zip(&rule.weights) {
                let x = p[0] * bc[0] + p[1] * bc[1] + p[2] * bc[2];
                let fx = area * w * f(x);
                for i in 0..3 {
                    if let Some(d) = self.dof_of_node[tri[i]] {
                        out[d] += fx * bc[i];
                    }
                }
            }
        }
        out
    }

    /// `|y_h - y|_{L^2}` for an interior vector `y_h` (zero on the boundary).
    pub fn l2_error(&self, y_h: &[f64], exact: impl Fn(Point2) -> f64, degree: usize) -> Result<f64> {
        let nodal = self.to_nodal(y_h)?;
        let rule = TriangleRule::with_degree(degree);
        let mut acc = 0.0;
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let p = self.mesh.triangle_points(t);
            let (_, area) = p1_gradients(&p);
            for (bc, w) in rule.points.iter().zip(&rule.weights) {
                let x = p[0] * bc[0] + p[1] * bc[1] + p[2] * bc[2];
                let yh: f64 = (0..3).map(|i| bc[i] * nodal[tri[i]]).sum();
                acc += area * w * (yh - exact(x)).powi(2);
            }
        }
        Ok(acc.sqrt())
    }

    /// `int_Ω φ_k` for every mesh node.
    pub fn basis_integrals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.mesh.num_nodes()];
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let (_, area) = p1_gradients(&self.mesh.triangle_points(t));
            for &k in tri {
                out[k] += area / 3.0;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::mesh::build_structured_mesh;
    use super::*;

    fn unit(level: usize) -> TriMesh {
        build_structured_mesh(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0), level).unwrap()
    }

    #[test]
    fn coarsest_center_stiffness_is_four() {
        let mesh = build_structured_mesh(Point2::new(-1.0, -1.0), Point2::new(1.0, 1.0), 0).unwrap();
        let sys = assemble_fem(mesh, Point2::ORIGIN, None).unwrap();
        assert_eq!(sys.num_dofs(), 1);
        assert!((sys.stiffness().get(0, 0) - 4.0).abs() < 1e-14);
        // the center basis function integrates to 4/3 over the four triangles
        assert!((sys.basis_integrals()[4] - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn b_and_bt_are_adjoint_and_skip_boundary_sites() {
        let sys = assemble_fem(unit(2), Point2::ORIGIN, None).unwrap();
        let u: Vec<f64> = (0..sys.num_controls()).map(|k| (k as f64).sin()).collect();
        let p: Vec<f64> = (0..sys.num_dofs()).map(|k| (k as f64 * 0.3).cos()).collect();
        let lhs: f64 = sys.apply_b(&u).unwrap().iter().zip(&p).map(|(a, b)| a * b).sum();
        let rhs: f64 = sys.apply_bt(&p).unwrap().iter().zip(&u).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
        let bt = sys.apply_bt(&p).unwrap();
        for (k, &node) in sys.control_nodes().iter().enumerate() {
            if sys.mesh().is_boundary(node) {
                assert_eq!(bt[k], 0.0);
            }
        }
    }

    #[test]
    fn clipped_mass_matches_aligned_mass() {
        // an observation square that follows the mesh lines
        let obs = ConvexPolygon::rectangle(Point2::new(0.25, 0.5), Point2::new(0.75, 1.0)).unwrap();
        let sys = assemble_fem(unit(2), Point2::ORIGIN, Some(&obs)).unwrap();
        let ones = vec![1.0; sys.num_dofs()];
        let total: f64 = sys.mass().matvec(&ones).iter().sum();
        // sum of interior entries equals int_O (sum of interior basis functions)
        let nodal = sys.to_nodal(&ones).unwrap();
        let mut expected = 0.0;
        let rule = TriangleRule::with_degree(2);
        for (t, tri) in sys.mesh().triangles().iter().enumerate() {
            let p = sys.mesh().triangle_points(t);
            let c = (p[0] + p[1] + p[2]) / 3.0;
            if !obs.contains(c, 0.0) {
                continue;
            }
            let (_, area) = p1_gradients(&p);
            for (bc, w) in rule.points.iter().zip(&rule.weights) {
                let s: f64 = (0..3).map(|i| bc[i] * nodal[tri[i]]).sum();
                expected += area * w * s * s;
            }
        }
        assert!((total - expected).abs() < 1e-14);
    }

    #[test]
    fn clipped_mass_is_additive_over_a_split() {
        let left = ConvexPolygon::rectangle(Point2::new(0.1, 0.13), Point2::new(0.47, 0.9)).unwrap();
        let right = ConvexPolygon::rectangle(Point2::new(0.47, 0.13), Point2::new(0.81, 0.9)).unwrap();
        let whole = ConvexPolygon::rectangle(Point2::new(0.1, 0.13), Point2::new(0.81, 0.9)).unwrap();
        let m = |o: &ConvexPolygon| assemble_fem(unit(2), Point2::ORIGIN, Some(o)).unwrap().mass().clone();
        let (l, r, w) = (m(&left), m(&right), m(&whole));
        for (i, j, v) in w.triplets() {
            assert!((l.get(i, j) + r.get(i, j) - v).abs() < 1e-14);
        }
    }
}
