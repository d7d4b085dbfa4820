use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, Point2};

/// Conforming triangulation with counterclockwise triangles.
#[derive(Clone, Debug)]
pub struct TriMesh {
    nodes: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    refinement: usize,
    lo: Point2,
    hi: Point2,
}

impl TriMesh {
    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn refinement(&self) -> usize {
        self.refinement
    }

    /// Corners of the meshed rectangle.
    pub fn bounds(&self) -> (Point2, Point2) {
        (self.lo, self.hi)
    }

    pub fn triangle_points(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    /// Mesh size (longest triangle edge).
    pub fn h(&self) -> f64 {
        let dx = (self.hi.x - self.lo.x) / (1usize << self.refinement) as f64;
        let dy = (self.hi.y - self.lo.y) / (1usize << self.refinement) as f64;
        dx.max(dy)
    }

    /// Nodes inside or on the boundary of `poly`.
    pub fn nodes_in(&self, poly: &ConvexPolygon) -> Vec<usize> {
        let tol = 1e-12 * (self.hi - self.lo).norm();
        (0..self.nodes.len()).filter(|&k| poly.contains(self.nodes[k], tol)).collect()
    }
}

/// Number of nodes of [`build_structured_mesh`] at a refinement level.
pub fn structured_node_count(refinement: usize) -> usize {
    let n = 1usize << refinement;
    (n + 1) * (n + 1) + n * n
}

/// Criss-cross triangulation of the rectangle `[lo, hi]`: `2^refinement`
/// squares per side, each split into four triangles through its center.
///
/// Grid node `(i, j)` has index `j (N + 1) + i`, the center of square
/// `(i, j)` has index `(N + 1)^2 + j N + i`.
pub fn build_structured_mesh(lo: Point2, hi: Point2, refinement: usize) -> Result<TriMesh> {
    if !(lo.is_finite() && hi.is_finite() && hi.x > lo.x && hi.y > lo.y) {
        return Err(Error::InvalidInput(format!("invalid mesh box {lo:?}..{hi:?}")));
    }
    if refinement > 12 {
        return Err(Error::InvalidInput(format!("refinement {refinement} is too large")));
    }
    let n = 1usize << refinement;
    let (dx, dy) = ((hi.x - lo.x) / n as f64, (hi.y - lo.y) / n as f64);
    let mut nodes = Vec::with_capacity(structured_node_count(refinement));
    let mut boundary = Vec::with_capacity(nodes.capacity());
    for j in 0..=n {
        for i in 0..=n {
            // exact corners at the box edges
            let x = if i == n { hi.x } else { lo.x + i as f64 * dx };
            let y = if j == n { hi.y } else { lo.y + j as f64 * dy };
            nodes.push(Point2::new(x, y));
            boundary.push(i == 0 || j == 0 || i == n || j == n);
        }
    }
    for j in 0..n {
        for i in 0..n {
            nodes.push(Point2::new(lo.x + (i as f64 + 0.5) * dx, lo.y + (j as f64 + 0.5) * dy));
            boundary.push(false);
        }
    }
    let grid = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(4 * n * n);
    for j in 0..n {
        for i in 0..n {
            let c = (n + 1) * (n + 1) + j * n + i;
            let (v00, v10, v11, v01) = (grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1));
            triangles.extend([[v00, v10, c], [v10, v11, c], [v11, v01, c], [v01, v00, c]]);
        }
    }
    Ok(TriMesh { nodes, triangles, boundary, refinement, lo, hi })
}
