use super::Point2;
use crate::error::{Error, Result};
use crate::quadrature::shoelace;

/// Relative geometric tolerance; multiplied by the diameter of the polygon
/// under consideration.
pub const GEOM_REL_EPS: f64 = 1e-12;

/// Closed half-plane `{x : normal . x <= offset}` with a unit normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlane {
    pub normal: Point2,
    pub offset: f64,
}

impl HalfPlane {
    /// Signed distance; positive outside.
    #[inline]
    pub fn signed_distance(&self, p: Point2) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Convex polygon with counterclockwise vertices. The empty vertex list is
/// the empty polygon.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    /// Validates and normalizes a vertex list: clockwise input is reversed,
    /// repeated vertices are dropped. Fails on non-finite coordinates,
    /// non-convex input or a polygon without interior.
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.is_empty() {
            return Ok(Self::empty());
        }
        if let Some(p) = vertices.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite vertex {p:?}")));
        }
        let eps = GEOM_REL_EPS * diameter_of(&vertices);
        let mut verts: Vec<Point2> = Vec::with_capacity(vertices.len());
        for p in vertices {
            if verts.last().map_or(true, |q: &Point2| q.distance(p) > eps) {
                verts.push(p);
            }
        }
        while verts.len() > 1 && verts[0].distance(*verts.last().unwrap()) <= eps {
            verts.pop();
        }
        if verts.len() < 3 {
            return Err(Error::InvalidInput("polygon needs at least three distinct vertices".into()));
        }
        let area = shoelace(&verts);
        if area.abs() <= eps * eps {
            return Err(Error::InvalidInput("polygon has empty interior".into()));
        }
        if area < 0.0 {
            verts.reverse();
        }
        let m = verts.len();
        let scale = diameter_of(&verts).powi(2);
        for k in 0..m {
            let a = verts[k];
            let b = verts[(k + 1) % m];
            let c = verts[(k + 2) % m];
            if (b - a).cross(c - b) < -1e-12 * scale {
                return Err(Error::InvalidInput(format!("polygon is not convex at vertex {b:?}")));
            }
        }
        Ok(Self { vertices: verts })
    }

    pub fn empty() -> Self {
        Self { vertices: Vec::new() }
    }

    /// Axis-aligned rectangle `[lo.x, hi.x] x [lo.y, hi.y]`.
    pub fn rectangle(lo: Point2, hi: Point2) -> Result<Self> {
        Self::new(vec![lo, Point2::new(hi.x, lo.y), hi, Point2::new(lo.x, hi.y)])
    }

    /// Skips validation; the caller guarantees the invariants.
    pub(crate) fn from_ccw_unchecked(vertices: Vec<Point2>) -> Self {
        Self { vertices }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Directed edges `(q_{k}, q_{k+1})`, closing the loop.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let m = self.vertices.len();
        (0..m).map(move |k| (self.vertices[k], self.vertices[(k + 1) % m]))
    }

    pub fn area(&self) -> f64 {
        crate::quadrature::polygon_area(self)
    }

    pub fn diameter(&self) -> f64 {
        diameter_of(&self.vertices)
    }

    /// Geometric tolerance used for this polygon when it acts as a domain.
    pub fn geom_eps(&self) -> f64 {
        GEOM_REL_EPS * self.diameter().max(f64::MIN_POSITIVE)
    }

    pub fn bounding_box(&self) -> Option<(Point2, Point2)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), p| {
            (Point2::new(lo.x.min(p.x), lo.y.min(p.y)), Point2::new(hi.x.max(p.x), hi.y.max(p.y)))
        }))
    }

    /// Mean of the vertices; an interior point of a nondegenerate polygon.
    pub fn vertex_mean(&self) -> Point2 {
        let m = self.vertices.len().max(1) as f64;
        self.vertices.iter().fold(Point2::ORIGIN, |acc, &p| acc + p) / m
    }

    /// Area centroid, or `None` for the empty polygon.
    pub fn centroid(&self) -> Option<Point2> {
        let area = self.area();
        if area <= 0.0 {
            return None;
        }
        let mx = crate::quadrature::polygon_first_moment(self, Point2::new(1.0, 0.0));
        let my = crate::quadrature::polygon_first_moment(self, Point2::new(0.0, 1.0));
        Some(Point2::new(mx / area, my / area))
    }

    /// Outward half-plane representation, one entry per edge: edge `k` runs
    /// from vertex `k` to vertex `k + 1`.
    pub fn half_planes(&self) -> Vec<HalfPlane> {
        self.edges()
            .map(|(p, q)| {
                let e = q - p;
                let normal = Point2::new(e.y, -e.x) / e.norm();
                HalfPlane { normal, offset: normal.dot(p) }
            })
            .collect()
    }

    /// Point membership with an absolute tolerance on the distance to each
    /// edge line.
    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        !self.is_empty() && self.half_planes().iter().all(|h| h.signed_distance(p) <= tol)
    }
}

pub(crate) fn diameter_of(points: &[Point2]) -> f64 {
    let mut d: f64 = 0.0;
    for (k, p) in points.iter().enumerate() {
        for q in &points[k + 1..] {
            d = d.max(p.distance(*q));
        }
    }
    d
}

/// Intersects `poly` with the closed half-plane `{x : normal . x <= offset}`.
///
/// Vertices on the cut line come from exact segment/line intersection; the
/// result may be empty.
pub fn halfplane_clip(poly: &ConvexPolygon, normal: Point2, offset: f64) -> ConvexPolygon {
    let eps = poly.geom_eps();
    let labels = (0..poly.len()).collect();
    let labeled = LabeledPolygon::new(poly.vertices().to_vec(), labels);
    labeled.clip(normal, offset, usize::MAX, eps).into_polygon()
}

/// Convex polygon whose edges carry the label of the constraint that created
/// them. `labels[k]` belongs to the edge from vertex `k` to vertex `k + 1`.
#[derive(Clone, Debug)]
pub(crate) struct LabeledPolygon<L> {
    pub vertices: Vec<Point2>,
    pub labels: Vec<L>,
    // reused by clipping to avoid allocations
    spare_vertices: Vec<Point2>,
    spare_labels: Vec<L>,
}

impl<L: Copy + PartialEq> LabeledPolygon<L> {
    pub fn new(vertices: Vec<Point2>, labels: Vec<L>) -> Self {
        debug_assert_eq!(vertices.len(), labels.len());
        Self { vertices, labels, spare_vertices: Vec::new(), spare_labels: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn into_polygon(self) -> ConvexPolygon {
        ConvexPolygon::from_ccw_unchecked(self.vertices)
    }

    /// Sutherland-Hodgman step against a single half-plane. The new edge on
    /// the cut line receives `label`.
    pub fn clip(&self, normal: Point2, offset: f64, label: L, eps: f64) -> Self {
        let mut out = self.clone();
        out.clip_in_place(normal, offset, label, eps);
        out
    }

    /// In-place [`LabeledPolygon::clip`]; returns whether the polygon
    /// changed. Inactive half-planes cost no allocation.
    pub fn clip_in_place(&mut self, normal: Point2, offset: f64, label: L, eps: f64) -> bool {
        let m = self.vertices.len();
        if m == 0 {
            return false;
        }
        let dist = |v: Point2| normal.dot(v) - offset;
        let (mut any_out, mut any_in) = (false, false);
        for &v in &self.vertices {
            if dist(v) > 0.0 {
                any_out = true;
            } else {
                any_in = true;
            }
        }
        if !any_out {
            return false;
        }
        if !any_in {
            self.vertices.clear();
            self.labels.clear();
            return true;
        }
        let mut verts = std::mem::take(&mut self.spare_vertices);
        let mut labels = std::mem::take(&mut self.spare_labels);
        verts.clear();
        labels.clear();
        for k in 0..m {
            let kn = (k + 1) % m;
            let (cur, nxt) = (self.vertices[k], self.vertices[kn]);
            let (sc, sn) = (dist(cur), dist(nxt));
            if sc <= 0.0 {
                verts.push(cur);
                labels.push(self.labels[k]);
                if sn > 0.0 {
                    verts.push(cur.lerp(nxt, sc / (sc - sn)));
                    labels.push(label);
                }
            } else if sn <= 0.0 {
                verts.push(cur.lerp(nxt, sc / (sc - sn)));
                labels.push(self.labels[k]);
            }
        }
        self.spare_vertices = std::mem::replace(&mut self.vertices, verts);
        self.spare_labels = std::mem::replace(&mut self.labels, labels);
        self.cleanup(eps);
        true
    }

    /// Collapses edges not longer than `eps`, merges collinear edges that
    /// carry the same label and empties polygons without interior.
    pub fn cleanup(&mut self, eps: f64) {
        let eps_sq = eps * eps;
        let (verts, labels) = (&mut self.vertices, &mut self.labels);
        let mut w = 0;
        for k in 0..verts.len() {
            let (p, l) = (verts[k], labels[k]);
            if w > 0 && (verts[w - 1] - p).norm_sq() <= eps_sq {
                // the short edge from the kept vertex to `p` disappears; the
                // kept vertex takes over the outgoing label of `p`
                labels[w - 1] = l;
            } else {
                verts[w] = p;
                labels[w] = l;
                w += 1;
            }
        }
        verts.truncate(w);
        labels.truncate(w);
        while verts.len() > 1 && (verts[verts.len() - 1] - verts[0]).norm_sq() <= eps_sq {
            verts.pop();
            labels.pop();
        }
        let mut k = 0;
        while verts.len() >= 3 && k < verts.len() {
            let prev = (k + verts.len() - 1) % verts.len();
            if labels[prev] == labels[k] {
                verts.remove(k);
                labels.remove(k);
            } else {
                k += 1;
            }
        }
        let degenerate = verts.len() < 3 || {
            let perimeter: f64 = (0..verts.len()).map(|k| verts[k].distance(verts[(k + 1) % verts.len()])).sum();
            shoelace(verts) <= eps * perimeter
        };
        if degenerate {
            verts.clear();
            labels.clear();
        }
    }

    /// Directed edges with their labels.
    pub fn labeled_edges(&self) -> impl Iterator<Item = (Point2, Point2, L)> + '_ {
        let m = self.vertices.len();
        (0..m).map(move |k| (self.vertices[k], self.vertices[(k + 1) % m], self.labels[k]))
    }
}
