use std::collections::BTreeMap;

use rayon::prelude::*;

use super::index::{box_box_dist_sq, point_box_dist_sq, PowerIndex, PowerQuery};
use super::polygon::LabeledPolygon;
use super::sites::SiteGrid;
use super::{ConvexPolygon, Point2, SiteSet};
use crate::error::{check_len, Error, Result};

/// Origin of a cell edge: the bisector with another site, or an edge of the
/// domain (indexed as in [`ConvexPolygon::half_planes`]).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeLabel {
    Site(usize),
    Boundary(usize),
}

/// Inner edge shared by the cells of sites `i < j`, oriented
/// counterclockwise with respect to cell `i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeRecord {
    pub i: usize,
    pub j: usize,
    pub p: Point2,
    pub q: Point2,
    pub length: f64,
}

/// Power diagram of weighted sites clipped to a convex domain.
///
/// Cell `i` is the closed set of points of the domain where
/// `a_i . x - xi_i >= a_j . x - xi_j` for every `j`. Cells of measure zero are
/// stored as empty polygons.
#[derive(Clone, Debug)]
pub struct Tessellation {
    domain: ConvexPolygon,
    sites: Vec<Point2>,
    xi: Vec<f64>,
    cells: Vec<ConvexPolygon>,
    cell_labels: Vec<Vec<EdgeLabel>>,
    edges: Vec<EdgeRecord>,
    eps: f64,
}

impl Tessellation {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn domain(&self) -> &ConvexPolygon {
        &self.domain
    }

    pub fn sites(&self) -> &[Point2] {
        &self.sites
    }

    pub fn weights(&self) -> &[f64] {
        &self.xi
    }

    pub fn cells(&self) -> &[ConvexPolygon] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> &ConvexPolygon {
        &self.cells[i]
    }

    /// Labels of the edges of cell `i`, aligned with its vertices.
    pub fn cell_labels(&self, i: usize) -> &[EdgeLabel] {
        &self.cell_labels[i]
    }

    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    /// Geometric tolerance: `1e-12 * diam(D)`.
    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Value of the affine piece of site `j` at `x`.
    #[inline]
    pub fn affine_value(&self, j: usize, x: Point2) -> f64 {
        self.sites[j].dot(x) - self.xi[j]
    }
}

/// Builds the clipped power diagram by intersecting the domain with the
/// half-planes `(a_j - a_i) . x <= xi_j - xi_i` for every site `i`.
///
/// Each cell costs O(n) clips in the worst case. Sites are found through a
/// bucket grid with a pyramid of maximal power weights `|a_j|^2 - 2 xi_j`;
/// blocks whose power distance to the current cell exceeds that of `a_i`
/// are skipped, so local configurations cost much less. Cells are built in
/// parallel; the result does not depend on the schedule.
pub fn build_tessellation(domain: &ConvexPolygon, sites: &SiteSet, xi: &[f64]) -> Result<Tessellation> {
    check_len(sites.len(), xi.len())?;
    if domain.is_empty() {
        return Err(Error::InvalidInput("domain polygon is empty".into()));
    }
    if xi.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("weights must be finite".into()));
    }
    let eps = domain.geom_eps();
    let grid = SiteGrid::new(sites.points());
    if let Some((i, j)) = sites.find_duplicate_in(&grid, eps) {
        return Err(Error::DuplicateSites(i, j));
    }
    let points = sites.points();
    let power_weight: Vec<f64> = points.iter().zip(xi).map(|(a, &x)| a.norm_sq() - 2.0 * x).collect();
    let index = PowerIndex::new(&grid, points, &power_weight);
    let start = LabeledPolygon::new(domain.vertices().to_vec(), (0..domain.len()).map(EdgeLabel::Boundary).collect());

    let labeled: Vec<LabeledPolygon<EdgeLabel>> = (0..points.len())
        .into_par_iter()
        .map(|i| build_cell(i, &start, &index, points, xi, &power_weight, eps))
        .collect();

    let mut shared: BTreeMap<(usize, usize), EdgeRecord> = BTreeMap::new();
    for (c, cell) in labeled.iter().enumerate() {
        for (p, q, label) in cell.labeled_edges() {
            let EdgeLabel::Site(other) = label else {
                continue;
            };
            let length = p.distance(q);
            if length <= eps {
                continue;
            }
            let record = if c < other {
                EdgeRecord { i: c, j: other, p, q, length }
            } else {
                EdgeRecord { i: other, j: c, p: q, q: p, length }
            };
            // the copy seen from the lower-indexed cell wins
            if c < other {
                shared.insert((c, other), record);
            } else {
                shared.entry((other, c)).or_insert(record);
            }
        }
    }

    let (cells, cell_labels) = labeled
        .into_iter()
        .map(|lp| {
            let labels = lp.labels.clone();
            (lp.into_polygon(), labels)
        })
        .unzip();

    Ok(Tessellation {
        domain: domain.clone(),
        sites: points.to_vec(),
        xi: xi.to_vec(),
        cells,
        cell_labels,
        edges: shared.into_values().collect(),
        eps,
    })
}

struct CellQuery<'a> {
    i: usize,
    points: &'a [Point2],
    xi: &'a [f64],
    w_i: f64,
    poly: LabeledPolygon<EdgeLabel>,
    eps: f64,
    lo: Point2,
    hi: Point2,
    threshold: f64,
}

impl CellQuery<'_> {
    /// Bounding box of the cell and the largest power distance of site `i`
    /// over it; a site `j` can only cut the cell where its power distance is
    /// smaller.
    fn refresh(&mut self) {
        let a_i = self.points[self.i];
        let (mut lo, mut hi) =
            (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        let mut reach: f64 = f64::NEG_INFINITY;
        for v in &self.poly.vertices {
            lo = Point2::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Point2::new(hi.x.max(v.x), hi.y.max(v.y));
            reach = reach.max((*v - a_i).norm_sq());
        }
        self.lo = lo;
        self.hi = hi;
        // slack for vertices moved by the clipping tolerance
        let slack = 2.0 * self.eps * (reach.sqrt() + self.eps);
        self.threshold = reach - self.w_i + slack;
    }
}

impl PowerQuery for CellQuery<'_> {
    fn box_dist_sq(&self, lo: Point2, hi: Point2) -> f64 {
        box_box_dist_sq(self.lo, self.hi, lo, hi)
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }

    fn order_key(&self, lo: Point2, hi: Point2) -> f64 {
        point_box_dist_sq(self.points[self.i], lo, hi)
    }

    fn visit(&mut self, j: usize) {
        if j == self.i {
            return;
        }
        let a_i = self.points[self.i];
        let normal = self.points[j] - a_i;
        let offset = self.xi[j] - self.xi[self.i];
        if self.poly.clip_in_place(normal, offset, EdgeLabel::Site(j), self.eps) && !self.poly.is_empty() {
            self.refresh();
        }
    }

    fn done(&self) -> bool {
        self.poly.is_empty()
    }
}

fn build_cell(
    i: usize,
    start: &LabeledPolygon<EdgeLabel>,
    index: &PowerIndex<'_>,
    points: &[Point2],
    xi: &[f64],
    power_weight: &[f64],
    eps: f64,
) -> LabeledPolygon<EdgeLabel> {
    let mut q = CellQuery {
        i,
        points,
        xi,
        w_i: power_weight[i],
        poly: start.clone(),
        eps,
        lo: Point2::new(0.0, 0.0),
        hi: Point2::new(0.0, 0.0),
        threshold: 0.0,
    };
    q.refresh();
    index.query(&mut q);
    q.poly
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> ConvexPolygon {
        ConvexPolygon::rectangle(Point2::new(-1.0, -1.0), Point2::new(1.0, 1.0)).unwrap()
    }

    fn sites(pts: &[(f64, f64)]) -> SiteSet {
        SiteSet::new(pts.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn single_site_owns_the_domain() {
        let t = build_tessellation(&square(), &sites(&[(0.3, -0.2)]), &[5.0]).unwrap();
        assert_eq!(t.cell(0).vertices(), square().vertices());
        assert!(t.edges().is_empty());
    }

    #[test]
    fn two_symmetric_sites_split_the_square() {
        let t = build_tessellation(&square(), &sites(&[(-1.0, 0.0), (1.0, 0.0)]), &[0.0, 0.0]).unwrap();
        assert!((t.cell(0).area() - 2.0).abs() < 1e-14);
        assert!((t.cell(1).area() - 2.0).abs() < 1e-14);
        assert_eq!(t.edges().len(), 1);
        let e = t.edges()[0];
        assert_eq!((e.i, e.j), (0, 1));
        assert!((e.length - 2.0).abs() < 1e-14);
        assert!(e.p.x.abs() < 1e-15 && e.q.x.abs() < 1e-15);
    }

    #[test]
    fn four_cross_sites_meet_at_origin() {
        let t = build_tessellation(&square(), &sites(&[(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]), &[0.0; 4])
            .unwrap();
        for c in t.cells() {
            assert!((c.area() - 1.0).abs() < 1e-14);
            assert!(c.vertices().iter().any(|v| v.norm() < 1e-14));
        }
        // opposite sites only touch in a point
        assert_eq!(t.edges().len(), 4);
        assert!(t.edges().iter().all(|e| (e.length - 2f64.sqrt()).abs() < 1e-14));
    }

    #[test]
    fn mismatched_weights_are_rejected() {
        let r = build_tessellation(&square(), &sites(&[(0.0, 0.0), (1.0, 0.0)]), &[0.0]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn nearly_coincident_sites_are_rejected() {
        let s = sites(&[(0.0, 0.0), (1e-13, 0.0)]);
        let r = build_tessellation(&square(), &s, &[0.0, 0.0]);
        assert!(matches!(r, Err(Error::DuplicateSites(0, 1))));
    }

    #[test]
    fn far_away_site_with_small_weight_takes_everything() {
        let s = sites(&[(0.0, 0.0), (10.0, 0.0)]);
        let t = build_tessellation(&square(), &s, &[100.0, 0.0]).unwrap();
        assert!(t.cell(0).is_empty());
        assert!((t.cell(1).area() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn pruned_cells_match_clipping_against_all_sites() {
        let pts: Vec<Point2> = (0..200)
            .map(|k| {
                let t = k as f64 * 0.618;
                Point2::new(0.9 * (3.1 * t).sin(), 0.9 * (1.7 * t).cos())
            })
            .collect();
        let s = SiteSet::new(pts.clone()).unwrap();
        let xi: Vec<f64> = (0..200).map(|k| ((k * 53 % 97) as f64 / 97.0 - 0.5) * 0.4).collect();
        let t = build_tessellation(&square(), &s, &xi).unwrap();
        let eps = square().geom_eps();
        for i in 0..pts.len() {
            let mut poly = LabeledPolygon::new(square().vertices().to_vec(), (0..4).map(EdgeLabel::Boundary).collect());
            for j in (0..pts.len()).filter(|&j| j != i) {
                poly.clip_in_place(pts[j] - pts[i], xi[j] - xi[i], EdgeLabel::Site(j), eps);
            }
            let area = poly.into_polygon().area();
            assert!((t.cell(i).area() - area).abs() < 1e-13, "cell {i}: {} vs {area}", t.cell(i).area());
        }
    }
}
