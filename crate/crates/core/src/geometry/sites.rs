use std::ops::Deref;

use super::Point2;
use crate::error::{Error, Result};

/// Pairwise distinct sites `a_1, ..., a_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteSet {
    sites: Vec<Point2>,
}

impl SiteSet {
    /// Rejects non-finite coordinates and exactly coincident sites. The
    /// tolerance-aware duplicate check happens when a tessellation is built,
    /// because the tolerance is relative to the domain.
    pub fn new(sites: Vec<Point2>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidInput("site set is empty".into()));
        }
        if let Some(p) = sites.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite site {p:?}")));
        }
        let set = Self { sites };
        if let Some((i, j)) = set.find_duplicate(0.0) {
            return Err(Error::DuplicateSites(i, j));
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn points(&self) -> &[Point2] {
        &self.sites
    }

    /// The vector `A` with `A_i = |a_i|^2 / 2`.
    pub fn half_square_norms(&self) -> Vec<f64> {
        self.sites.iter().map(|a| 0.5 * a.norm_sq()).collect()
    }

    /// First pair of sites closer than or equal to `tol`.
    pub(crate) fn find_duplicate(&self, tol: f64) -> Option<(usize, usize)> {
        self.find_duplicate_in(&SiteGrid::new(&self.sites), tol)
    }

    pub(crate) fn find_duplicate_in(&self, grid: &SiteGrid, tol: f64) -> Option<(usize, usize)> {
        for (i, &p) in self.sites.iter().enumerate() {
            for r in 0..=grid.max_ring() {
                if grid.ring_lower_bound(r) > tol {
                    break;
                }
                for j in grid.ring(p, r) {
                    if j != i && p.distance(self.sites[j]) <= tol {
                        return Some((i.min(j), i.max(j)));
                    }
                }
            }
        }
        None
    }
}

impl Deref for SiteSet {
    type Target = [Point2];
    fn deref(&self) -> &[Point2] {
        &self.sites
    }
}

/// A weight vector `xi` with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn new(xi: Vec<f64>) -> Result<Self> {
        if xi.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("weights must be finite".into()));
        }
        Ok(Self(xi))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Weights {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Uniform bucket grid over the bounding box of a point set, visited in
/// square rings around a query point.
#[derive(Clone, Debug)]
pub(crate) struct SiteGrid {
    origin: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    start: Vec<usize>,
    items: Vec<usize>,
    ring_buf_hint: usize,
}

impl SiteGrid {
    pub fn new(points: &[Point2]) -> Self {
        let (mut lo, mut hi) = (points[0], points[0]);
        for p in points {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let (w, h) = (hi.x - lo.x, hi.y - lo.y);
        let extent = w.max(h).max(f64::MIN_POSITIVE);
        let (we, he) = (w.max(extent * 1e-3), h.max(extent * 1e-3));
        // about two points per bucket
        let target = (2.0 * we * he / points.len() as f64).sqrt();
        let nx = ((we / target).ceil() as usize).clamp(1, 4096);
        let ny = ((he / target).ceil() as usize).clamp(1, 4096);
        let cell = (we / nx as f64).max(he / ny as f64);
        let mut grid = Self {
            origin: lo,
            cell,
            nx,
            ny,
            start: vec![0; nx * ny + 1],
            items: vec![0; points.len()],
            ring_buf_hint: 0,
        };
        let keys: Vec<usize> = points.iter().map(|&p| grid.key(p)).collect();
        for &k in &keys {
            grid.start[k + 1] += 1;
        }
        for k in 0..nx * ny {
            grid.start[k + 1] += grid.start[k];
        }
        let mut fill = grid.start.clone();
        for (i, &k) in keys.iter().enumerate() {
            grid.items[fill[k]] = i;
            fill[k] += 1;
        }
        grid.ring_buf_hint = 8 * points.len() / (nx * ny).max(1) + 8;
        grid
    }

    fn coords(&self, p: Point2) -> (usize, usize) {
        let cx = ((p.x - self.origin.x) / self.cell).floor();
        let cy = ((p.y - self.origin.y) / self.cell).floor();
        let clamp = |c: f64, n: usize| {
            if c.is_nan() || c < 0.0 {
                0
            } else {
                (c as usize).min(n - 1)
            }
        };
        (clamp(cx, self.nx), clamp(cy, self.ny))
    }

    fn key(&self, p: Point2) -> usize {
        let (cx, cy) = self.coords(p);
        cy * self.nx + cx
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    /// Side length of a bucket.
    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn bucket(&self, cx: usize, cy: usize) -> &[usize] {
        let k = cy * self.nx + cx;
        &self.items[self.start[k]..self.start[k + 1]]
    }

    /// Largest ring index that can contain points.
    pub fn max_ring(&self) -> usize {
        self.nx.max(self.ny)
    }

    /// Lower bound on the distance from the query point to any point in
    /// ring `r`.
    pub fn ring_lower_bound(&self, r: usize) -> f64 {
        r.saturating_sub(1) as f64 * self.cell
    }

    /// Indices of the points in the buckets at Chebyshev distance `r` from
    /// the bucket of `p`.
    pub fn ring(&self, p: Point2, r: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.ring_buf_hint);
        self.ring_into(p, r, &mut out);
        out
    }

    /// [`SiteGrid::ring`] into a reusable buffer (cleared first).
    pub fn ring_into(&self, p: Point2, r: usize, out: &mut Vec<usize>) {
        out.clear();
        let (cx, cy) = self.coords(p);
        let (cx, cy, r) = (cx as isize, cy as isize, r as isize);
        let in_x = |x: isize| x >= 0 && (x as usize) < self.nx;
        let in_y = |y: isize| y >= 0 && (y as usize) < self.ny;
        if r == 0 {
            out.extend_from_slice(self.bucket(cx as usize, cy as usize));
            return;
        }
        for y in [cy - r, cy + r] {
            if in_y(y) {
                for x in (cx - r).max(0)..=(cx + r).min(self.nx as isize - 1) {
                    out.extend_from_slice(self.bucket(x as usize, y as usize));
                }
            }
        }
        for x in [cx - r, cx + r] {
            if in_x(x) {
                for y in (cy - r + 1).max(0)..=(cy + r - 1).min(self.ny as isize - 1) {
                    out.extend_from_slice(self.bucket(x as usize, y as usize));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rings_cover_every_point_once() {
        let pts: Vec<Point2> = (0..97)
            .map(|k| {
                let t = k as f64 * 0.731;
                Point2::new(t.sin() * 3.0, (1.7 * t).cos())
            })
            .collect();
        let grid = SiteGrid::new(&pts);
        let q = Point2::new(0.3, -0.2);
        let mut seen = vec![0; pts.len()];
        for r in 0..=grid.max_ring() {
            for i in grid.ring(q, r) {
                seen[i] += 1;
                assert!(q.distance(pts[i]) >= grid.ring_lower_bound(r) - 1e-12);
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn duplicate_sites_are_rejected() {
        let r = SiteSet::new(vec![Point2::new(0.0, 0.0), Point2::new(0.0, 0.0)]);
        assert!(matches!(r, Err(Error::DuplicateSites(0, 1))));
        let s = SiteSet::new(vec![Point2::new(0.0, 0.0), Point2::new(1e-14, 0.0)]).unwrap();
        assert_eq!(s.find_duplicate(1e-12), Some((0, 1)));
    }

    #[test]
    fn weights_reject_nan() {
        assert!(Weights::new(vec![0.0, f64::NAN]).is_err());
        assert_eq!(Weights::zeros(3).len(), 3);
    }
}
