use super::sites::SiteGrid;
use super::Point2;

/// Query against a [`PowerIndex`]: a region of the plane and a threshold on
/// the power distance `|x - a_j|^2 - w_j`.
pub(crate) trait PowerQuery {
    /// Lower bound on the squared distance from the region to the box.
    fn box_dist_sq(&self, lo: Point2, hi: Point2) -> f64;
    /// Sites whose power distance to the region cannot drop below this
    /// value are skipped.
    fn threshold(&self) -> f64;
    /// Children of a block are visited in increasing order of this key.
    fn order_key(&self, lo: Point2, hi: Point2) -> f64 {
        self.box_dist_sq(lo, hi)
    }
    fn visit(&mut self, j: usize);
    fn done(&self) -> bool {
        false
    }
}

struct Level {
    nx: usize,
    ny: usize,
    max_w: Vec<f64>,
}

/// Pyramid of per-bucket maximal power weights on top of a [`SiteGrid`],
/// so that searches prune whole blocks of sites whose weights are too small
/// to matter.
pub(crate) struct PowerIndex<'a> {
    grid: &'a SiteGrid,
    points: &'a [Point2],
    weights: &'a [f64],
    levels: Vec<Level>,
}

pub(crate) fn point_box_dist_sq(p: Point2, lo: Point2, hi: Point2) -> f64 {
    let dx = (lo.x - p.x).max(p.x - hi.x).max(0.0);
    let dy = (lo.y - p.y).max(p.y - hi.y).max(0.0);
    dx * dx + dy * dy
}

/// Squared distance between two axis-aligned boxes.
pub(crate) fn box_box_dist_sq(lo: Point2, hi: Point2, lo2: Point2, hi2: Point2) -> f64 {
    let dx = (lo2.x - hi.x).max(lo.x - hi2.x).max(0.0);
    let dy = (lo2.y - hi.y).max(lo.y - hi2.y).max(0.0);
    dx * dx + dy * dy
}

impl<'a> PowerIndex<'a> {
    pub fn new(grid: &'a SiteGrid, points: &'a [Point2], weights: &'a [f64]) -> Self {
        let (nx, ny) = grid.dims();
        let mut base = vec![f64::NEG_INFINITY; nx * ny];
        for cy in 0..ny {
            for cx in 0..nx {
                base[cy * nx + cx] = grid.bucket(cx, cy).iter().map(|&j| weights[j]).fold(f64::NEG_INFINITY, f64::max);
            }
        }
        let mut levels = vec![Level { nx, ny, max_w: base }];
        while levels.last().is_some_and(|l| l.nx > 1 || l.ny > 1) {
            let prev = levels.last().unwrap();
            let (px, py) = (prev.nx.div_ceil(2), prev.ny.div_ceil(2));
            let mut max_w = vec![f64::NEG_INFINITY; px * py];
            for y in 0..prev.ny {
                for x in 0..prev.nx {
                    let k = (y / 2) * px + x / 2;
                    max_w[k] = max_w[k].max(prev.max_w[y * prev.nx + x]);
                }
            }
            levels.push(Level { nx: px, ny: py, max_w });
        }
        Self { grid, points, weights, levels }
    }

    fn node_box(&self, level: usize, bx: usize, by: usize) -> (Point2, Point2) {
        let span = (1usize << level) as f64 * self.grid.cell_size();
        let lo = self.grid.origin() + Point2::new(bx as f64 * span, by as f64 * span);
        (lo, lo + Point2::new(span, span))
    }

    /// Visits every site whose power distance to the query region may lie
    /// below the query threshold, nearer blocks first. The threshold is
    /// re-read before each block, so visits may tighten it.
    pub fn query(&self, q: &mut impl PowerQuery) {
        let top = self.levels.len() - 1;
        let mut stack = vec![(top, 0usize, 0usize)];
        let skip = |bound: f64, w: f64, thr: f64| bound - w > thr + 1e-10 * (1.0 + thr.abs() + w.abs());
        while let Some((level, bx, by)) = stack.pop() {
            if q.done() {
                return;
            }
            let lvl = &self.levels[level];
            let w = lvl.max_w[by * lvl.nx + bx];
            if w == f64::NEG_INFINITY {
                continue;
            }
            let (lo, hi) = self.node_box(level, bx, by);
            if skip(q.box_dist_sq(lo, hi), w, q.threshold()) {
                continue;
            }
            if level == 0 {
                for &j in self.grid.bucket(bx, by) {
                    let p = self.points[j];
                    if !skip(q.box_dist_sq(p, p), self.weights[j], q.threshold()) {
                        q.visit(j);
                        if q.done() {
                            return;
                        }
                    }
                }
                continue;
            }
            let child = &self.levels[level - 1];
            let mut kids: [(f64, usize, usize); 4] = [(f64::INFINITY, 0, 0); 4];
            let mut count = 0;
            for dy in 0..2 {
                for dx in 0..2 {
                    let (cx, cy) = (2 * bx + dx, 2 * by + dy);
                    if cx < child.nx && cy < child.ny {
                        let (clo, chi) = self.node_box(level - 1, cx, cy);
                        kids[count] = (q.order_key(clo, chi) - child.max_w[cy * child.nx + cx], cx, cy);
                        count += 1;
                    }
                }
            }
            // largest bound pushed first so the nearest block is popped next
            kids[..count].sort_by(|a, b| b.0.total_cmp(&a.0));
            for &(_, cx, cy) in &kids[..count] {
                stack.push((level - 1, cx, cy));
            }
        }
    }
}

/// Point query: collects all sites with power distance at `x` at most the
/// threshold.
pub(crate) struct PointQuery {
    pub x: Point2,
    pub threshold: f64,
    pub found: Vec<usize>,
}

impl PowerQuery for PointQuery {
    fn box_dist_sq(&self, lo: Point2, hi: Point2) -> f64 {
        point_box_dist_sq(self.x, lo, hi)
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }

    fn visit(&mut self, j: usize) {
        self.found.push(j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_query_matches_brute_force() {
        let pts: Vec<Point2> = (0..300)
            .map(|k| {
                let t = k as f64 * 0.913;
                Point2::new(t.sin() * 2.0, (1.3 * t).cos())
            })
            .collect();
        let w: Vec<f64> = (0..300).map(|k| ((k * 37 % 101) as f64 / 101.0 - 0.5) * 3.0).collect();
        let grid = SiteGrid::new(&pts);
        let index = PowerIndex::new(&grid, &pts, &w);
        for (x, thr) in [(Point2::new(0.1, 0.2), 0.0), (Point2::new(-1.5, 0.9), -0.5), (Point2::new(3.0, 3.0), 8.0)] {
            let mut q = PointQuery { x, threshold: thr, found: Vec::new() };
            index.query(&mut q);
            let mut found = q.found;
            found.sort_unstable();
            let brute: Vec<usize> = (0..pts.len()).filter(|&j| (x - pts[j]).norm_sq() - w[j] <= thr).collect();
            // the search may report a few extra candidates, never miss one
            assert!(brute.iter().all(|j| found.binary_search(j).is_ok()));
            assert!(found.iter().all(|&j| (x - pts[j]).norm_sq() - w[j] <= thr + 1e-9));
        }
    }
}
