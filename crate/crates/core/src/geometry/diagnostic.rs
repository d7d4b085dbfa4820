use std::collections::HashMap;

use rayon::prelude::*;

use super::index::{PointQuery, PowerIndex};
use super::sites::SiteGrid;
use super::{Point2, Tessellation};

/// Vertices of the tessellation where four or more regions meet, counting
/// sites whose affine piece is maximal within `tol` and domain edges within
/// distance `tol`. An empty result means the weights satisfy the
/// differentiability condition numerically.
pub fn dc_diagnostic(tess: &Tessellation, tol: f64) -> Vec<Point2> {
    let sites = tess.sites();
    let xi = tess.weights();
    let boundary = tess.domain().half_planes();
    let grid = SiteGrid::new(sites);
    let power_weight: Vec<f64> = sites.iter().zip(xi).map(|(a, &x)| a.norm_sq() - 2.0 * x).collect();
    let index = PowerIndex::new(&grid, sites, &power_weight);

    let mut candidates: Vec<(Point2, usize)> = Vec::new();
    for (i, cell) in tess.cells().iter().enumerate() {
        candidates.extend(cell.vertices().iter().map(|&v| (v, i)));
    }

    let hits: Vec<Point2> = candidates
        .par_iter()
        .filter_map(|&(x, owner)| {
            let pd_owner = (x - sites[owner]).norm_sq() - power_weight[owner];
            // affine value within tol of the top means power distance
            // within 2 tol of the smallest one
            let mut q = PointQuery { x, threshold: pd_owner + 2.0 * tol, found: Vec::new() };
            index.query(&mut q);
            let values: Vec<f64> = q.found.iter().map(|&j| tess.affine_value(j, x)).collect();
            let top = values.iter().copied().fold(tess.affine_value(owner, x), f64::max);
            let active_sites = values.iter().filter(|&&v| v >= top - tol).count();
            let active_edges = boundary.iter().filter(|h| h.signed_distance(x) >= -tol).count();
            (active_sites + active_edges >= 4).then_some(x)
        })
        .collect();

    dedupe(hits, (tol * 10.0).max(tess.eps() * 10.0))
}

fn dedupe(points: Vec<Point2>, radius: f64) -> Vec<Point2> {
    let key = |p: Point2| ((p.x / radius).floor() as i64, (p.y / radius).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<Point2>> = HashMap::new();
    let mut out = Vec::new();
    for p in points {
        let (kx, ky) = key(p);
        let seen = (-1..=1).any(|dx| {
            (-1..=1)
                .any(|dy| buckets.get(&(kx + dx, ky + dy)).is_some_and(|b| b.iter().any(|q| q.distance(p) <= radius)))
        });
        if !seen {
            buckets.entry((kx, ky)).or_default().push(p);
            out.push(p);
        }
    }
    out
}
