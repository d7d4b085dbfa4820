//! Exact discrete transport between a sampled prior and weighted sites.
//!
//! The prior is replaced by point masses on an `m x m` grid and the
//! transport problem to the sites is solved exactly as a min-cost flow, so
//! the result carries no regularization bias. It is meant as an independent
//! check of [`TransportProblem::w_value`](crate::TransportProblem::w_value).

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geometry::{halfplane_clip, ConvexPolygon, Point2};
use crate::quadrature::{polygon_density_integral, DensityModel, Integrand};
use crate::transport::TransportProblem;

/// Largest grid resolution accepted by [`oracle_w2`].
pub const MAX_GRID: usize = 128;
/// Largest number of sites accepted by [`oracle_w2`].
pub const MAX_SITES: usize = 16;

/// Point masses approximating the prior.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteCloud {
    pub points: Vec<Point2>,
    pub masses: Vec<f64>,
}

impl DiscreteCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }
}

/// Samples the prior on the `m x m` grid over the bounding box of `domain`.
///
/// Every grid cell is clipped to the domain; the point is the centroid of
/// the clipped cell (the cell center for interior cells) and the mass is
/// the prior's integral over it, exact for the uniform density. Cells
/// meeting the domain in a null set are dropped.
pub fn sample_density(domain: &ConvexPolygon, rho: &DensityModel, m: usize) -> Result<DiscreteCloud> {
    if m < 2 {
        return Err(Error::InvalidInput(format!("grid resolution must be at least 2, got {m}")));
    }
    let (lo, hi) = domain.bounding_box().ok_or_else(|| Error::InvalidInput("domain polygon is empty".into()))?;
    let (hx, hy) = ((hi.x - lo.x) / m as f64, (hi.y - lo.y) / m as f64);
    let mut cloud = DiscreteCloud { points: Vec::new(), masses: Vec::new() };
    for iy in 0..m {
        for ix in 0..m {
            let x0 = lo.x + ix as f64 * hx;
            let y0 = lo.y + iy as f64 * hy;
            let (x1, y1) = (x0 + hx, y0 + hy);
            let mut piece = halfplane_clip(domain, Point2::new(-1.0, 0.0), -x0);
            piece = halfplane_clip(&piece, Point2::new(1.0, 0.0), x1);
            piece = halfplane_clip(&piece, Point2::new(0.0, -1.0), -y0);
            piece = halfplane_clip(&piece, Point2::new(0.0, 1.0), y1);
            let Some(center) = piece.centroid() else {
                continue;
            };
            let mass = polygon_density_integral(&piece, rho, Integrand::One);
            if mass > 0.0 {
                cloud.points.push(center);
                cloud.masses.push(mass);
            }
        }
    }
    Ok(cloud)
}

/// Optimal plan of [`min_cost_transport`] with its dual certificate.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    pub cost: f64,
    /// Nonzero entries `(source, site, mass)`.
    pub flow: Vec<(usize, usize, f64)>,
    /// Source potentials `u_s = min_k (c_sk - v_k)`.
    pub source_potentials: Vec<f64>,
    pub site_potentials: Vec<f64>,
    /// `sum_s m_s u_s + sum_k b_k v_k`; equals `cost` at an optimum.
    pub dual_objective: f64,
}

impl TransportPlan {
    pub fn duality_gap(&self) -> f64 {
        (self.cost - self.dual_objective).abs()
    }
}

/// Exact transport of the cloud onto the sites with masses `target` under
/// the squared Euclidean cost.
///
/// Sources are inserted one at a time and routed along shortest augmenting
/// paths. Because there are few sites, the residual network is compressed
/// to the sites: moving mass that source `s` sends to site `i` over to site
/// `k` costs `c_sk - c_si`, and the cheapest such move per pair is kept in
/// a lazily pruned heap. Shortest paths on the compressed graph use
/// Bellman-Ford. Cloud masses are rescaled to the target total, which must
/// agree within `1e-6` relative.
pub fn min_cost_transport(cloud: &DiscreteCloud, sites: &[Point2], target: &[f64]) -> Result<TransportPlan> {
    let n = sites.len();
    if n == 0 || target.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: target.len() });
    }
    if cloud.points.len() != cloud.masses.len() {
        return Err(Error::DimensionMismatch { expected: cloud.points.len(), actual: cloud.masses.len() });
    }
    if target.iter().chain(&cloud.masses).any(|&b| !(b >= 0.0 && b.is_finite())) {
        return Err(Error::InvalidInput("masses must be finite and nonnegative".into()));
    }
    let demand: f64 = target.iter().sum();
    let supply = cloud.total();
    if demand <= 0.0 || (supply - demand).abs() > 1e-6 * demand {
        return Err(Error::Infeasible(format!("cloud mass {supply} does not match target mass {demand}")));
    }
    let scale = demand / supply;
    let masses: Vec<f64> = cloud.masses.iter().map(|m| m * scale).collect();
    let cost = |s: usize, k: usize| (cloud.points[s] - sites[k]).norm_sq();
    let zero = 1e-14 * demand;

    let mut solver = Network {
        n,
        slack: target.to_vec(),
        flows: vec![Vec::new(); cloud.len()],
        reroute: (0..n * n).map(|_| BinaryHeap::new()).collect(),
    };
    for (s, &mass) in masses.iter().enumerate() {
        let mut left = mass;
        while left > zero && solver.slack.iter().any(|&b| b > zero) {
            let (end, path) = solver.shortest_path(s, &cost, zero)?;
            let mut delta = left.min(solver.slack[end]);
            for hop in &path {
                delta = delta.min(solver.flow(hop.source, hop.from));
            }
            solver.augment(s, end, &path, delta, &cost, zero);
            left -= delta;
        }
    }

    let site_potentials = solver.potentials(&cost);
    let mut flow = Vec::new();
    let mut primal = 0.0;
    for (s, row) in solver.flows.iter().enumerate() {
        for &(k, f) in row {
            if f > 0.0 {
                flow.push((s, k, f));
                primal += f * cost(s, k);
            }
        }
    }
    let source_potentials: Vec<f64> = (0..cloud.len())
        .map(|s| (0..n).map(|k| cost(s, k) - site_potentials[k]).fold(f64::INFINITY, f64::min))
        .collect();
    let dual_objective = masses.iter().zip(&source_potentials).map(|(m, u)| m * u).sum::<f64>()
        + target.iter().zip(&site_potentials).map(|(b, v)| b * v).sum::<f64>();
    Ok(TransportPlan { cost: primal, flow, source_potentials, site_potentials, dual_objective })
}

/// Transport cost from the sampled prior to the masses `u~(xi)` at the
/// sites, for comparison with `W(xi)`.
pub fn oracle_w2(prob: &TransportProblem, xi: &[f64], m: usize) -> Result<f64> {
    if m > MAX_GRID || prob.n() > MAX_SITES {
        return Err(Error::InvalidInput(format!(
            "oracle limited to m <= {MAX_GRID} and n <= {MAX_SITES}, got m = {m}, n = {}",
            prob.n()
        )));
    }
    let target = prob.u_tilde(xi)?;
    let cloud = sample_density(prob.domain(), prob.density(), m)?;
    Ok(min_cost_transport(&cloud, prob.sites(), &target)?.cost)
}

/// One rerouting step of an augmenting path: mass of `source` moves from
/// site `from` to site `to`.
#[derive(Clone, Copy, Debug)]
struct Hop {
    source: usize,
    from: usize,
    to: usize,
}

struct Network {
    n: usize,
    slack: Vec<f64>,
    /// Per source, the sites it currently serves.
    flows: Vec<Vec<(usize, f64)>>,
    /// Heap per ordered pair `(i, k)` of `c_sk - c_si` over sources `s`
    /// that may serve `i`; stale entries are dropped on access.
    reroute: Vec<BinaryHeap<Reverse<(Key, usize)>>>,
}

/// Totally ordered float key for the heaps.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Network {
    fn flow(&self, s: usize, k: usize) -> f64 {
        self.flows[s].iter().find(|e| e.0 == k).map_or(0.0, |e| e.1)
    }

    fn add_flow(&mut self, s: usize, k: usize, delta: f64, cost: &impl Fn(usize, usize) -> f64) {
        if let Some(e) = self.flows[s].iter_mut().find(|e| e.0 == k) {
            e.1 += delta;
            return;
        }
        self.flows[s].push((k, delta));
        for to in (0..self.n).filter(|&to| to != k) {
            self.reroute[k * self.n + to].push(Reverse((Key(cost(s, to) - cost(s, k)), s)));
        }
    }

    fn remove_flow(&mut self, s: usize, k: usize, delta: f64, zero: f64) {
        let row = &mut self.flows[s];
        if let Some(pos) = row.iter().position(|e| e.0 == k) {
            row[pos].1 -= delta;
            if row[pos].1 <= zero {
                row.swap_remove(pos);
            }
        }
    }

    /// Cheapest move of mass from site `i` to site `k`.
    fn best_reroute(&mut self, i: usize, k: usize) -> Option<(f64, usize)> {
        let heap = &mut self.reroute[i * self.n + k];
        while let Some(&Reverse((Key(c), s))) = heap.peek() {
            if self.flows[s].iter().any(|e| e.0 == i) {
                return Some((c, s));
            }
            heap.pop();
        }
        None
    }

    /// Shortest path from the new source `s` to a site with free capacity.
    fn shortest_path(&mut self, s: usize, cost: &impl Fn(usize, usize) -> f64, zero: f64) -> Result<(usize, Vec<Hop>)> {
        let n = self.n;
        let mut edges = Vec::with_capacity(n * n);
        for i in 0..n {
            for k in (0..n).filter(|&k| k != i) {
                if let Some((c, src)) = self.best_reroute(i, k) {
                    edges.push((i, k, c, src));
                }
            }
        }
        let mut dist: Vec<f64> = (0..n).map(|k| cost(s, k)).collect();
        let mut pred: Vec<Option<(usize, usize)>> = vec![None; n];
        // relaxations below the round-off level are ignored, which rules
        // out spurious negative cycles
        let tol = 1e-13 * (1.0 + dist.iter().fold(0.0f64, |a, d| a.max(d.abs())));
        for _ in 0..n {
            let mut changed = false;
            for &(i, k, c, src) in &edges {
                let alt = dist[i] + c;
                if alt < dist[k] - tol {
                    dist[k] = alt;
                    pred[k] = Some((i, src));
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let end = (0..n)
            .filter(|&k| self.slack[k] > zero)
            .min_by(|&a, &b| dist[a].total_cmp(&dist[b]))
            .ok_or_else(|| Error::Infeasible("no site has remaining capacity".into()))?;
        let mut path = Vec::new();
        let mut k = end;
        while let Some((i, src)) = pred[k] {
            path.push(Hop { source: src, from: i, to: k });
            k = i;
            if path.len() > n {
                return Err(Error::Infeasible("cycle in augmenting path".into()));
            }
        }
        path.reverse();
        Ok((end, path))
    }

    fn augment(
        &mut self,
        s: usize,
        end: usize,
        path: &[Hop],
        delta: f64,
        cost: &impl Fn(usize, usize) -> f64,
        zero: f64,
    ) {
        let first = path.first().map_or(end, |h| h.from);
        self.add_flow(s, first, delta, cost);
        for hop in path {
            self.remove_flow(hop.source, hop.from, delta, zero);
            self.add_flow(hop.source, hop.to, delta, cost);
        }
        self.slack[end] -= delta;
    }

    /// Site potentials `v` with `v_k - v_i <= c_sk - c_si` whenever `s`
    /// serves `i`, from shortest distances on the compressed graph.
    fn potentials(&mut self, _cost: &impl Fn(usize, usize) -> f64) -> Vec<f64> {
        let n = self.n;
        let mut edges = Vec::new();
        for i in 0..n {
            for k in (0..n).filter(|&k| k != i) {
                if let Some((c, _)) = self.best_reroute(i, k) {
                    edges.push((i, k, c));
                }
            }
        }
        let mut v = vec![0.0; n];
        for _ in 0..n {
            let mut changed = false;
            for &(i, k, c) in &edges {
                if v[i] + c < v[k] {
                    v[k] = v[i] + c;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> ConvexPolygon {
        ConvexPolygon::rectangle(Point2::new(-1.0, -1.0), Point2::new(1.0, 1.0)).unwrap()
    }

    fn cloud(points: &[(f64, f64)], masses: &[f64]) -> DiscreteCloud {
        DiscreteCloud { points: points.iter().map(|&(x, y)| Point2::new(x, y)).collect(), masses: masses.to_vec() }
    }

    #[test]
    fn coarse_grid_has_four_unit_cells() {
        let c = sample_density(&square(), &DensityModel::lebesgue(), 2).unwrap();
        assert_eq!(c.len(), 4);
        assert!(c.masses.iter().all(|&m| (m - 1.0).abs() < 1e-15));
    }

    #[test]
    fn clipped_cells_preserve_the_area() {
        for m in [3, 7, 64] {
            let c = sample_density(&square(), &DensityModel::lebesgue(), m).unwrap();
            assert!((c.total() - 4.0).abs() < 1e-12);
        }
        let diamond = ConvexPolygon::new(vec![
            Point2::new(0.4, 0.3),
            Point2::new(0.5, 0.4),
            Point2::new(0.4, 0.5),
            Point2::new(0.3, 0.4),
        ])
        .unwrap();
        let c = sample_density(&diamond, &DensityModel::lebesgue(), 64).unwrap();
        assert!((c.total() - 0.02).abs() < 1e-12);
        assert!(c.points.iter().all(|&p| diamond.contains(p, 1e-12)));
    }

    #[test]
    fn trivial_plans() {
        let plan = min_cost_transport(&cloud(&[(0.0, 0.0)], &[1.0]), &[Point2::new(1.0, 0.0)], &[1.0]).unwrap();
        assert!((plan.cost - 1.0).abs() < 1e-15);
        let sites = [Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0)];
        let plan = min_cost_transport(&cloud(&[(1.0, 0.0), (-1.0, 0.0)], &[1.0, 1.0]), &sites, &[1.0, 1.0]).unwrap();
        assert!(plan.cost.abs() < 1e-15);
        assert!(plan.duality_gap() < 1e-12);
    }

    #[test]
    fn mismatched_mass_is_infeasible() {
        let r = min_cost_transport(&cloud(&[(0.0, 0.0)], &[1.0]), &[Point2::new(1.0, 0.0)], &[1.1]);
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }

    #[test]
    fn single_site_cost_approaches_the_integral() {
        let c = sample_density(&square(), &DensityModel::lebesgue(), 64).unwrap();
        let plan = min_cost_transport(&c, &[Point2::ORIGIN], &[4.0]).unwrap();
        // midpoint rule error is h^2 / 6 per unit area for |x|^2
        assert!((plan.cost - 8.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn plan_is_feasible_and_certified() {
        let c = sample_density(&square(), &DensityModel::lebesgue(), 24).unwrap();
        let sites = [
            Point2::new(0.1, 0.2),
            Point2::new(-0.6, 0.5),
            Point2::new(0.7, -0.3),
            Point2::new(-0.2, -0.8),
            Point2::new(2.0, 2.0),
        ];
        let target = [0.3, 1.2, 0.9, 1.0, 0.6];
        let plan = min_cost_transport(&c, &sites, &target).unwrap();
        let mut out = vec![0.0; c.len()];
        let mut into = [0.0; 5];
        for &(s, k, f) in &plan.flow {
            out[s] += f;
            into[k] += f;
        }
        for (o, m) in out.iter().zip(&c.masses) {
            assert!((o - m).abs() < 1e-9);
        }
        for (i, t) in into.iter().zip(&target) {
            assert!((i - t).abs() < 1e-9);
        }
        assert!(plan.duality_gap() < 1e-9 * (1.0 + plan.cost), "{}", plan.duality_gap());
    }

    #[test]
    fn brute_force_agreement_on_a_tiny_instance() {
        // three unit sources and three unit sites: the optimum is the best
        // of the six permutations
        let pts = [(0.0, 0.0), (1.0, 0.2), (0.3, 0.9)];
        let sites = [Point2::new(0.9, 0.9), Point2::new(0.1, 0.4), Point2::new(0.6, -0.2)];
        let c = cloud(&pts, &[1.0; 3]);
        let plan = min_cost_transport(&c, &sites, &[1.0; 3]).unwrap();
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let best = perms
            .iter()
            .map(|p| (0..3).map(|s| (c.points[s] - sites[p[s]]).norm_sq()).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        assert!((plan.cost - best).abs() < 1e-14);
    }
}
