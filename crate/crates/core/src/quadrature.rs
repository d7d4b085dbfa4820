//! Polygon and segment integrals.
//!
//! For the uniform density every integral is evaluated exactly through the
//! divergence theorem: area by the shoelace formula, first moments with the
//! flux `x1 x2 (v2, v1)` and `int |x|^2` with the flux `(x1^3, x2^3) / 3`,
//! whose edge integrands are quadratic and cubic, so Simpson's rule is
//! exact. General densities are integrated with Gauss-Legendre rules on
//! segments and symmetric (or collapsed Gauss) rules on a fan triangulation.

use std::fmt;
use std::sync::Arc;

use crate::geometry::{ConvexPolygon, Point2};

/// Density of the prior measure on the domain.
#[derive(Clone)]
pub enum DensityModel {
    /// `rho = 1`; all integrals are exact.
    Lebesgue,
    /// Continuous nonnegative density evaluated pointwise.
    Evaluable(Arc<EvaluableDensity>),
}

pub struct EvaluableDensity {
    eval: Box<dyn Fn(Point2) -> f64 + Send + Sync>,
    quad_order: usize,
    segment_rule: GaussLegendre,
    triangle_rule: TriangleRule,
}

impl DensityModel {
    pub fn lebesgue() -> Self {
        DensityModel::Lebesgue
    }

    /// Density given by `eval`. Segments use a `quad_order`-point
    /// Gauss-Legendre rule and triangles a rule exact for polynomials of
    /// degree `2 * quad_order`.
    pub fn evaluable(eval: impl Fn(Point2) -> f64 + Send + Sync + 'static, quad_order: usize) -> Self {
        let quad_order = quad_order.max(1);
        DensityModel::Evaluable(Arc::new(EvaluableDensity {
            eval: Box::new(eval),
            quad_order,
            segment_rule: GaussLegendre::new(quad_order),
            triangle_rule: TriangleRule::with_degree(2 * quad_order),
        }))
    }

    pub fn is_lebesgue(&self) -> bool {
        matches!(self, DensityModel::Lebesgue)
    }

    pub fn eval(&self, p: Point2) -> f64 {
        match self {
            DensityModel::Lebesgue => 1.0,
            DensityModel::Evaluable(d) => (d.eval)(p),
        }
    }

    pub fn quad_order(&self) -> Option<usize> {
        match self {
            DensityModel::Lebesgue => None,
            DensityModel::Evaluable(d) => Some(d.quad_order),
        }
    }
}

impl fmt::Debug for DensityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityModel::Lebesgue => f.write_str("Lebesgue"),
            DensityModel::Evaluable(d) => {
                f.debug_struct("Evaluable").field("quad_order", &d.quad_order).finish_non_exhaustive()
            }
        }
    }
}

/// Integrand for [`polygon_density_integral`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Integrand {
    One,
    /// `x -> v . x`
    Linear(Point2),
    /// `x -> |x|^2`
    QuadraticRadial,
}

impl Integrand {
    fn eval(self, x: Point2) -> f64 {
        match self {
            Integrand::One => 1.0,
            Integrand::Linear(v) => v.dot(x),
            Integrand::QuadraticRadial => x.norm_sq(),
        }
    }
}

/// Signed area of a closed vertex loop (positive when counterclockwise).
pub fn shoelace(vertices: &[Point2]) -> f64 {
    let m = vertices.len();
    if m < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for k in 0..m {
        acc += vertices[(k + m - 1) % m].cross(vertices[k]);
    }
    0.5 * acc
}

pub fn polygon_area(poly: &ConvexPolygon) -> f64 {
    shoelace(poly.vertices())
}

/// `int_P v . x dx`, exact.
pub fn polygon_first_moment(poly: &ConvexPolygon, v: Point2) -> f64 {
    v.dot(first_moment_vector(poly.vertices()))
}

/// `int_P x dx` as a vector.
pub(crate) fn first_moment_vector(vertices: &[Point2]) -> Point2 {
    let m = vertices.len();
    if m < 3 {
        return Point2::ORIGIN;
    }
    let mut acc = Point2::ORIGIN;
    for k in 0..m {
        let (p, q) = (vertices[(k + m - 1) % m], vertices[k]);
        acc += (p + q) * (p.cross(q) / 6.0);
    }
    acc
}

/// `int_P |x|^2 dx`, exact.
pub fn polygon_second_moment(poly: &ConvexPolygon) -> f64 {
    let v = poly.vertices();
    let m = v.len();
    if m < 3 {
        return 0.0;
    }
    let flux = |x: Point2, e: Point2| (x.x.powi(3) * e.y - x.y.powi(3) * e.x) / 3.0;
    let mut acc = 0.0;
    for k in 0..m {
        let (p, q) = (v[k], v[(k + 1) % m]);
        let e = q - p;
        acc += (flux(p, e) + 4.0 * flux((p + q) * 0.5, e) + flux(q, e)) / 6.0;
    }
    acc
}

/// `int_[p,q] rho dH^1`.
pub fn segment_density_integral(p: Point2, q: Point2, rho: &DensityModel) -> f64 {
    let length = p.distance(q);
    match rho {
        DensityModel::Lebesgue => length,
        DensityModel::Evaluable(d) => {
            let s: f64 = d
                .segment_rule
                .nodes
                .iter()
                .zip(&d.segment_rule.weights)
                .map(|(&t, &w)| w * (d.eval)(p.lerp(q, t)))
                .sum();
            s * length
        }
    }
}

/// `int_P f(x) rho(x) dx` for the supported integrands.
pub fn polygon_density_integral(poly: &ConvexPolygon, rho: &DensityModel, integrand: Integrand) -> f64 {
    match rho {
        DensityModel::Lebesgue => match integrand {
            Integrand::One => polygon_area(poly),
            Integrand::Linear(v) => polygon_first_moment(poly, v),
            Integrand::QuadraticRadial => polygon_second_moment(poly),
        },
        DensityModel::Evaluable(d) => {
            fan_integral(poly.vertices(), &d.triangle_rule, |x| integrand.eval(x) * (d.eval)(x))
        }
    }
}

/// Mass `int_P rho` and first moment `int_P x rho` in one pass.
pub(crate) fn mass_and_moment(poly: &ConvexPolygon, rho: &DensityModel) -> (f64, Point2) {
    match rho {
        DensityModel::Lebesgue => (polygon_area(poly), first_moment_vector(poly.vertices())),
        DensityModel::Evaluable(d) => {
            let mut mass = 0.0;
            let mut moment = Point2::ORIGIN;
            fan_for_each(poly.vertices(), &d.triangle_rule, |x, w| {
                let r = w * (d.eval)(x);
                mass += r;
                moment += x * r;
            });
            (mass, moment)
        }
    }
}

fn fan_integral(vertices: &[Point2], rule: &TriangleRule, f: impl Fn(Point2) -> f64) -> f64 {
    let mut acc = 0.0;
    fan_for_each(vertices, rule, |x, w| acc += w * f(x));
    acc
}

/// Visits the quadrature points of the fan triangulation from the vertex
/// mean, passing each point with its absolute weight.
fn fan_for_each(vertices: &[Point2], rule: &TriangleRule, mut visit: impl FnMut(Point2, f64)) {
    let m = vertices.len();
    if m < 3 {
        return;
    }
    let c = vertices.iter().fold(Point2::ORIGIN, |acc, &p| acc + p) / m as f64;
    for k in 0..m {
        let (p, q) = (vertices[k], vertices[(k + 1) % m]);
        let area = 0.5 * (p - c).cross(q - c);
        if area <= 0.0 {
            continue;
        }
        for (b, &w) in rule.points.iter().zip(&rule.weights) {
            visit(c * b[0] + p * b[1] + q * b[2], w * area);
        }
    }
}

/// Gauss-Legendre rule mapped to `[0, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        let n = n.max(1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..(n + 1) / 2 {
            // Newton iteration on P_n from the Chebyshev-like initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature rule on a triangle in barycentric coordinates; the weights
/// sum to one and are multiplied by the triangle area.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Symmetric rules up to degree 4, collapsed Gauss-Legendre products
    /// beyond.
    pub fn with_degree(degree: usize) -> Self {
        match degree {
            0 | 1 => Self { points: vec![[1.0 / 3.0; 3]], weights: vec![1.0] },
            2 => Self::symmetric(&[(1.0 / 6.0, 1.0 / 3.0)]),
            3 | 4 => Self::symmetric(&[
                (0.445_948_490_915_964_886, 0.223_381_589_678_011_466),
                (0.091_576_213_509_770_743, 0.109_951_743_655_321_867),
            ]),
            _ => Self::collapsed_gauss((degree + 3) / 2),
        }
    }

    /// Orbits `(a, a, 1 - 2a)` with weight `w` per point.
    fn symmetric(orbits: &[(f64, f64)]) -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for &(a, w) in orbits {
            let b = 1.0 - 2.0 * a;
            points.extend([[a, a, b], [a, b, a], [b, a, a]]);
            weights.extend([w; 3]);
        }
        Self { points, weights }
    }

    /// Duffy-collapsed tensor rule with `m` points per direction; exact up
    /// to degree `2m - 2` (the Jacobian costs one degree).
    fn collapsed_gauss(m: usize) -> Self {
        let g = GaussLegendre::new(m);
        let mut points = Vec::with_capacity(m * m);
        let mut weights = Vec::with_capacity(m * m);
        for (&s, &ws) in g.nodes.iter().zip(&g.weights) {
            for (&t, &wt) in g.nodes.iter().zip(&g.weights) {
                let (l1, l2) = (s, t * (1.0 - s));
                points.push([1.0 - l1 - l2, l1, l2]);
                // reference triangle has area 1/2
                weights.push(2.0 * ws * wt * (1.0 - s));
            }
        }
        Self { points, weights }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> ConvexPolygon {
        ConvexPolygon::rectangle(Point2::new(x0, y0), Point2::new(x1, y1)).unwrap()
    }

    fn unit_triangle() -> ConvexPolygon {
        ConvexPolygon::new(vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]).unwrap()
    }

    #[test]
    fn areas() {
        assert_eq!(polygon_area(&rect(0.0, 0.0, 1.0, 1.0)), 1.0);
        assert_eq!(polygon_area(&unit_triangle()), 0.5);
        assert_eq!(polygon_area(&rect(-1.0, -1.0, 1.0, 1.0)), 4.0);
        assert_eq!(polygon_area(&ConvexPolygon::empty()), 0.0);
    }

    #[test]
    fn first_moments() {
        let sq = rect(0.0, 0.0, 1.0, 1.0);
        assert!((polygon_first_moment(&sq, Point2::new(1.0, 0.0)) - 0.5).abs() < 1e-15);
        let big = rect(-1.0, -1.0, 1.0, 1.0);
        assert!(polygon_first_moment(&big, Point2::new(0.3, -2.0)).abs() < 1e-15);
        let t = polygon_first_moment(&unit_triangle(), Point2::new(1.0, 1.0));
        // oracle: degree-8 collapsed Gauss rule on the same triangle
        let oracle = fan_integral(unit_triangle().vertices(), &TriangleRule::with_degree(8), |x| x.x + x.y);
        assert!((t - 1.0 / 3.0).abs() < 1e-15);
        assert!((t - oracle).abs() < 1e-14);
    }

    #[test]
    fn second_moments() {
        assert!((polygon_second_moment(&rect(-1.0, -1.0, 1.0, 1.0)) - 8.0 / 3.0).abs() < 1e-14);
        assert!((polygon_second_moment(&rect(0.0, 0.0, 1.0, 1.0)) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(polygon_second_moment(&ConvexPolygon::empty()), 0.0);
    }

    #[test]
    fn segment_integrals() {
        let lebesgue = DensityModel::lebesgue();
        let v = segment_density_integral(Point2::new(0.0, -1.0), Point2::new(0.0, 1.0), &lebesgue);
        assert_eq!(v, 2.0);
        for order in 1..5 {
            let rho = DensityModel::evaluable(|p| p.x, order);
            let v = segment_density_integral(Point2::ORIGIN, Point2::new(1.0, 0.0), &rho);
            assert!((v - 0.5).abs() < 1e-15, "order {order}: {v}");
        }
    }

    #[test]
    fn density_integrals() {
        let sq = rect(0.0, 0.0, 1.0, 1.0);
        let lebesgue = DensityModel::lebesgue();
        assert_eq!(polygon_density_integral(&sq, &lebesgue, Integrand::One), 1.0);
        let big = rect(-1.0, -1.0, 1.0, 1.0);
        let r = polygon_density_integral(&big, &lebesgue, Integrand::QuadraticRadial);
        assert!((r - 8.0 / 3.0).abs() < 1e-14);
        let rho = DensityModel::evaluable(|p| p.x * p.y, 2);
        let r = polygon_density_integral(&sq, &rho, Integrand::One);
        assert!((r - 0.25).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_integrates_monomials() {
        for n in 1..12 {
            let g = GaussLegendre::new(n);
            for k in 0..2 * n {
                let s: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((s - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn triangle_rules_reach_their_degree() {
        // int over the reference triangle of x^a y^b = a! b! / (a + b + 2)!
        let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
        let tri = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        for degree in 1..=10 {
            let rule = TriangleRule::with_degree(degree);
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let exact = fact(a) * fact(b) / fact(a + b + 2);
                    let mut acc = 0.0;
                    for (bc, &w) in rule.points.iter().zip(&rule.weights) {
                        let x = tri[0] * bc[0] + tri[1] * bc[1] + tri[2] * bc[2];
                        acc += 0.5 * w * x.x.powi(a as i32) * x.y.powi(b as i32);
                    }
                    assert!((acc - exact).abs() < 1e-15, "degree {degree} x^{a} y^{b}");
                }
            }
        }
    }
}
