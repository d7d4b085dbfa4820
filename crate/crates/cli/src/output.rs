//! Run artifacts: CSV logs, summary and SVG figures.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use transport_control::geometry::{ConvexPolygon, Point2};
use transport_control::scenario::Scenario;
use transport_control::solvers::SolverReport;
use transport_control::transport::Evaluation;

pub const ITERATION_LOG: &str = "iterations.csv";
pub const SOLUTION: &str = "solution.csv";
pub const REGIONS: &str = "regions.svg";
pub const CONTROL_DENSITY: &str = "control_density.svg";
pub const SUMMARY: &str = "summary.json";

#[derive(Debug, Serialize)]
pub struct Summary {
    pub method: String,
    pub status: String,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub residual_inf: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub sites: usize,
    pub nonempty_cells: usize,
    pub total_mass: f64,
    pub dc_violations: usize,
    pub descent_fallbacks: usize,
    pub seconds: f64,
}

pub fn iteration_csv(report: &SolverReport) -> String {
    let mut out = String::from("iter,residual_inf,J,step,seconds\n");
    for r in &report.log {
        let _ = writeln!(out, "{},{:e},{:e},{:e},{:.6}", r.iter, r.residual_inf, r.j, r.step, r.seconds);
    }
    out
}

pub fn solution_csv(sites: &[Point2], report: &SolverReport) -> String {
    let mut out = String::from("site_index,x1,x2,xi,u\n");
    for (i, ((a, xi), u)) in sites.iter().zip(&report.xi).zip(&report.u).enumerate() {
        let _ = writeln!(out, "{i},{:e},{:e},{:e},{:e}", a.x, a.y, xi, u);
    }
    out
}

pub fn summary(report: &SolverReport, ev: &Evaluation) -> Summary {
    Summary {
        method: report.method.as_str().to_string(),
        status: report.status.as_str().to_string(),
        converged: report.converged(),
        iterations: report.iterations,
        evaluations: report.evaluations,
        residual_inf: report.residual_inf,
        j: report.j,
        sites: report.xi.len(),
        nonempty_cells: ev.tessellation.cells().iter().filter(|c| !c.is_empty()).count(),
        total_mass: ev.mass.total(),
        dc_violations: report.dc_violations.len(),
        descent_fallbacks: report.descent_fallbacks,
        seconds: report.seconds,
    }
}

/// Writes all artifacts into `dir`, creating it if needed.
pub fn write_all(dir: &Path, scenario: &Scenario, report: &SolverReport, ev: &Evaluation) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let write = |name: &str, body: String| {
        let path = dir.join(name);
        fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))
    };
    let sites = scenario.problem.sites().points();
    write(ITERATION_LOG, iteration_csv(report))?;
    write(SOLUTION, solution_csv(sites, report))?;
    write(REGIONS, region_svg(scenario, ev))?;
    write(CONTROL_DENSITY, density_svg(scenario, &report.u))?;
    write(SUMMARY, serde_json::to_string_pretty(&summary(report, ev))? + "\n")?;
    Ok(())
}

/// Maps model coordinates into a square SVG canvas with `y` pointing up.
struct Canvas {
    lo: Point2,
    scale: f64,
    size: f64,
    margin: f64,
}

impl Canvas {
    fn new(lo: Point2, hi: Point2) -> Self {
        let size = 600.0;
        let extent = (hi.x - lo.x).max(hi.y - lo.y).max(f64::MIN_POSITIVE);
        Self { lo, scale: size / extent, size, margin: 20.0 }
    }

    fn map(&self, p: Point2) -> (f64, f64) {
        (self.margin + (p.x - self.lo.x) * self.scale, self.margin + self.size - (p.y - self.lo.y) * self.scale)
    }

    fn header(&self, title: &str, caption: &str) -> String {
        let total = self.size + 2.0 * self.margin;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total}\" height=\"{}\" viewBox=\"0 0 {total} {}\">\n<title>{title}</title>\n<text x=\"{}\" y=\"{}\" font-size=\"14\" font-family=\"sans-serif\">{caption}</text>\n",
            total + 30.0,
            total + 30.0,
            self.margin,
            total + 20.0,
        )
    }

    fn polygon(&self, poly: &ConvexPolygon) -> String {
        poly.vertices()
            .iter()
            .map(|&v| {
                let (x, y) = self.map(v);
                format!("{x:.3},{y:.3}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn bounds(points: impl IntoIterator<Item = Point2>) -> (Point2, Point2) {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (lo, hi)
}

/// Cells of the final power diagram, each with an arrow from its centroid
/// to its site.
pub fn region_svg(scenario: &Scenario, ev: &Evaluation) -> String {
    let (mesh_lo, mesh_hi) = scenario.system.mesh().bounds();
    let prior = scenario.problem.domain();
    let (lo, hi) = bounds([mesh_lo, mesh_hi].into_iter().chain(prior.vertices().iter().copied()));
    let canvas = Canvas::new(lo, hi);
    let mut svg = canvas.header("regions", "Optimal solution and corresponding transport plan");
    svg += "<defs><marker id=\"head\" markerWidth=\"6\" markerHeight=\"6\" refX=\"5\" refY=\"3\" orient=\"auto\"><path d=\"M0,0 L6,3 L0,6 z\" fill=\"#b22222\"/></marker></defs>\n";
    let omega = ConvexPolygon::rectangle(mesh_lo, mesh_hi).expect("mesh bounds");
    let _ = writeln!(
        svg,
        "<polygon points=\"{}\" fill=\"none\" stroke=\"#888\" stroke-width=\"1\"/>",
        canvas.polygon(&omega)
    );
    let sites = scenario.problem.sites().points();
    for (i, cell) in ev.tessellation.cells().iter().enumerate() {
        if cell.is_empty() {
            continue;
        }
        let _ = writeln!(
            svg,
            "<polygon points=\"{}\" fill=\"#cfe3f3\" stroke=\"#1f4e79\" stroke-width=\"0.6\"/>",
            canvas.polygon(cell)
        );
        if let Some(c) = cell.centroid() {
            let ((x1, y1), (x2, y2)) = (canvas.map(c), canvas.map(sites[i]));
            let _ = writeln!(
                svg,
                "<line x1=\"{x1:.3}\" y1=\"{y1:.3}\" x2=\"{x2:.3}\" y2=\"{y2:.3}\" stroke=\"#b22222\" stroke-width=\"0.8\" marker-end=\"url(#head)\"/>"
            );
        }
    }
    svg += "</svg>\n";
    svg
}

/// Piecewise linear control density `u_i / int φ_i` on the mesh.
pub fn density_svg(scenario: &Scenario, u: &[f64]) -> String {
    let system = &scenario.system;
    let mesh = system.mesh();
    let integrals = system.basis_integrals();
    let mut nodal = vec![0.0; mesh.num_nodes()];
    for (&node, &mass) in system.control_nodes().iter().zip(u) {
        nodal[node] = mass / integrals[node];
    }
    let top = nodal.iter().copied().fold(0.0f64, f64::max);
    let (lo, hi) = mesh.bounds();
    let canvas = Canvas::new(lo, hi);
    let mut svg = canvas.header(
        "control density",
        &format!("Control density: nodal mass divided by the basis integral (max {top:.4e})"),
    );
    for t in 0..mesh.triangles().len() {
        let tri = mesh.triangles()[t];
        let mean = tri.iter().map(|&k| nodal[k]).sum::<f64>() / 3.0;
        let level = if top > 0.0 { mean / top } else { 0.0 };
        let shade = (255.0 * (1.0 - level)).round() as u8;
        let pts = mesh
            .triangle_points(t)
            .iter()
            .map(|&p| {
                let (x, y) = canvas.map(p);
                format!("{x:.3},{y:.3}")
            })
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(svg, "<polygon points=\"{pts}\" fill=\"rgb(255,{shade},{shade})\" stroke=\"none\"/>");
    }
    svg += "</svg>\n";
    svg
}
