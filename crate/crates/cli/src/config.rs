//! JSON run configuration.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use transport_control::fem::DesiredState;
use transport_control::geometry::{ConvexPolygon, Point2};
use transport_control::quadrature::DensityModel;
use transport_control::scenario::{ControlSet, ObjectiveKind, ScenarioSpec};
use transport_control::solvers::{ForcingRule, InitialGuess, LinearSolver, Method, SolverConfig};

type Pair = [f64; 2];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub omega: Square,
    pub refinement: usize,
    pub prior_domain: Vec<Pair>,
    #[serde(default)]
    pub density: DensitySpec,
    #[serde(default)]
    pub sites: SitesSpec,
    pub alpha: f64,
    #[serde(default)]
    pub beta: Pair,
    pub y_d: String,
    /// Second desired state of the product objective.
    #[serde(default)]
    pub y_d2: Option<String>,
    #[serde(default)]
    pub objective: ObjectiveSpec,
    #[serde(default)]
    pub observation: ObservationSpec,
    pub solver: SolverSpec,
    #[serde(default)]
    pub outputs: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Square {
    pub lo: Pair,
    pub hi: Pair,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensitySpec {
    #[default]
    Lebesgue,
    /// Bilinear interpolation of nodal values on a uniform grid; `values`
    /// holds one row per grid line in `x2`, from `lo` to `hi`.
    Grid(GridDensity),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDensity {
    pub lo: Pair,
    pub hi: Pair,
    pub values: Vec<Vec<f64>>,
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
}

fn default_quad_order() -> usize {
    4
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SitesSpec {
    #[default]
    AllNodes,
    NodesInPolygon(Vec<Pair>),
    Explicit(Vec<Pair>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveSpec {
    #[default]
    Tracking,
    Product,
}

#[derive(Debug, Default, Deserialize)]
#[serde(untagged)]
pub enum ObservationSpec {
    #[default]
    #[serde(skip)]
    Omega,
    Named(String),
    Polygon(Vec<Pair>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub method: String,
    pub tol_inf: Option<f64>,
    pub max_iter: Option<usize>,
    pub tau: Option<f64>,
    pub wolfe_c1: Option<f64>,
    pub wolfe_c2: Option<f64>,
    /// `auto`, `dense` or `krylov`.
    pub newton_linear: Option<String>,
    pub krylov_tol_rule: Option<ForcingSpec>,
    pub xi0: Option<Xi0Spec>,
    pub stall_window: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForcingSpec {
    Superlinear,
    Constant(f64),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Xi0Spec {
    Named(String),
    Explicit(Vec<f64>),
}

fn point(p: Pair) -> Point2 {
    Point2::new(p[0], p[1])
}

fn polygon(vertices: &[Pair], what: &str) -> Result<ConvexPolygon> {
    let poly = ConvexPolygon::new(vertices.iter().copied().map(point).collect())
        .with_context(|| format!("{what} is not a convex polygon"))?;
    if poly.is_empty() {
        bail!("{what} is empty");
    }
    Ok(poly)
}

fn desired(name: &str) -> Result<DesiredState> {
    name.parse().with_context(|| format!("unknown desired state {name:?}"))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).context("invalid configuration")?;
        Ok(config)
    }

    pub fn scenario(&self) -> Result<ScenarioSpec> {
        let (lo, hi) = (point(self.omega.lo), point(self.omega.hi));
        if !(hi.x - lo.x > 0.0 && (hi.x - lo.x - (hi.y - lo.y)).abs() <= 1e-12 * (hi.x - lo.x)) {
            bail!("omega must be a square with lo < hi");
        }
        let controls = match &self.sites {
            SitesSpec::AllNodes => ControlSet::AllNodes,
            SitesSpec::NodesInPolygon(v) => ControlSet::NodesIn(polygon(v, "site polygon")?),
            SitesSpec::Explicit(v) => ControlSet::Points(v.iter().copied().map(point).collect()),
        };
        let observation = match &self.observation {
            ObservationSpec::Omega => None,
            ObservationSpec::Named(name) if name == "omega" => None,
            ObservationSpec::Named(name) => bail!("observation must be \"omega\" or a polygon, got {name:?}"),
            ObservationSpec::Polygon(v) => Some(polygon(v, "observation polygon")?),
        };
        Ok(ScenarioSpec {
            omega_lo: lo,
            omega_hi: hi,
            refinement: self.refinement,
            prior: polygon(&self.prior_domain, "prior domain")?,
            density: self.density()?,
            controls,
            alpha: self.alpha,
            beta: point(self.beta),
            y_d: desired(&self.y_d)?,
            y_d2: desired(self.y_d2.as_deref().unwrap_or("second"))?,
            objective: match self.objective {
                ObjectiveSpec::Tracking => ObjectiveKind::Tracking,
                ObjectiveSpec::Product => ObjectiveKind::Product,
            },
            observation,
        })
    }

    fn density(&self) -> Result<DensityModel> {
        match &self.density {
            DensitySpec::Lebesgue => Ok(DensityModel::lebesgue()),
            DensitySpec::Grid(grid) => grid.model(),
        }
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let method = match s.method.as_str() {
            "fixed-point" => Method::FixedPoint,
            "fixed-step" => Method::FixedStep,
            "newton" => Method::Newton,
            other => bail!("unknown solver method {other:?}"),
        };
        let mut cfg = SolverConfig::new(method);
        if let Some(v) = s.tol_inf {
            cfg.tol_inf = v;
        }
        if let Some(v) = s.max_iter {
            cfg.max_iter = v;
        }
        if let Some(v) = s.tau {
            cfg.tau = v;
        }
        if let Some(v) = s.wolfe_c1 {
            cfg.wolfe.c1 = v;
        }
        if let Some(v) = s.wolfe_c2 {
            cfg.wolfe.c2 = v;
        }
        if let Some(v) = &s.newton_linear {
            cfg.linear_solver = match v.as_str() {
                "auto" => LinearSolver::Auto,
                "dense" => LinearSolver::Dense,
                "krylov" => LinearSolver::Krylov,
                other => bail!("unknown linear solver {other:?}"),
            };
        }
        if let Some(rule) = &s.krylov_tol_rule {
            cfg.forcing = match *rule {
                ForcingSpec::Superlinear => ForcingRule::Superlinear,
                ForcingSpec::Constant(eta) => ForcingRule::Constant(eta),
            };
        }
        if let Some(xi0) = &s.xi0 {
            cfg.xi0 = match xi0 {
                Xi0Spec::Named(name) if name == "A" => InitialGuess::A,
                Xi0Spec::Named(name) if name == "zeros" => InitialGuess::Zeros,
                Xi0Spec::Named(name) => bail!("unknown xi0 rule {name:?}"),
                Xi0Spec::Explicit(v) => InitialGuess::Explicit(v.clone()),
            };
        }
        if let Some(v) = s.stall_window {
            cfg.stall_window = v;
        }
        cfg.validate().context("invalid solver settings")?;
        Ok(cfg)
    }
}

impl GridDensity {
    fn model(&self) -> Result<DensityModel> {
        let ny = self.values.len();
        let nx = self.values.first().map_or(0, Vec::len);
        if nx < 2 || ny < 2 || self.values.iter().any(|row| row.len() != nx) {
            bail!("density grid needs at least 2 x 2 values in equal-length rows");
        }
        if self.values.iter().flatten().any(|&v| !(v >= 0.0 && v.is_finite())) {
            bail!("density values must be finite and nonnegative");
        }
        let (lo, hi) = (point(self.lo), point(self.hi));
        if !(hi.x > lo.x && hi.y > lo.y) {
            bail!("density grid needs lo < hi");
        }
        let values = self.values.clone();
        let eval = move |p: Point2| {
            let sx = ((p.x - lo.x) / (hi.x - lo.x) * (nx - 1) as f64).clamp(0.0, (nx - 1) as f64);
            let sy = ((p.y - lo.y) / (hi.y - lo.y) * (ny - 1) as f64).clamp(0.0, (ny - 1) as f64);
            let (ix, iy) = ((sx as usize).min(nx - 2), (sy as usize).min(ny - 2));
            let (tx, ty) = (sx - ix as f64, sy - iy as f64);
            let row = |j: usize| values[j][ix] * (1.0 - tx) + values[j][ix + 1] * tx;
            row(iy) * (1.0 - ty) + row(iy + 1) * ty
        };
        Ok(DensityModel::evaluable(eval, self.quad_order))
    }
}
