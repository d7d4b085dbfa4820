//! Assembly of complete control problems: mesh, state equation, objective
//! and transport problem.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{assemble_fem, build_structured_mesh, DesiredState, FemSystem, ProductObjective, TrackingObjective};
use crate::geometry::{ConvexPolygon, Point2, SiteSet};
use crate::objective::ObjectiveModel;
use crate::quadrature::DensityModel;
use crate::transport::TransportProblem;

/// Which mesh nodes carry a control site.
#[derive(Clone, Debug)]
pub enum ControlSet {
    AllNodes,
    /// Nodes inside or on the boundary of the polygon.
    NodesIn(ConvexPolygon),
    /// Explicit sites; each must coincide with a mesh node.
    Points(Vec<Point2>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveKind {
    /// `1/2 |y - y_d|^2_O`
    Tracking,
    /// Product of the tracking terms for `y_d` and `y_d2`.
    Product,
}

#[derive(Clone, Debug)]
pub struct ScenarioSpec {
    pub omega_lo: Point2,
    pub omega_hi: Point2,
    pub refinement: usize,
    pub prior: ConvexPolygon,
    pub density: DensityModel,
    pub controls: ControlSet,
    pub alpha: f64,
    pub beta: Point2,
    pub y_d: DesiredState,
    pub y_d2: DesiredState,
    pub objective: ObjectiveKind,
    /// `None` observes all of `Omega`.
    pub observation: Option<ConvexPolygon>,
}

/// A built problem together with its discretization.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub problem: TransportProblem,
    pub system: Arc<FemSystem>,
}

impl ScenarioSpec {
    /// `alpha = 1e-3`, `Omega = (-1, 1)^2 = D = O`, `beta = 0`, every node a
    /// control site, standard desired state.
    pub fn standard(refinement: usize) -> Self {
        let lo = Point2::new(-1.0, -1.0);
        let hi = Point2::new(1.0, 1.0);
        Self {
            omega_lo: lo,
            omega_hi: hi,
            refinement,
            prior: ConvexPolygon::rectangle(lo, hi).expect("unit square"),
            density: DensityModel::lebesgue(),
            controls: ControlSet::AllNodes,
            alpha: 1e-3,
            beta: Point2::ORIGIN,
            y_d: DesiredState::Standard,
            y_d2: DesiredState::Second,
            objective: ObjectiveKind::Tracking,
            observation: None,
        }
    }

    /// Convection-dominated case on `(0, 1)^2` with a diamond-shaped prior
    /// and a small observation square.
    pub fn convection(refinement: usize, alpha: f64) -> Self {
        let diamond = ConvexPolygon::new(vec![
            Point2::new(0.4, 0.5),
            Point2::new(0.3, 0.4),
            Point2::new(0.4, 0.3),
            Point2::new(0.5, 0.4),
        ])
        .expect("diamond");
        let observation = ConvexPolygon::rectangle(Point2::new(0.55, 0.7), Point2::new(0.65, 0.8)).expect("square");
        Self {
            omega_lo: Point2::new(0.0, 0.0),
            omega_hi: Point2::new(1.0, 1.0),
            prior: diamond,
            alpha,
            beta: Point2::new(16.0, 32.0),
            y_d: DesiredState::Zero,
            observation: Some(observation),
            ..Self::standard(refinement)
        }
    }

    /// Standard data with the nonconvex product objective.
    pub fn product(refinement: usize) -> Self {
        Self { objective: ObjectiveKind::Product, ..Self::standard(refinement) }
    }

    pub fn build(&self) -> Result<Scenario> {
        let mesh = build_structured_mesh(self.omega_lo, self.omega_hi, self.refinement)?;
        let nodes = match &self.controls {
            ControlSet::AllNodes => (0..mesh.num_nodes()).collect(),
            ControlSet::NodesIn(poly) => {
                let nodes = mesh.nodes_in(poly);
                if nodes.is_empty() {
                    return Err(Error::Misaligned("control polygon contains no mesh node".into()));
                }
                nodes
            }
            ControlSet::Points(points) => {
                let tol = 1e-9 * mesh.h();
                points
                    .iter()
                    .map(|p| {
                        mesh.nodes()
                            .iter()
                            .position(|q| q.distance(*p) <= tol)
                            .ok_or_else(|| Error::Misaligned(format!("control site {p:?} is not a mesh node")))
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        let system = Arc::new(assemble_fem(mesh, self.beta, self.observation.as_ref())?.with_control_nodes(nodes)?);
        let first = TrackingObjective::from_state(system.clone(), self.y_d);
        let objective: Arc<dyn ObjectiveModel> = match self.objective {
            ObjectiveKind::Tracking => Arc::new(first),
            ObjectiveKind::Product => {
                Arc::new(ProductObjective::new(first, TrackingObjective::from_state(system.clone(), self.y_d2))?)
            }
        };
        let sites = SiteSet::new(system.control_points())?;
        let problem = TransportProblem::new(self.prior.clone(), sites, self.density.clone(), self.alpha, objective)?;
        Ok(Scenario { problem, system })
    }
}
