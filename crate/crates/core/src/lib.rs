//! Optimal control of measures regularized by the quadratic transport distance
//! to an absolutely continuous prior.
//!
//! The control problem is reparametrized by a weight vector `xi`: every weight
//! induces a power diagram of the prior's support `D`, and the mass of the prior
//! inside each cell is moved to the corresponding site. This crate provides the
//! pieces needed to solve the resulting nonsmooth optimality system
//! `r(xi) = 0`:
//!
//! - [`geometry`]: power diagrams clipped to a convex polygon, with adjacency
//!   and a degeneracy diagnostic.
//! - [`quadrature`]: exact polygon moments for the uniform prior and
//!   quadrature for general densities.
//! - [`transport`]: the mass map, transport cost, its generalized Jacobian,
//!   the residual and the reduced objective.
//! - [`fem`]: P1 finite elements for a convection-diffusion state equation and
//!   tracking-type objectives.
//! - [`solvers`]: line-searched fixed-point iteration, constant-step iteration
//!   and globalized semismooth Newton.
//! - [`oracle`]: an exact discrete transport solver used to cross-check the
//!   transport cost.

pub mod error;
pub mod fem;
pub mod geometry;
pub mod linalg;
pub mod objective;
pub mod oracle;
pub mod quadrature;
pub mod scenario;
pub mod solvers;
pub mod transport;

pub use error::{Error, Result};
pub use geometry::{ConvexPolygon, Point2, SiteSet, Tessellation, Weights};
pub use objective::ObjectiveModel;
pub use quadrature::DensityModel;
pub use transport::TransportProblem;
