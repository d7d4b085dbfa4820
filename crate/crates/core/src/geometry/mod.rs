//! Power diagrams of weighted sites clipped to a convex polygon.

mod diagnostic;
mod index;
mod point;
mod polygon;
mod sites;
mod tessellation;
mod triple;

pub use diagnostic::dc_diagnostic;
pub use point::Point2;
pub use polygon::{halfplane_clip, ConvexPolygon, HalfPlane, GEOM_REL_EPS};
pub use sites::{SiteSet, Weights};
pub use tessellation::{build_tessellation, EdgeLabel, EdgeRecord, Tessellation};
pub use triple::{triple_point, TripleIndices};
