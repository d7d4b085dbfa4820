//! P1 finite elements for the state equation and tracking objectives.

mod mesh;
mod objective;
mod system;

pub use mesh::{build_structured_mesh, structured_node_count, TriMesh};
pub use objective::{DesiredState, ProductObjective, TrackingObjective};
pub use system::{assemble_fem, FemSystem};
