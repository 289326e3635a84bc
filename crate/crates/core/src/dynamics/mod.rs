//! Flows of the Hamiltonians, the normalizing change of variables in
//! coordinates, and the torus-persistence and canonicity measurements.

mod flow;
mod integrator;
mod torus;
mod transform;

pub use flow::{flow_to, integrate, vector_field, HamiltonianField, PhasePoint, Trajectory};
pub use integrator::{integrate as dopri5, IntegratorError, IntegratorOptions, IntegratorStats};
pub use torus::{canonicity_check, torus_error, TorusReport, TorusSample};
pub use transform::{apply_transformation, chi_map, step_maps, ChiMap, Direction, ExtendedPoint, PhiMap, StepMap};
