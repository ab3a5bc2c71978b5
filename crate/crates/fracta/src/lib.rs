//! 2D finite-element toolkit coupling phase-field fracture with a stationary
//! monolithic thermo-fluid-structure interaction solve.
//!
//! The crate is generic over the scalar type ([`scalar::Real`], implemented
//! for `f32` and `f64`); the aliases below fix the common concrete choices.

pub mod cli_io;
pub mod cod;
pub mod driver;
pub mod fem;
pub mod geo;
pub mod geom2d;
pub mod la;
pub mod mesh;
pub mod pff;
pub mod scalar;
pub mod tfsi;

/// Default double-precision mesh.
pub type TriMesh = mesh::TriMesh<f64>;
/// Single-precision mesh.
pub type TriMesh32 = mesh::TriMesh<f32>;
/// Default double-precision size specification.
pub type SizeSpec = mesh::SizeSpec<f64>;
/// Default double-precision discrete field.
pub type Field = fem::Field<f64>;
/// Default double-precision COD profile.
pub type CodProfile = cod::CodProfile<f64>;
/// Default double-precision scenario description.
pub type ScenarioConfig = driver::ScenarioConfig<f64>;
/// Default double-precision iteration summary.
pub type IterationRecord = driver::IterationRecord<f64>;
