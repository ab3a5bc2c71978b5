//! Finite-element infrastructure: spaces, quadrature, assembly, direct
//! linear solve, and a Newton driver.

mod assemble;
mod basis;
mod elastic;
mod newton;
mod quad;
mod solve;
mod space;

pub use assemble::{assemble, ElementSystem, LinearSystem};
pub use basis::{cell_geom, eval_basis, CellBasis, CellGeom};
pub use elastic::{lame_from_e_nu, ElasticParams};
pub use newton::{newton_solve, NewtonHistory, NewtonOptions};
pub use quad::{edge_quad, tri_quad};
pub use solve::solve_linear;
pub use space::{interpolate, FESpace, Field};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("NaN in integrand on {} {element}", if *.facet { "facet" } else { "cell" })]
    NanInIntegrand { element: usize, facet: bool },
    #[error("singular system: null pivot at dof {dof}")]
    Singular { dof: usize },
    #[error("linear solver failure: {0}")]
    Solver(String),
    #[error("Newton did not converge; residual history {history:?}")]
    NoConvergence { history: NewtonHistory },
    #[error("line search failed; residual history {history:?}")]
    LineSearchFailure { history: NewtonHistory },
}
