//! Nonconforming finite element toolkit for the 2D Stokes equations.
//!
//! The velocity is discretized with piecewise-linear vector fields that
//! are continuous at facet midpoints, paired with piecewise-constant
//! pressures. Next to the standard scheme, two modified variants keep the
//! velocity insensitive to the irrotational part of the forcing by
//! mapping the test functions in the load term into facet-flux or
//! facet-moment reconstructions. Layer-adapted graded meshes, a
//! stagnation-point reference flow and a convergence-study driver round
//! out the toolkit.

pub mod analysis;
pub mod boundary_layer;
pub mod fem;
pub mod mesh;
pub mod quadrature;
pub mod solver;

pub use analysis::{ConvergenceRecord, ErrorSummary, StudyConfig};
pub use boundary_layer::{ExactFields, FlowParams, HiemenzProfile};
pub use fem::{CRVectorField, MethodKind, P0Scalar, StokesSystem};
pub use mesh::{Grading, MeshQuality, Rect, TriMesh};

/// Any failure surfaced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("mesh: {0}")]
    Mesh(#[from] mesh::MeshError),
    #[error("profile solve: {0}")]
    Ode(#[from] boundary_layer::OdeError),
    #[error("assembly: {0}")]
    Fem(#[from] fem::FemError),
    #[error("solve: {0}")]
    Solve(#[from] solver::SolveError),
    #[error("quadrature: {0}")]
    Quadrature(#[from] quadrature::QuadratureError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
