//! Tangled finite element analysis for the scalar Laplace equation on
//! hexahedral meshes that contain partially inverted (concave) elements.

pub mod assembly;
pub mod basis;
pub mod error;
pub mod experiment;
pub mod mesh;
pub mod tangle;

pub use error::{BasisError, Error, GeometryError, MeshError, Result, SolveError};
pub use experiment::{ErrorReport, ExperimentConfig, Method};
pub use mesh::{BoundarySpec, ExactSolution, Family, Mesh};
