use thiserror::Error;

use crate::mesh::Violation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("unsupported Gauss order {0} (supported: 1..=5)")]
    UnsupportedOrder(usize),
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed mesh file: {0}")]
    Parse(String),
    #[error("invalid mesh: {}", summarize(.0))]
    Invalid(Vec<Violation>),
    #[error("parameter d = {value} outside ({lo}, {hi}]")]
    ParameterOutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("unknown face set `{0}`")]
    UnknownFaceSet(String),
}

fn summarize(v: &[Violation]) -> String {
    let mut s = v
        .iter()
        .take(3)
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ");
    if v.len() > 3 {
        s.push_str(&format!(" (+{} more)", v.len() - 3));
    }
    s
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("element {element}: detJ vanishes on sampled face {face}")]
    DegenerateElement { element: usize, face: usize },
    #[error("element {0} is not concave")]
    NotConcave(usize),
    #[error("element {element}, face {face} is not an exterior face")]
    NotExterior { element: usize, face: usize },
    #[error("Newton polish stalled in box [{lo:?}, {hi:?}] (residual {residual:e})")]
    NonConvergent {
        lo: [f64; 3],
        hi: [f64; 3],
        residual: f64,
    },
    #[error("element {element}: fold is empty")]
    FoldEmpty { element: usize },
    #[error("element {element}: depth {depth} resolves no interior cell")]
    DepthTooSmall { element: usize, depth: u32 },
    #[error("point lies in the ambiguity band of a fold surface")]
    Ambiguous,
    #[error("net oriented count {0} at point (expected 1)")]
    CoverViolation(i32),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("singular Jacobian at quadrature point of element {element}")]
    SingularJacobian { element: usize },
    #[error("factorization breakdown at pivot {pivot}")]
    Breakdown { pivot: usize },
    #[error("no Dirichlet nodes: the system is singular")]
    NoDirichlet,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Crate-level error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Precondition(String),
}

impl Error {
    /// Short stable code used in experiment reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Basis(_) => "basis",
            Error::Mesh(_) => "mesh",
            Error::Geometry(GeometryError::Ambiguous) => "ambiguous",
            Error::Geometry(GeometryError::CoverViolation(_)) => "cover",
            Error::Geometry(_) => "geometry",
            Error::Solve(SolveError::Breakdown { .. }) => "breakdown",
            Error::Solve(SolveError::SingularJacobian { .. }) => "singular_jacobian",
            Error::Solve(_) => "solve",
            Error::Io(_) => "io",
            Error::Csv(_) => "io",
            Error::Precondition(_) => "precondition",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
