//! Error types shared across the crate.

use thiserror::Error;

/// Structural defects found while validating a triangle mesh.
///
/// Each variant names the offending simplex so failures are actionable.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum MeshError {
    #[error("mesh has no vertices or no triangles")]
    Empty,
    #[error("triangle {triangle} references vertex {index} out of range (vertex count {count})")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        count: usize,
    },
    #[error("triangle {triangle} repeats a vertex")]
    RepeatedVertex { triangle: usize },
    #[error("non-manifold edge ({a},{b}) shared by {count} triangles")]
    NonManifoldEdge { a: usize, b: usize, count: usize },
    #[error("inconsistent orientation across edge ({a},{b})")]
    InconsistentOrientation { a: usize, b: usize },
    #[error("triangle {triangle} is degenerate (area {area:.3e} below floor {floor:.3e})")]
    DegenerateTriangle {
        triangle: usize,
        area: f64,
        floor: f64,
    },
    #[error("vertex {vertex} star is not a disk or half-disk")]
    NonDiskStar { vertex: usize },
    #[error("vertex position {vertex} is not finite")]
    NonFinitePosition { vertex: usize },
}

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("parameter point outside domain: {0}")]
    OutOfDomain(String),
    #[error("vertex budget exceeded: construction needs {requested} vertices, budget is {budget}")]
    Resource { requested: usize, budget: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("mesh is disconnected ({components} components); the constrained eigenproblem is singular")]
    Disconnected { components: usize },
    #[error("eigensolver did not converge: {message}")]
    NoConvergence {
        message: String,
        residual_history: Vec<f64>,
    },
    #[error("Rayleigh quotient undefined: {0}")]
    UndefinedQuotient(String),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
