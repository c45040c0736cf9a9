use thiserror::Error;

/// Errors produced by the analysis and optimization pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("component {index}: |p| = {p} exceeds the limit {p_max} (near-vertical orientation)")]
    NearVertical { index: usize, p: f64, p_max: f64 },

    #[error("invalid regularization: {0}")]
    InvalidRegularization(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("invalid boundary conditions: {0}")]
    InvalidBoundary(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("singular stiffness matrix: pivot {pivot:e} at equation {equation}")]
    SingularSystem { equation: usize, pivot: f64 },

    #[error("linear solve did not converge: relative residual {residual:e}")]
    SolverDiverged { residual: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("infeasible subproblem: constraint {constraint} stays violated by {violation:e}")]
    Infeasible { constraint: usize, violation: f64 },

    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
