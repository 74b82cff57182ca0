use thiserror::Error;

/// Errors raised while building grids, meshes, discrete forms and systems.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid polynomial order {0}: order must be at least 1")]
    InvalidOrder(usize),

    #[error("basis index {index} out of range {min}..={max}")]
    IndexOutOfRange { index: usize, min: usize, max: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid form degree {degree} for {operation}")]
    InvalidDegree { degree: usize, operation: &'static str },

    #[error("degenerate geometry: det J = {det:e} at reference point ({xi}, {eta})")]
    DegenerateGeometry { xi: f64, eta: f64, det: f64 },

    #[error("data evaluation produced a non-finite value at ({x}, {y}) while {context}")]
    DataEvaluation { x: f64, y: f64, context: &'static str },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("ill-posed configuration: {0}")]
    IllPosed(String),

    #[error("linear solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
