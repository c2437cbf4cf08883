use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("removable cone point: loop {loop_index} vertex {vertex} has interior angle π (cone angle 2π)")]
    RemovableConePoint { loop_index: usize, vertex: usize },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("interior point: ({x}, {y}) lies strictly inside an obstacle")]
    InteriorPoint { x: f64, y: f64 },

    #[error("constraint violation: {0}")]
    Constraint(String),

    #[error("unsupported geometry: {0}")]
    Unsupported(String),

    #[error("CFL violation: dt = {dt} exceeds h/√2 = {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inconsistent bundle: {0}")]
    Bundle(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
