use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice must be at least 4x4, got {width}x{height}")]
    InvalidGeometry { width: usize, height: usize },

    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("site ({x}, {y}) is outside the {width}x{height} lattice")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },

    #[error("spin array has length {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },

    #[error("spin value {0} is not -1 or +1")]
    InvalidSpin(i64),

    #[error("window centered at ({x}, {y}) with L = {l} does not fit the lattice with a one-site margin")]
    InvalidWindow { x: usize, y: usize, l: usize },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error("invalid experiment configuration: {0}")]
    Config(String),

    #[error("power-law fit refused: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
