use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not reach tolerance {requested:e} (achieved {achieved:e})")]
    Quadrature { requested: f64, achieved: f64 },

    #[error("resonance violation: eigenvalue {eigenvalue} (index {index}) carries mass {mass:e} with shift {shift}")]
    Resonance {
        index: usize,
        eigenvalue: f64,
        mass: f64,
        shift: f64,
    },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("mesh generation failed at triangle {triangle}: {reason}")]
    Mesh { triangle: usize, reason: String },

    #[error("positivity violated at vertex {vertex}: value {value}")]
    Positivity { vertex: usize, value: f64 },

    #[error("newton iteration diverged after {iterations} steps; residual history {history:?}")]
    Newton { iterations: usize, history: Vec<f64> },

    #[error("degree violation: {0}")]
    Degree(String),

    #[error("non-harmonic input: defect norms {0:?}")]
    NotHarmonic(Vec<f64>),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("dimension mismatch: {0}")]
    Mismatch(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
