use std::io;

use thiserror::Error;

use crate::solver::SolveReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Domain(String),

    #[error("RSA saturated: placed {placed} of {requested} spheres in {attempts} attempts")]
    Saturated {
        placed: usize,
        requested: usize,
        attempts: u64,
    },

    #[error("solver did not converge ({} loadings attempted)", .reports.len())]
    NotConverged { reports: Vec<SolveReport> },

    #[error("mean flux vanishes, divergence residual undefined")]
    ZeroMeanFlux,

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}
