use std::path::PathBuf;

use thiserror::Error;

use crate::distance::Simplex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distance set: {0}")]
    InvalidDistances(String),

    #[error("distance set is not embeddable in 3-space: {simplex} has Cayley-Menger value {value:.6e} (tolerance {tolerance:.3e})")]
    NotEmbeddable {
        simplex: Simplex,
        value: f64,
        tolerance: f64,
    },

    #[error("consistency projection moved a distance by {delta:.6} (limit {limit:.6})")]
    ProjectionTooFar { delta: f64, limit: f64 },

    #[error("degenerate frame: squared distance {name} = {value:.3e} is below {threshold:.3e}")]
    DegenerateFrame {
        name: &'static str,
        value: f64,
        threshold: f64,
    },

    #[error("interpolation matrix is ill-conditioned (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("rotation axis is not unit length (norm {norm})")]
    NonUnitAxis { norm: f64 },

    #[error("second joint axis is degenerate (d34 = {d34:.3e})")]
    DegenerateAxis2 { d34: f64 },

    #[error("invalid joint limits: {0}")]
    InvalidLimits(String),

    #[error("marker {0} is missing")]
    MissingMarker(&'static str),

    #[error("degenerate point cloud: {0}")]
    DegenerateCloud(String),

    #[error("cloud is not axisymmetric about z: azimuthal structure {structure:.3e} exceeds 3x meridian rms {rms:.3e}")]
    NotAxisymmetric { structure: f64, rms: f64 },

    #[error("parse error in {source_name}: {message}")]
    Parse {
        source_name: String,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn parse(source_name: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
