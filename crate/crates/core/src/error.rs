use thiserror::Error;

/// Errors raised by measure construction and the numerical pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    Empty,

    #[error("length mismatch: {points} points vs {weights} weights")]
    LengthMismatch { points: usize, weights: usize },

    #[error("negative weight at index {0}")]
    NegativeWeight(usize),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("all weights are zero")]
    ZeroMass,

    #[error("unsupported dimension {0} (expected 2 or 3)")]
    UnsupportedDim(usize),

    #[error("map {index} is not contracting (ratio {ratio})")]
    NonContracting { index: usize, ratio: f64 },

    #[error("grid too small: the lattice interior must contain the box {required}")]
    GridTooSmall { required: String },

    #[error("point {point} is in or touches the support (support distance {distance})")]
    InSupport { point: String, distance: f64 },

    #[error("supports overlap: atom {index} of nu has support distance {distance} to mu (required > {required})")]
    SupportsOverlap {
        index: usize,
        distance: f64,
        required: f64,
    },

    #[error("histogram too small for support: {0}")]
    HistogramTooSmall(String),

    #[error("mismatched grids: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("empty scan region after masking")]
    EmptyScan,

    #[error("report holds a single sphere resolution; refinement growth needs at least two")]
    SingleResolution,

    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
