use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("linear map is singular (|det| = {det:e} below floor {floor:e})")]
    SingularMap { det: f64, floor: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("restricted image is degenerate (volume factor {value:e})")]
    DegenerateImage { value: f64 },

    #[error("E and F are nearly parallel (smallest principal angle {angle:e})")]
    DegenerateSplitting { angle: f64 },

    #[error("orbit left the region at step {step}")]
    OrbitEscaped { step: usize },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("no grid scale certifies the domination robustness radius")]
    EmptyRadius,

    #[error("disk leaves the chart: {0}")]
    ChartOverflow(String),

    #[error("adjacent samples {i} and {j} are {spacing:e} apart (ceiling {ceiling:e}); refine the disk")]
    ResolutionExhausted {
        i: usize,
        j: usize,
        spacing: f64,
        ceiling: f64,
    },

    #[error("carving failed: {0}")]
    CarvingFailed(String),

    #[error("tangent plane at sample {sample} leaves the unit cone over the base plane at sample {base}")]
    DegenerateTangent { base: usize, sample: usize },

    #[error("curvature constants invalid: {0}")]
    ConstantsInvalid(String),

    #[error("measure has zero total mass")]
    ZeroMass,

    #[error("model construction failed: {0}")]
    ConstructionFailed(String),

    #[error("splitting did not converge: residual {residual:e} at depth {depth} exceeds {previous:e} at depth {half}")]
    NoConvergence {
        depth: usize,
        residual: f64,
        half: usize,
        previous: f64,
    },

    #[error("constant chain (H) is infeasible: {0}")]
    ChainInfeasible(String),

    #[error("invalid config at `{path}`: {message}")]
    ConfigInvalid { path: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown {kind} `{name}`; valid names: {valid}")]
    UnknownName {
        kind: &'static str,
        name: String,
        valid: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn hypothesis(msg: impl Into<String>) -> Self {
        Error::HypothesisViolated(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
