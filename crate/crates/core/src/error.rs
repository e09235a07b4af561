use thiserror::Error;

/// Errors raised by the engine. Each variant carries a stable machine-readable
/// code (see [`Error::code`]) used by the CLI and the HTTP layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("pose ({x:.3}, {y:.3}) lies inside solid geometry")]
    PoseInSolid { x: f64, y: f64 },
    #[error("could only place {placed} of {requested} poses within the attempt budget")]
    SamplingExhausted { placed: usize, requested: usize },
    #[error("no object with id `{0}`")]
    NoSuchObject(String),
    #[error("input shape mismatch: expected {expected}, got {got}")]
    InputShapeMismatch { expected: String, got: String },
    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },
    #[error("sim/real pair mismatch: {0}")]
    PairMismatch(String),
    #[error("selection is empty")]
    EmptySelection,
    #[error("observation carries no ground-truth pose")]
    NoGroundTruth,
    #[error("geo grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("image encoding failed: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::PoseInSolid { .. } => "POSE_IN_SOLID",
            Error::SamplingExhausted { .. } => "SAMPLING_EXHAUSTED",
            Error::NoSuchObject(_) => "NO_SUCH_OBJECT",
            Error::InputShapeMismatch { .. } => "INPUT_SHAPE_MISMATCH",
            Error::TrainingDiverged { .. } => "TRAINING_DIVERGED",
            Error::PairMismatch(_) => "PAIR_MISMATCH",
            Error::EmptySelection => "EMPTY_SELECTION",
            Error::NoGroundTruth => "NO_GROUND_TRUTH",
            Error::GridMismatch(_) => "GRID_MISMATCH",
            Error::InvalidScene(_) => "INVALID_SCENE",
            Error::NotFound(_) => "NOT_FOUND",
            Error::InvalidArgument(_) => "INVALID_ARGUMENT",
            Error::Format(_) => "MALFORMED_FILE",
            Error::Io(_) => "IO",
            Error::Json(_) => "JSON",
            Error::Csv(_) => "CSV",
            Error::Image(_) => "IMAGE",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
