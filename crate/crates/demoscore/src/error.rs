//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("unsupported demonstration quality: {0}")]
    UnsupportedQuality(String),

    #[error("trajectory set has no actions but they are required: {0}")]
    MissingActions(String),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    TrainingDiverged { epoch: usize },

    #[error("replay failed at step {step}: model output is not finite")]
    ReplayFailed { step: usize },

    #[error("model was trained for {model_tag} but the target environment is {target_tag}")]
    ModelTagMismatch { model_tag: String, target_tag: String },

    #[error(
        "degenerate calibration: max distance {max_distance} does not exceed min distance {min_distance}"
    )]
    DegenerateCalibration { min_distance: f64, max_distance: f64 },

    #[error("no feasible trajectory available for the best-return table")]
    NoFeasibleRecord,

    #[error("score lists are not aligned: {0}")]
    ScoreIdMismatch(String),

    #[error("empty sampling support: all transition weights are zero; loosen the thresholds")]
    EmptySupport,

    #[error("empty trajectory set")]
    EmptySet,

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Tag an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

/// Extension for tagging `Result`s with a stage name.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
