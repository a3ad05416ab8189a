use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pose: {0}")]
    InvalidPose(String),

    #[error("degenerate look-at: {0}")]
    DegenerateLookAt(&'static str),

    #[error("camera rig needs at least one source view")]
    EmptyRig,

    #[error("all intermediate weights are zero")]
    DegenerateWeights,

    #[error("degenerate rig: {0}")]
    DegenerateRig(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("image too small for SSIM: {width}x{height}, need at least 11x11")]
    ImageTooSmall { width: usize, height: usize },

    #[error("no camera within {max_angle} rad after {attempts} attempts")]
    ExhaustedSampling { max_angle: f64, attempts: usize },

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    DivergedTraining { epoch: usize, loss: f64 },

    #[error("scene {scene_id}: {source}")]
    Scene {
        scene_id: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dims(expected: usize, got: usize) -> Self {
        Error::DimensionMismatch { expected, got }
    }
}
