use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("temperature needs at least 2 atoms, got {0}")]
    DegreesOfFreedom(usize),

    #[error("gro line {line}: {msg}")]
    GroParse { line: usize, msg: String },

    #[error("synthetic system: {0}")]
    Synthetic(String),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("atoms {i} and {j} overlap at r = {r:.3e} nm")]
    Overlap { i: usize, j: usize, r: f64 },

    #[error("integration: atom {atom}: {msg}")]
    Integration { atom: usize, msg: String },

    #[error("steepest descent stalled: step size {step:.3e} nm below limit")]
    Stall { step: f64 },

    #[error("model: {0}")]
    Model(String),

    #[error("training: {0}")]
    Training(String),

    #[error("receptive field: halo width {halo} nm is below the required {required} nm")]
    ReceptiveField { halo: f64, required: f64 },

    #[error("halo topology: {0}")]
    HaloTopology(String),

    #[error("decomposition: {0}")]
    Decomposition(String),

    #[error("force routing: {0}")]
    Routing(String),

    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("stage {stage} blew up at step {step}: {msg}")]
    Blowup { stage: String, step: u64, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::GroParse { .. } | Error::Json(_) => 1,
            Error::Overlap { .. }
            | Error::Integration { .. }
            | Error::Stall { .. }
            | Error::Blowup { .. }
            | Error::Training(_) => 2,
            _ => 3,
        }
    }
}
