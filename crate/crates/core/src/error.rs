use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid density operator: {0}")]
    InvalidState(String),

    #[error("Kraus operators are not trace preserving (max deviation {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("invalid layout: {0}")]
    Layout(String),

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("topology is not NCDS: nodes `{0}` and `{1}` share more than one source")]
    NotNcds(String, String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no sign change of the criterion margin on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),

    #[error("malformed NCMX data: {0}")]
    Format(String),

    #[error("malformed specification: {0}")]
    Spec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
